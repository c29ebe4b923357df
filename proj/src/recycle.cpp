#include "redolab/recycle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "redolab/dormancy.hpp"

namespace redolab {

std::string selection_name(SelectionKind k) {
    switch (k) {
        case SelectionKind::threshold: return "threshold";
        case SelectionKind::score: return "score";
        case SelectionKind::inverse_score: return "inverse_score";
        case SelectionKind::random: return "random";
        case SelectionKind::utility: return "utility";
    }
    return "?";
}

double cosine_fraction(std::uint64_t t, std::uint64_t horizon) {
    if (horizon == 0) throw std::invalid_argument("cosine_fraction: zero horizon");
    if (t > horizon) throw std::invalid_argument("cosine_fraction: t > horizon");
    return 0.05 * (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(t) /
                                  static_cast<double>(horizon)));
}

namespace {

void recycle_neuron(Network& net, std::size_t layer, std::size_t neuron,
                    const RecycleStrategy& strategy, OptState& opt, Rng& rng,
                    double mean_live_norm) {
    switch (strategy.incoming) {
        case IncomingReinit::reinit_original:
            resample_incoming(net, layer, neuron, rng);
            break;
        case IncomingReinit::norm_scaled: {
            double norm2 = 0.0;
            for (std::size_t i = 0; i < net.weights[layer].rows; ++i) {
                const double v = net.weights[layer](i, neuron);
                norm2 += v * v;
            }
            const double norm = std::sqrt(norm2);
            if (norm == 0.0 || mean_live_norm == 0.0) {
                // nothing to scale against; fall back to re-drawing
                resample_incoming(net, layer, neuron, rng);
            } else {
                const double scale = mean_live_norm / norm;
                for (std::size_t i = 0; i < net.weights[layer].rows; ++i)
                    net.weights[layer](i, neuron) *= scale;
                net.biases[layer][neuron] = 0.0;
            }
            break;
        }
    }
    const std::size_t next = layer + 1;
    switch (strategy.outgoing) {
        case OutgoingReinit::zero:
            for (std::size_t c = 0; c < net.weights[next].cols; ++c)
                net.weights[next](neuron, c) = 0.0;
            break;
        case OutgoingReinit::random_init: {
            const double limit = net.specs[next].init.limit(net.specs[next].in_dim);
            for (std::size_t c = 0; c < net.weights[next].cols; ++c)
                net.weights[next](neuron, c) = rng.uniform(-limit, limit);
            break;
        }
    }
    // stale moments would drive the fresh weights with old statistics
    opt.reset_incoming(layer, neuron);
    opt.reset_outgoing(layer, neuron);
}

// mean L2 norm of the incoming columns of the non-selected, unpruned neurons
double mean_live_incoming_norm(const Network& net, std::size_t layer,
                               const std::set<std::size_t>& selected) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < net.specs[layer].out_dim; ++j) {
        if (selected.count(j) || net.prune_mask[layer][j]) continue;
        double norm2 = 0.0;
        for (std::size_t i = 0; i < net.weights[layer].rows; ++i) {
            const double v = net.weights[layer](i, j);
            norm2 += v * v;
        }
        total += std::sqrt(norm2);
        ++count;
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace

RecycleEvent recycle_selected(Network& net, const std::vector<std::set<std::size_t>>& selected,
                              const RecycleStrategy& strategy, OptState& opt, Rng& rng,
                              std::uint64_t step_grad, const std::string& label,
                              double tau_or_fraction) {
    if (selected.size() != net.hidden_layer_count())
        throw std::invalid_argument("recycle_selected: expected one set per hidden layer");
    if (!opt.initialized()) opt.init_buffers(net);

    RecycleEvent event;
    event.step_grad = step_grad;
    event.strategy = label;
    event.tau_or_fraction = tau_or_fraction;
    for (std::size_t l = 0; l < selected.size(); ++l) {
        std::vector<std::size_t> recycled;
        const double live_norm = strategy.incoming == IncomingReinit::norm_scaled
                                     ? mean_live_incoming_norm(net, l, selected[l])
                                     : 0.0;
        for (std::size_t i : selected[l]) {
            if (i >= net.specs[l].out_dim)
                throw std::out_of_range("recycle_selected: neuron index out of range");
            if (net.prune_mask[l][i]) continue;  // pruned neurons stay out of recycling
            recycle_neuron(net, l, i, strategy, opt, rng, live_norm);
            recycled.push_back(i);
        }
        event.recycled.push_back(std::move(recycled));
    }
    return event;
}

RecycleEvent redo_step(Network& net, const ActivationTrace& trace, double tau,
                       const RecycleStrategy& strategy, OptState& opt, Rng& rng,
                       std::uint64_t step_grad) {
    if (trace.hidden.size() != net.hidden_layer_count())
        throw std::invalid_argument("redo_step: trace/network mismatch");
    for (std::size_t l = 0; l < trace.hidden.size(); ++l)
        if (trace.hidden[l].cols != net.specs[l].out_dim)
            throw std::invalid_argument("redo_step: trace width mismatch in layer " +
                                        std::to_string(l));
    if (tau < 0.0) throw std::invalid_argument("redo_step: tau must be >= 0");

    const auto scores = neuron_scores(trace);
    std::vector<std::set<std::size_t>> dormant;
    dormant.reserve(scores.size());
    for (std::size_t l = 0; l < scores.size(); ++l)
        dormant.push_back(dormant_set(scores[l], tau, net.prune_mask[l]));
    return recycle_selected(net, dormant, strategy, opt, rng, step_grad, "redo", tau);
}

std::vector<std::set<std::size_t>> select_for_recycling(
    const std::vector<std::vector<double>>& scores, const SelectionStrategy& strategy,
    const Network& net, Rng& rng) {
    if (scores.size() != net.hidden_layer_count())
        throw std::invalid_argument("select_for_recycling: expected scores per hidden layer");
    if (strategy.fraction < 0.0 || strategy.fraction > 1.0)
        throw std::invalid_argument("select_for_recycling: fraction must be in [0, 1]");

    std::vector<std::set<std::size_t>> out;
    for (std::size_t l = 0; l < scores.size(); ++l) {
        const auto& mask = net.prune_mask[l];
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < scores[l].size(); ++i)
            if (!mask[i]) candidates.push_back(i);

        if (strategy.kind == SelectionKind::threshold) {
            out.push_back(dormant_set(scores[l], strategy.tau, mask));
            continue;
        }

        const std::size_t take = std::min(
            candidates.size(),
            static_cast<std::size_t>(std::ceil(strategy.fraction *
                                               static_cast<double>(scores[l].size()))));
        std::set<std::size_t> chosen;
        switch (strategy.kind) {
            case SelectionKind::random: {
                // partial Fisher-Yates: first `take` entries are the sample
                for (std::size_t i = 0; i < take; ++i) {
                    const std::size_t j = i + rng.uniform_int(candidates.size() - i);
                    std::swap(candidates[i], candidates[j]);
                    chosen.insert(candidates[i]);
                }
                break;
            }
            case SelectionKind::score:
            case SelectionKind::inverse_score:
            case SelectionKind::utility: {
                std::vector<double> key(scores[l].size());
                if (strategy.kind == SelectionKind::utility) {
                    for (std::size_t i = 0; i < key.size(); ++i) {
                        double l1 = 0.0;
                        for (std::size_t c = 0; c < net.weights[l + 1].cols; ++c)
                            l1 += std::fabs(net.weights[l + 1](i, c));
                        key[i] = scores[l][i] * l1;
                    }
                } else {
                    key = scores[l];
                }
                const bool descending = strategy.kind == SelectionKind::inverse_score;
                std::stable_sort(candidates.begin(), candidates.end(),
                                 [&](std::size_t a, std::size_t b) {
                                     if (key[a] != key[b])
                                         return descending ? key[a] > key[b] : key[a] < key[b];
                                     return a < b;  // ties toward the lowest index
                                 });
                for (std::size_t i = 0; i < take; ++i) chosen.insert(candidates[i]);
                break;
            }
            case SelectionKind::threshold:
                break;  // handled above
        }
        out.push_back(std::move(chosen));
    }
    return out;
}

void reset_last_layers(Network& net, std::size_t k, OptState& opt, Rng& rng) {
    if (k < 1 || k > net.layer_count())
        throw std::invalid_argument("reset_last_layers: k must be in [1, layer count]");
    if (!opt.initialized()) opt.init_buffers(net);
    for (std::size_t l = net.layer_count() - k; l < net.layer_count(); ++l) {
        const double limit = net.specs[l].init.limit(net.specs[l].in_dim);
        for (double& v : net.weights[l].data) v = rng.uniform(-limit, limit);
        std::fill(net.biases[l].begin(), net.biases[l].end(), 0.0);
        opt.reset_layer(l);
        if (l < net.prune_mask.size())
            std::fill(net.prune_mask[l].begin(), net.prune_mask[l].end(), false);
        // neurons pruned in the preceding (non-reset) layer must keep their
        // outgoing rows at zero
        if (l > 0 && l == net.layer_count() - k) {
            for (std::size_t i = 0; i < net.prune_mask[l - 1].size(); ++i) {
                if (!net.prune_mask[l - 1][i]) continue;
                for (std::size_t c = 0; c < net.weights[l].cols; ++c) net.weights[l](i, c) = 0.0;
            }
        }
    }
}

}  // namespace redolab
