#include "redolab/dormancy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace redolab {

std::vector<std::vector<double>> neuron_scores(const ActivationTrace& trace) {
    if (trace.batch_size == 0) throw std::invalid_argument("neuron_scores: empty trace");
    std::vector<std::vector<double>> all;
    all.reserve(trace.hidden.size());
    for (const auto& h : trace.hidden) {
        const std::size_t width = h.cols;
        std::vector<double> mean_abs(width, 0.0);
        for (std::size_t i = 0; i < h.rows; ++i) {
            const double* row = h.row_ptr(i);
            for (std::size_t j = 0; j < width; ++j) mean_abs[j] += std::fabs(row[j]);
        }
        double layer_mean = 0.0;
        for (double& v : mean_abs) {
            v /= static_cast<double>(h.rows);
            layer_mean += v;
        }
        layer_mean /= static_cast<double>(width);
        if (layer_mean == 0.0) {
            // degenerate all-zero layer: every score is 0
            std::fill(mean_abs.begin(), mean_abs.end(), 0.0);
        } else {
            for (double& v : mean_abs) v /= layer_mean;
        }
        all.push_back(std::move(mean_abs));
    }
    return all;
}

std::set<std::size_t> dormant_set(const std::vector<double>& scores, double tau,
                                  const std::vector<bool>& pruned) {
    if (tau < 0.0) throw std::invalid_argument("dormant_set: tau must be >= 0");
    std::set<std::size_t> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!pruned.empty() && pruned[i]) continue;
        if (scores[i] <= tau) out.insert(i);
    }
    return out;
}

DormancyReport measure_dormancy(const Network& net, const ActivationTrace& trace, double tau,
                                std::uint64_t scoring_step) {
    if (trace.hidden.size() != net.hidden_layer_count())
        throw std::invalid_argument("measure_dormancy: trace/network layer count mismatch");
    DormancyReport report;
    report.tau = tau;
    report.scoring_step = scoring_step;
    auto scores = neuron_scores(trace);
    std::size_t total_dormant = 0;
    std::size_t total_unpruned = 0;
    for (std::size_t l = 0; l < scores.size(); ++l) {
        LayerDormancy layer;
        layer.scores = std::move(scores[l]);
        layer.dormant = dormant_set(layer.scores, tau, net.prune_mask[l]);
        std::size_t unpruned = 0;
        for (bool m : net.prune_mask[l])
            if (!m) ++unpruned;
        layer.dormant_fraction =
            unpruned == 0 ? 0.0
                          : static_cast<double>(layer.dormant.size()) / static_cast<double>(unpruned);
        total_dormant += layer.dormant.size();
        total_unpruned += unpruned;
        report.layers.push_back(std::move(layer));
    }
    if (total_unpruned == 0) throw std::invalid_argument("measure_dormancy: no hidden neurons");
    report.dormant_fraction =
        static_cast<double>(total_dormant) / static_cast<double>(total_unpruned);
    return report;
}

std::optional<double> overlap_coefficient(const std::set<std::size_t>& x,
                                          const std::set<std::size_t>& y) {
    if (x.empty() || y.empty()) return std::nullopt;
    std::size_t inter = 0;
    const auto& small = x.size() <= y.size() ? x : y;
    const auto& large = x.size() <= y.size() ? y : x;
    for (std::size_t v : small) inter += large.count(v);
    return static_cast<double>(inter) / static_cast<double>(std::min(x.size(), y.size()));
}

void OverlapTracker::observe(std::uint64_t step, const std::set<std::size_t>& dormant) {
    Point p;
    p.step = step;
    if (!have_first_ && !dormant.empty()) {
        first_ = dormant;
        have_first_ = true;
    }
    p.vs_first = have_first_ ? overlap_coefficient(dormant, first_) : std::nullopt;
    p.vs_union = union_.empty() ? std::nullopt : overlap_coefficient(dormant, union_);
    union_.insert(dormant.begin(), dormant.end());
    series_.push_back(p);
}

void prune_dormant(Network& net, const std::vector<std::set<std::size_t>>& dormant_per_layer) {
    if (dormant_per_layer.size() != net.prune_mask.size())
        throw std::invalid_argument("prune_dormant: expected one index set per hidden layer");
    for (std::size_t l = 0; l < dormant_per_layer.size(); ++l) {
        for (std::size_t i : dormant_per_layer[l]) {
            if (i >= net.prune_mask[l].size())
                throw std::out_of_range("prune_dormant: neuron " + std::to_string(i) +
                                        " out of range in layer " + std::to_string(l));
            if (net.prune_mask[l][i])
                throw std::invalid_argument("prune_dormant: neuron " + std::to_string(i) +
                                            " in layer " + std::to_string(l) +
                                            " is already pruned");
            net.prune_mask[l][i] = true;
            for (std::size_t c = 0; c < net.weights[l + 1].cols; ++c)
                net.weights[l + 1](i, c) = 0.0;
        }
    }
}

}  // namespace redolab
