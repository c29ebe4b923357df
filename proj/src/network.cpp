#include "redolab/network.hpp"

#include <cmath>
#include <stdexcept>

namespace redolab {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::identity: return "identity";
    }
    return "?";
}

double InitSpec::limit(std::size_t in_dim) const {
    return gain * std::sqrt(3.0 / static_cast<double>(in_dim));
}

std::size_t Network::unpruned_hidden_count() const {
    std::size_t n = 0;
    for (const auto& mask : prune_mask)
        for (bool m : mask)
            if (!m) ++n;
    return n;
}

Network build_network(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("build_network: no layers");
    for (std::size_t l = 0; l + 1 < specs.size(); ++l) {
        if (specs[l].out_dim != specs[l + 1].in_dim)
            throw std::invalid_argument("build_network: layer " + std::to_string(l) + " out_dim " +
                                        std::to_string(specs[l].out_dim) +
                                        " != layer " + std::to_string(l + 1) + " in_dim " +
                                        std::to_string(specs[l + 1].in_dim));
    }
    Network net;
    net.specs = specs;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        auto& spec = net.specs[l];
        if (spec.in_dim == 0 || spec.out_dim == 0)
            throw std::invalid_argument("build_network: zero-sized layer " + std::to_string(l));
        // Each layer owns a seed stream so columns can be re-drawn later
        // from the same distribution.
        spec.init.stream = derive_seed(seed, l);
        Rng rng(spec.init.stream);
        const double limit = spec.init.limit(spec.in_dim);
        Matrix w(spec.in_dim, spec.out_dim);
        for (double& v : w.data) v = rng.uniform(-limit, limit);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(spec.out_dim, 0.0);
        if (l + 1 < specs.size()) net.prune_mask.emplace_back(spec.out_dim, false);
    }
    return net;
}

void resample_incoming(Network& net, std::size_t layer, std::size_t neuron, Rng& rng) {
    const auto& spec = net.specs[layer];
    const double limit = spec.init.limit(spec.in_dim);
    for (std::size_t i = 0; i < spec.in_dim; ++i)
        net.weights[layer](i, neuron) = rng.uniform(-limit, limit);
    // weights from pruned upstream neurons stay zero
    if (layer > 0) {
        for (std::size_t i = 0; i < net.prune_mask[layer - 1].size(); ++i)
            if (net.prune_mask[layer - 1][i]) net.weights[layer](i, neuron) = 0.0;
    }
    net.biases[layer][neuron] = 0.0;  // matches the original bias init
}

namespace {

void apply_activation(Matrix& z, const LayerSpec& spec) {
    switch (spec.activation) {
        case Activation::relu:
            for (double& v : z.data)
                if (v < 0.0) v = 0.0;
            break;
        case Activation::leaky_relu:
            for (double& v : z.data)
                if (v < 0.0) v *= spec.leaky_slope;
            break;
        case Activation::identity:
            break;
    }
}

// derivative w.r.t. pre-activation; relu'(0) = 0, leaky'(0-) = slope
double activation_grad(double z, const LayerSpec& spec) {
    switch (spec.activation) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_relu: return z > 0.0 ? 1.0 : spec.leaky_slope;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

void mask_columns(Matrix& m, const std::vector<bool>& mask) {
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (!mask[j]) continue;
        for (std::size_t i = 0; i < m.rows; ++i) m(i, j) = 0.0;
    }
}

Matrix layer_forward(const Network& net, std::size_t l, const Matrix& x) {
    Matrix z = matmul(x, net.weights[l]);
    const auto& b = net.biases[l];
    for (std::size_t i = 0; i < z.rows; ++i) {
        double* row = z.row_ptr(i);
        for (std::size_t j = 0; j < z.cols; ++j) row[j] += b[j];
    }
    return z;
}

}  // namespace

ForwardResult forward(const Network& net, const Matrix& batch) {
    if (batch.cols != net.input_dim())
        throw std::invalid_argument("forward: batch cols " + std::to_string(batch.cols) +
                                    " != input dim " + std::to_string(net.input_dim()));
    if (!all_finite(batch)) throw std::invalid_argument("forward: non-finite input");

    ForwardResult res;
    res.trace.batch_size = batch.rows;
    Matrix x = batch;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Matrix z = layer_forward(net, l, x);
        apply_activation(z, net.specs[l]);
        if (l + 1 < net.layer_count()) {
            mask_columns(z, net.prune_mask[l]);
            res.trace.hidden.push_back(z);
        }
        x = std::move(z);
    }
    res.outputs = std::move(x);
    return res;
}

std::vector<double> forward_one(const Network& net, const std::vector<double>& obs) {
    Matrix batch(1, obs.size());
    batch.data = obs;
    Matrix out = forward(net, batch).outputs;
    return out.data;
}

Gradients zero_gradients(const Network& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights.emplace_back(net.specs[l].in_dim, net.specs[l].out_dim);
        g.biases.emplace_back(net.specs[l].out_dim, 0.0);
    }
    return g;
}

Gradients backward(const Network& net, const Matrix& batch, const Matrix& loss_grad) {
    if (batch.cols != net.input_dim())
        throw std::invalid_argument("backward: batch cols != input dim");
    if (loss_grad.rows != batch.rows || loss_grad.cols != net.output_dim())
        throw std::invalid_argument("backward: loss_grad shape mismatch");

    const std::size_t L = net.layer_count();

    // forward, keeping pre-activations and layer inputs
    std::vector<Matrix> inputs;  // inputs[l] = input to layer l
    std::vector<Matrix> preact;  // preact[l] = X*W + b before activation
    inputs.push_back(batch);
    for (std::size_t l = 0; l < L; ++l) {
        Matrix z = layer_forward(net, l, inputs[l]);
        preact.push_back(z);
        apply_activation(z, net.specs[l]);
        if (l + 1 < L) mask_columns(z, net.prune_mask[l]);
        inputs.push_back(std::move(z));
    }

    Gradients g = zero_gradients(net);
    Matrix grad = loss_grad;  // dL/d(post-activation of layer l)
    for (std::size_t li = L; li-- > 0;) {
        // masked neurons are cut out of the graph entirely
        if (li + 1 < L) mask_columns(grad, net.prune_mask[li]);
        Matrix gz = grad;  // dL/d(pre-activation)
        for (std::size_t i = 0; i < gz.rows; ++i) {
            double* grow = gz.row_ptr(i);
            const double* zrow = preact[li].row_ptr(i);
            for (std::size_t j = 0; j < gz.cols; ++j)
                grow[j] *= activation_grad(zrow[j], net.specs[li]);
        }
        g.weights[li] = matmul_at_b(inputs[li], gz);
        for (std::size_t i = 0; i < gz.rows; ++i) {
            const double* grow = gz.row_ptr(i);
            for (std::size_t j = 0; j < gz.cols; ++j) g.biases[li][j] += grow[j];
        }
        if (li > 0) grad = matmul_a_bt(gz, net.weights[li]);
    }

    // force exact zeros on every parameter owned by a pruned neuron
    for (std::size_t l = 0; l < net.prune_mask.size(); ++l) {
        for (std::size_t i = 0; i < net.prune_mask[l].size(); ++i) {
            if (!net.prune_mask[l][i]) continue;
            for (std::size_t r = 0; r < g.weights[l].rows; ++r) g.weights[l](r, i) = 0.0;
            g.biases[l][i] = 0.0;
            for (std::size_t c = 0; c < g.weights[l + 1].cols; ++c) g.weights[l + 1](i, c) = 0.0;
        }
    }
    return g;
}

}  // namespace redolab
