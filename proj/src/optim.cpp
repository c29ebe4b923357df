#include "redolab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace redolab {

OptState OptState::sgd_momentum(double lr, double momentum, double weight_decay) {
    OptState o;
    o.kind = OptKind::sgd;
    o.learning_rate = lr;
    o.momentum = momentum;
    o.weight_decay = weight_decay;
    return o;
}

OptState OptState::adam(double lr, double weight_decay, double beta1, double beta2, double eps) {
    OptState o;
    o.kind = OptKind::adam;
    o.learning_rate = lr;
    o.weight_decay = weight_decay;
    o.beta1 = beta1;
    o.beta2 = beta2;
    o.eps = eps;
    return o;
}

void OptState::init_buffers(const Network& net) {
    m_w.clear();
    m_b.clear();
    v_w.clear();
    v_b.clear();
    step = 0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        m_w.emplace_back(net.specs[l].in_dim, net.specs[l].out_dim);
        m_b.emplace_back(net.specs[l].out_dim, 0.0);
        v_w.emplace_back(net.specs[l].in_dim, net.specs[l].out_dim);
        v_b.emplace_back(net.specs[l].out_dim, 0.0);
    }
}

void OptState::reset_incoming(std::size_t layer, std::size_t neuron) {
    for (std::size_t i = 0; i < m_w[layer].rows; ++i) {
        m_w[layer](i, neuron) = 0.0;
        v_w[layer](i, neuron) = 0.0;
    }
    m_b[layer][neuron] = 0.0;
    v_b[layer][neuron] = 0.0;
}

void OptState::reset_outgoing(std::size_t layer, std::size_t neuron) {
    const std::size_t next = layer + 1;
    for (std::size_t j = 0; j < m_w[next].cols; ++j) {
        m_w[next](neuron, j) = 0.0;
        v_w[next](neuron, j) = 0.0;
    }
}

void OptState::reset_layer(std::size_t layer) {
    m_w[layer].fill(0.0);
    v_w[layer].fill(0.0);
    std::fill(m_b[layer].begin(), m_b[layer].end(), 0.0);
    std::fill(v_b[layer].begin(), v_b[layer].end(), 0.0);
}

namespace {

// true if parameter (r, c) of the layer-l weight matrix belongs to a pruned
// neuron: column c is the incoming side of neuron c of layer l, row r is the
// outgoing side of neuron r of layer l-1.
inline bool weight_masked(const Network& net, std::size_t l, std::size_t r, std::size_t c) {
    if (l < net.prune_mask.size() && net.prune_mask[l][c]) return true;
    if (l > 0 && net.prune_mask[l - 1][r]) return true;
    return false;
}

inline bool bias_masked(const Network& net, std::size_t l, std::size_t c) {
    return l < net.prune_mask.size() && net.prune_mask[l][c];
}

}  // namespace

void opt_step(Network& net, const Gradients& grads, OptState& opt) {
    if (!opt.initialized()) opt.init_buffers(net);

    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (!all_finite(grads.weights[l]))
            throw std::runtime_error("opt_step: non-finite weight gradient in layer " +
                                     std::to_string(l));
        for (double v : grads.biases[l])
            if (!std::isfinite(v))
                throw std::runtime_error("opt_step: non-finite bias gradient in layer " +
                                         std::to_string(l));
    }

    const double lr = opt.learning_rate;
    const double decay = 1.0 - lr * opt.weight_decay;

    if (opt.kind == OptKind::sgd) {
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            Matrix& w = net.weights[l];
            for (std::size_t r = 0; r < w.rows; ++r) {
                for (std::size_t c = 0; c < w.cols; ++c) {
                    if (weight_masked(net, l, r, c)) continue;
                    if (opt.weight_decay > 0.0) w(r, c) *= decay;
                    double& vel = opt.m_w[l](r, c);
                    vel = opt.momentum * vel + grads.weights[l](r, c);
                    w(r, c) -= lr * vel;
                }
            }
            for (std::size_t c = 0; c < net.biases[l].size(); ++c) {
                if (bias_masked(net, l, c)) continue;
                double& vel = opt.m_b[l][c];
                vel = opt.momentum * vel + grads.biases[l][c];
                net.biases[l][c] -= lr * vel;
            }
        }
        ++opt.step;
        return;
    }

    // adam
    ++opt.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Matrix& w = net.weights[l];
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t c = 0; c < w.cols; ++c) {
                if (weight_masked(net, l, r, c)) continue;
                if (opt.weight_decay > 0.0) w(r, c) *= decay;
                const double g = grads.weights[l](r, c);
                double& m = opt.m_w[l](r, c);
                double& v = opt.v_w[l](r, c);
                m = opt.beta1 * m + (1.0 - opt.beta1) * g;
                v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
                w(r, c) -= lr * (m / bc1) / (std::sqrt(v / bc2) + opt.eps);
            }
        }
        for (std::size_t c = 0; c < net.biases[l].size(); ++c) {
            if (bias_masked(net, l, c)) continue;
            const double g = grads.biases[l][c];
            double& m = opt.m_b[l][c];
            double& v = opt.v_b[l][c];
            m = opt.beta1 * m + (1.0 - opt.beta1) * g;
            v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
            net.biases[l][c] -= lr * (m / bc1) / (std::sqrt(v / bc2) + opt.eps);
        }
    }
}

}  // namespace redolab
