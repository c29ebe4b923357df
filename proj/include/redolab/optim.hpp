#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "redolab/network.hpp"

namespace redolab {

enum class OptKind { sgd, adam };

// Optimizer state for one network. Weight decay is decoupled and applied to
// weights only (never biases): p <- p * (1 - lr*wd) before the gradient step.
// Parameters of pruned neurons are skipped entirely, decay included.
struct OptState {
    OptKind kind = OptKind::adam;
    double learning_rate = 6.25e-5;
    double weight_decay = 0.0;

    // sgd
    double momentum = 0.0;

    // adam
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1.5e-4;
    std::uint64_t step = 0;  // adam bias-correction counter

    // first-moment (or momentum velocity) and second-moment buffers,
    // shaped like the parameters
    std::vector<Matrix> m_w;
    std::vector<std::vector<double>> m_b;
    std::vector<Matrix> v_w;
    std::vector<std::vector<double>> v_b;

    static OptState sgd_momentum(double lr, double momentum, double weight_decay = 0.0);
    static OptState adam(double lr, double weight_decay = 0.0, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1.5e-4);

    void init_buffers(const Network& net);
    bool initialized() const { return !m_w.empty(); }

    // Zeroes the moment entries of one neuron's incoming column + bias.
    void reset_incoming(std::size_t layer, std::size_t neuron);
    // Zeroes the moment entries of one neuron's outgoing row (in layer+1).
    void reset_outgoing(std::size_t layer, std::size_t neuron);
    // Zeroes all moments of one layer.
    void reset_layer(std::size_t layer);
};

// One optimizer step over every unmasked parameter. Throws (naming the layer)
// on non-finite gradients.
void opt_step(Network& net, const Gradients& grads, OptState& opt);

}  // namespace redolab
