#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "redolab/matrix.hpp"
#include "redolab/rng.hpp"

namespace redolab {

enum class Activation { relu, leaky_relu, identity };

std::string activation_name(Activation a);

// The remembered original weight distribution of a layer. Weights are drawn
// from Uniform(-L, L) with L = gain * sqrt(3 / in_dim); biases start at 0.
// Kept on the network so dormant neurons can be re-drawn from the same
// distribution later.
struct InitSpec {
    double gain = 1.0;
    std::uint64_t stream = 0;  // seed-stream id assigned at build time

    double limit(std::size_t in_dim) const;
};

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::relu;
    double leaky_slope = 0.01;
    InitSpec init;
};

// Post-activation values of every hidden layer for one scoring batch.
struct ActivationTrace {
    std::size_t batch_size = 0;
    std::vector<Matrix> hidden;  // one (batch x H) matrix per hidden layer
};

struct Gradients {
    std::vector<Matrix> weights;              // dL/dW per layer, in_dim x out_dim
    std::vector<std::vector<double>> biases;  // dL/db per layer
};

// Dense feedforward net. Layer l maps in_dim -> out_dim via X * W + b.
// prune_mask[l][i] marks hidden neuron i of layer l as permanently removed:
// its activation is forced to 0, its outgoing weight row stays 0 and none of
// its parameters receive gradients or optimizer updates. The last layer's
// outputs are never maskable.
class Network {
public:
    std::vector<LayerSpec> specs;
    std::vector<Matrix> weights;              // specs[l].in_dim x specs[l].out_dim
    std::vector<std::vector<double>> biases;  // length specs[l].out_dim
    std::vector<std::vector<bool>> prune_mask;  // per hidden layer (layers 0..L-2)

    std::size_t layer_count() const { return specs.size(); }
    std::size_t hidden_layer_count() const { return specs.empty() ? 0 : specs.size() - 1; }
    std::size_t input_dim() const { return specs.front().in_dim; }
    std::size_t output_dim() const { return specs.back().out_dim; }

    bool is_pruned(std::size_t layer, std::size_t neuron) const {
        return prune_mask[layer][neuron];
    }
    std::size_t unpruned_hidden_count() const;
};

Network build_network(const std::vector<LayerSpec>& specs, std::uint64_t seed);

// Re-draws one incoming weight column of `layer` from its stored InitSpec.
void resample_incoming(Network& net, std::size_t layer, std::size_t neuron, Rng& rng);

// Forward pass; records every hidden layer's post-activation in the trace.
struct ForwardResult {
    Matrix outputs;
    ActivationTrace trace;
};
ForwardResult forward(const Network& net, const Matrix& batch);

// Convenience: forward for a single observation vector, returns the output row.
std::vector<double> forward_one(const Network& net, const std::vector<double>& obs);

// Backpropagation of loss_grad (dL/doutputs) through the net. Pruned neurons
// receive exactly-zero gradients for incoming and outgoing weights.
Gradients backward(const Network& net, const Matrix& batch, const Matrix& loss_grad);

Gradients zero_gradients(const Network& net);

// Checkpoint I/O: versioned structured-text dump, bit-exact round trip
// (doubles are written as C hexfloats). Layout documented in checkpoint.cpp.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace redolab
