#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "redolab/network.hpp"
#include "redolab/optim.hpp"

namespace redolab {

// How a recycled neuron's parameters are rewritten. The default pair
// (reinit_original, zero) recycles a neuron without changing the network's
// output on states where it was inactive.
enum class IncomingReinit {
    reinit_original,  // re-draw the incoming column from the layer's InitSpec
    norm_scaled,      // rescale the incoming column to the mean L2 norm of
                      // non-dormant neurons in the layer
};
enum class OutgoingReinit {
    zero,         // outgoing row set to 0
    random_init,  // outgoing row re-drawn from the next layer's InitSpec
};

struct RecycleStrategy {
    IncomingReinit incoming = IncomingReinit::reinit_original;
    OutgoingReinit outgoing = OutgoingReinit::zero;
};

// Which neurons get recycled. `threshold` recycles every tau-dormant neuron;
// the fraction-based kinds recycle ceil(fraction * H) neurons per layer:
//   score:         the lowest-scoring neurons (dormancy-score selection)
//   inverse_score: the highest-scoring neurons
//   random:        a seeded uniform sample
//   utility:       the lowest u_i = s_i * ||outgoing row i||_1
// Ties break toward the lowest index.
enum class SelectionKind { threshold, score, inverse_score, random, utility };

struct SelectionStrategy {
    SelectionKind kind = SelectionKind::threshold;
    double tau = 0.1;        // threshold kind
    double fraction = 0.0;   // fraction kinds, in [0, 1]
};

std::string selection_name(SelectionKind k);

struct RecycleSchedule {
    std::uint64_t period = 1000;  // gradient steps between recycle checks
    bool cosine = false;          // fraction follows the cosine schedule below
    std::uint64_t horizon = 0;    // T for the cosine schedule
};

// f(t) = 0.05 * (1 + cos(pi * t / T)): starts at 0.1, ends at 0.
double cosine_fraction(std::uint64_t t, std::uint64_t horizon);

struct RecycleEvent {
    std::uint64_t step_grad = 0;
    std::vector<std::vector<std::size_t>> recycled;  // per hidden layer
    std::string strategy;
    double tau_or_fraction = 0.0;
    bool optimizer_moments_reset = true;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& v : recycled) n += v.size();
        return n;
    }
};

// One application of the recycling rule: score the trace, pick the tau-dormant
// unpruned hidden neurons, rewrite their incoming/outgoing parameters per the
// strategy and zero the optimizer moments of every touched parameter.
RecycleEvent redo_step(Network& net, const ActivationTrace& trace, double tau,
                       const RecycleStrategy& strategy, OptState& opt, Rng& rng,
                       std::uint64_t step_grad = 0);

// Recycles an explicit per-layer selection (used by the fraction-based
// selection strategies, where the recycled count is fixed, not thresholded).
RecycleEvent recycle_selected(Network& net, const std::vector<std::set<std::size_t>>& selected,
                              const RecycleStrategy& strategy, OptState& opt, Rng& rng,
                              std::uint64_t step_grad, const std::string& label,
                              double tau_or_fraction);

// Applies a SelectionStrategy to per-layer score vectors. `net` supplies the
// prune masks and, for the utility kind, the outgoing weight rows.
std::vector<std::set<std::size_t>> select_for_recycling(
    const std::vector<std::vector<double>>& scores, const SelectionStrategy& strategy,
    const Network& net, Rng& rng);

// Reset baseline: re-draws the final k layers from their stored InitSpec,
// zeroes their optimizer moments and clears their prune masks.
void reset_last_layers(Network& net, std::size_t k, OptState& opt, Rng& rng);

}  // namespace redolab
