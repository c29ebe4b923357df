#pragma once

#include <optional>
#include <set>
#include <vector>

#include "redolab/network.hpp"

namespace redolab {

// Dormancy score of hidden neuron i: the batch-mean absolute activation,
// normalized by the mean of those values across the layer. A layer whose
// mean activation is exactly 0 gets all-zero scores (every neuron of it is
// trivially dormant). A neuron is tau-dormant when its score is <= tau.

// Per-layer score vectors for every hidden layer in the trace.
std::vector<std::vector<double>> neuron_scores(const ActivationTrace& trace);

// {i : scores[i] <= tau}, excluding indices flagged in `pruned` (pass an
// empty mask to consider every neuron).
std::set<std::size_t> dormant_set(const std::vector<double>& scores, double tau,
                                  const std::vector<bool>& pruned = {});

struct LayerDormancy {
    std::vector<double> scores;
    std::set<std::size_t> dormant;
    double dormant_fraction = 0.0;  // among unpruned neurons of this layer
};

struct DormancyReport {
    double tau = 0.0;
    std::uint64_t scoring_step = 0;  // gradient step the scoring batch was drawn at
    std::vector<LayerDormancy> layers;
    double dormant_fraction = 0.0;  // all dormant / all unpruned hidden neurons
};

// Scores the trace and thresholds at tau, skipping pruned neurons.
DormancyReport measure_dormancy(const Network& net, const ActivationTrace& trace, double tau,
                                std::uint64_t scoring_step = 0);

// |X ∩ Y| / min(|X|, |Y|); empty input -> nullopt (missing data point).
std::optional<double> overlap_coefficient(const std::set<std::size_t>& x,
                                          const std::set<std::size_t>& y);

// Tracks how persistently the same neurons stay dormant in one layer, in two
// variants: overlap of the current set against the first nonempty snapshot,
// and against the running union of everything seen so far.
class OverlapTracker {
public:
    explicit OverlapTracker(std::size_t layer_index) : layer_index_(layer_index) {}

    struct Point {
        std::uint64_t step = 0;
        std::optional<double> vs_first;
        std::optional<double> vs_union;
    };

    void observe(std::uint64_t step, const std::set<std::size_t>& dormant);
    const std::vector<Point>& series() const { return series_; }
    std::size_t layer_index() const { return layer_index_; }

private:
    std::size_t layer_index_;
    std::set<std::size_t> first_;
    std::set<std::size_t> union_;
    bool have_first_ = false;
    std::vector<Point> series_;
};

// Permanently masks the listed neurons (one index set per hidden layer):
// outgoing weight rows are zeroed and the neurons drop out of scores,
// gradients and recycling from now on.
void prune_dormant(Network& net, const std::vector<std::set<std::size_t>>& dormant_per_layer);

}  // namespace redolab
