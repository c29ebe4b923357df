#pragma once

#include <cstdint>
#include <vector>

#include "redolab/envs.hpp"
#include "redolab/rng.hpp"

namespace redolab {

// One sampled n-step training item: the window's first (s, a), the rewards
// collected over at most n consecutive same-episode transitions, and the
// bootstrap state the window ended on. `terminal` means the window hit an
// episode end, so nothing is bootstrapped past it.
struct NStepItem {
    std::vector<double> s;
    std::size_t a = 0;
    std::vector<double> rewards;
    std::vector<double> s_boot;
    bool terminal = false;
};

// Uniform-sampling ring buffer. n-step windows are assembled from
// consecutive transitions of one episode, truncated either at a terminal or
// at the newest stored transition (bootstrapping from the cut point).
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::size_t n_step, double gamma);

    void push(const Transition& t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t n_step() const { return n_step_; }
    double gamma() const { return gamma_; }

    // Assembles the window starting at logical index i (0 = oldest).
    NStepItem item_at(std::size_t i) const;

    // batch_size windows at uniformly drawn start indices (with replacement)
    std::vector<NStepItem> sample(std::size_t batch_size, Rng& rng) const;

    // uniformly drawn stored states (used for scoring batches)
    std::vector<std::vector<double>> sample_states(std::size_t batch_size, Rng& rng) const;

private:
    struct Stored {
        Transition t;
        std::uint64_t episode = 0;
    };

    std::size_t capacity_;
    std::size_t n_step_;
    double gamma_;
    std::vector<Stored> items_;  // ring; start_ is the oldest element
    std::size_t start_ = 0;
    std::uint64_t episode_counter_ = 0;

    const Stored& at(std::size_t logical) const {
        return items_[(start_ + logical) % items_.size()];
    }
};

}  // namespace redolab
