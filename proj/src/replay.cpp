#include "redolab/replay.hpp"

#include <stdexcept>

namespace redolab {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t n_step, double gamma)
    : capacity_(capacity), n_step_(n_step), gamma_(gamma) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
    if (n_step == 0) throw std::invalid_argument("ReplayBuffer: n_step must be >= 1");
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("ReplayBuffer: gamma must be in [0, 1)");
}

void ReplayBuffer::push(const Transition& t) {
    Stored s{t, episode_counter_};
    if (t.done) ++episode_counter_;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(s));
    } else {
        items_[start_] = std::move(s);
        start_ = (start_ + 1) % items_.size();
    }
}

NStepItem ReplayBuffer::item_at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("ReplayBuffer::item_at");
    const Stored& first = at(i);
    NStepItem item;
    item.s = first.t.s;
    item.a = first.t.a;
    for (std::size_t k = 0; k < n_step_; ++k) {
        const std::size_t idx = i + k;
        if (idx >= items_.size()) break;  // window cut by the newest transition
        const Stored& cur = at(idx);
        if (cur.episode != first.episode) break;  // never cross episodes
        item.rewards.push_back(cur.t.r);
        item.s_boot = cur.t.s_next;
        item.terminal = cur.t.done;
        if (cur.t.done) break;
    }
    return item;
}

std::vector<NStepItem> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("ReplayBuffer::sample: empty buffer");
    std::vector<NStepItem> batch;
    batch.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b)
        batch.push_back(item_at(rng.uniform_int(items_.size())));
    return batch;
}

std::vector<std::vector<double>> ReplayBuffer::sample_states(std::size_t batch_size,
                                                             Rng& rng) const {
    if (items_.empty()) throw std::logic_error("ReplayBuffer::sample_states: empty buffer");
    std::vector<std::vector<double>> states;
    states.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b)
        states.push_back(at(rng.uniform_int(items_.size())).t.s);
    return states;
}

}  // namespace redolab
