#include <doctest.h>

#include <cmath>

#include "redolab/agent.hpp"
#include "redolab/dormancy.hpp"

using namespace redolab;

namespace {

ActivationTrace trace_from(std::vector<Matrix> hidden) {
    ActivationTrace t;
    t.batch_size = hidden.front().rows;
    t.hidden = std::move(hidden);
    return t;
}

// straight-line evaluation of the score definition: batch-mean absolute
// activation over the layer mean of those values
std::vector<double> score_oracle(const Matrix& h) {
    std::vector<double> mean_abs(h.cols, 0.0);
    for (std::size_t j = 0; j < h.cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < h.rows; ++i) acc += std::fabs(h(i, j));
        mean_abs[j] = acc / static_cast<double>(h.rows);
    }
    double layer_mean = 0.0;
    for (double v : mean_abs) layer_mean += v;
    layer_mean /= static_cast<double>(h.cols);
    std::vector<double> out(h.cols, 0.0);
    if (layer_mean == 0.0) return out;
    for (std::size_t j = 0; j < h.cols; ++j) out[j] = mean_abs[j] / layer_mean;
    return out;
}

}  // namespace

TEST_CASE("neuron scores: worked example [2,0,2,4] -> [1,0,1,2]") {
    Matrix h(1, 4);
    h.data = {2.0, 0.0, -2.0, 4.0};  // batch of one, absolute values 2,0,2,4
    const auto scores = neuron_scores(trace_from({h}));
    REQUIRE(scores.size() == 1);
    CHECK(scores[0][0] == doctest::Approx(1.0));
    CHECK(scores[0][1] == 0.0);
    CHECK(scores[0][2] == doctest::Approx(1.0));
    CHECK(scores[0][3] == doctest::Approx(2.0));
}

TEST_CASE("neuron scores: constant activations give all ones") {
    Matrix h(5, 7, 3.25);
    const auto scores = neuron_scores(trace_from({h}));
    for (double s : scores[0]) CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("neuron scores: all-zero layer degenerates to all-zero scores") {
    Matrix h(4, 6, 0.0);
    const auto scores = neuron_scores(trace_from({h}));
    for (double s : scores[0]) CHECK(s == 0.0);
}

TEST_CASE("neuron scores reject an empty trace") {
    ActivationTrace t;
    t.batch_size = 0;
    CHECK_THROWS_AS(neuron_scores(t), std::invalid_argument);
}

TEST_CASE("neuron scores match the direct-evaluation oracle on random traces") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix h(1 + rng.uniform_int(16), 1 + rng.uniform_int(32));
        for (double& v : h.data) v = rng.bernoulli(0.25) ? 0.0 : rng.uniform(-2.0, 2.0);
        const auto scores = neuron_scores(trace_from({h}));
        const auto oracle = score_oracle(h);
        for (std::size_t j = 0; j < oracle.size(); ++j)
            CHECK(std::fabs(scores[0][j] - oracle[j]) <= 1e-12);
    }
}

TEST_CASE("score normalization: mean one and scale invariance") {
    Rng rng(9);
    Matrix h(8, 12);
    for (double& v : h.data) v = rng.uniform(0.0, 5.0);
    const auto scores = neuron_scores(trace_from({h}));
    double mean = 0.0;
    for (double s : scores[0]) mean += s;
    mean /= static_cast<double>(scores[0].size());
    CHECK(std::fabs(mean - 1.0) <= 1e-12);

    Matrix scaled = h;
    for (double& v : scaled.data) v *= 37.5;
    const auto scaled_scores = neuron_scores(trace_from({scaled}));
    for (std::size_t j = 0; j < scores[0].size(); ++j)
        CHECK(std::fabs(scores[0][j] - scaled_scores[0][j]) <= 1e-12);
}

TEST_CASE("dormant_set thresholds and monotonicity in tau") {
    const std::vector<double> scores = {1.0, 0.0, 1.0, 2.0};
    CHECK(dormant_set(scores, 0.0) == std::set<std::size_t>{1});
    CHECK(dormant_set(scores, 0.1) == std::set<std::size_t>{1});
    CHECK(dormant_set(scores, 2.0).size() == 4);
    CHECK_THROWS_AS(dormant_set(scores, -0.1), std::invalid_argument);

    Rng rng(17);
    std::vector<double> random_scores(20);
    for (double& v : random_scores) v = rng.uniform(0.0, 2.0);
    double prev_tau = 0.0;
    std::set<std::size_t> prev = dormant_set(random_scores, prev_tau);
    for (double tau : {0.1, 0.4, 0.9, 1.5, 2.5}) {
        const auto cur = dormant_set(random_scores, tau);
        for (std::size_t i : prev) CHECK(cur.count(i) == 1);
        prev = cur;
    }
}

TEST_CASE("dormant_set skips pruned neurons") {
    const std::vector<double> scores = {0.0, 0.0, 1.0};
    const std::vector<bool> pruned = {true, false, false};
    CHECK(dormant_set(scores, 0.0, pruned) == std::set<std::size_t>{1});
}

TEST_CASE("tau=0 dormancy is exactly the all-zero-activation characterization") {
    const auto net = build_network(q_network_specs(6, {24}, 3, Activation::relu, 0.01), 31);
    Matrix batch(16, 6);
    Rng rng(32);
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
    const auto res = forward(net, batch);
    const auto scores = neuron_scores(res.trace);
    const auto zero_set = dormant_set(scores[0], 0.0);
    for (std::size_t j = 0; j < net.specs[0].out_dim; ++j) {
        bool all_zero = true;
        for (std::size_t i = 0; i < batch.rows; ++i)
            if (res.trace.hidden[0](i, j) != 0.0) all_zero = false;
        CHECK(zero_set.count(j) == (all_zero ? 1u : 0u));
    }
}

TEST_CASE("measure_dormancy counts fractions over unpruned neurons") {
    Matrix h1(2, 4);
    h1.data = {1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 2.0, 0.0};  // neurons 1,3 dead
    Matrix h2(2, 8, 1.0);                                // all alive
    auto net = build_network(q_network_specs(3, {4, 8}, 2, Activation::relu, 0.01), 41);
    const auto report = measure_dormancy(net, trace_from({h1, h2}), 0.0, 77);
    CHECK(report.scoring_step == 77);
    CHECK(report.layers[0].dormant == std::set<std::size_t>{1, 3});
    CHECK(report.layers[0].dormant_fraction == doctest::Approx(0.5));
    CHECK(report.layers[1].dormant.empty());
    CHECK(report.dormant_fraction == doctest::Approx(2.0 / 12.0));

    // no dormant / all dormant ends of the range
    Matrix live(2, 4, 1.0), live2(2, 8, 1.0);
    CHECK(measure_dormancy(net, trace_from({live, live2}), 0.0).dormant_fraction == 0.0);
    Matrix dead(2, 4, 0.0), dead2(2, 8, 0.0);
    CHECK(measure_dormancy(net, trace_from({dead, dead2}), 0.0).dormant_fraction == 1.0);
}

TEST_CASE("overlap coefficient formula, symmetry, and undefined cases") {
    const std::set<std::size_t> x = {1, 2}, y = {2, 3};
    CHECK(*overlap_coefficient(x, y) == doctest::Approx(0.5));
    CHECK(*overlap_coefficient(y, x) == doctest::Approx(0.5));
    CHECK(*overlap_coefficient(x, x) == 1.0);
    CHECK(*overlap_coefficient({1, 2}, {3, 4}) == 0.0);
    CHECK_FALSE(overlap_coefficient({}, y).has_value());
    CHECK_FALSE(overlap_coefficient(x, {}).has_value());

    Rng rng(51);
    for (int trial = 0; trial < 30; ++trial) {
        std::set<std::size_t> a, b;
        for (int i = 0; i < 12; ++i) {
            if (rng.bernoulli(0.4)) a.insert(rng.uniform_int(20));
            if (rng.bernoulli(0.4)) b.insert(rng.uniform_int(20));
        }
        const auto ab = overlap_coefficient(a, b);
        const auto ba = overlap_coefficient(b, a);
        REQUIRE(ab.has_value() == ba.has_value());
        if (ab) {
            CHECK(*ab == *ba);
            CHECK(*ab >= 0.0);
            CHECK(*ab <= 1.0);
        }
    }
}

TEST_CASE("overlap tracker maintains first-snapshot and running-union variants") {
    OverlapTracker tracker(0);
    tracker.observe(10, {});  // nothing dormant yet
    CHECK_FALSE(tracker.series()[0].vs_first.has_value());
    CHECK_FALSE(tracker.series()[0].vs_union.has_value());

    tracker.observe(20, {1, 2});  // first nonempty snapshot
    CHECK(*tracker.series()[1].vs_first == 1.0);
    CHECK_FALSE(tracker.series()[1].vs_union.has_value());  // no history before it

    tracker.observe(30, {2, 3});
    CHECK(*tracker.series()[2].vs_first == doctest::Approx(0.5));
    CHECK(*tracker.series()[2].vs_union == doctest::Approx(0.5));

    tracker.observe(40, {1, 2, 3});
    CHECK(*tracker.series()[3].vs_union == 1.0);  // union is {1,2,3}
}

TEST_CASE("prune_dormant zeroes outgoing rows and preserves scoring-batch outputs") {
    const auto net0 = build_network(q_network_specs(6, {24, 24}, 3, Activation::relu, 0.01), 61);
    Matrix batch(32, 6);
    Rng rng(62);
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);

    // find tau=0 dormant neurons; construct one if none exist
    Network net = net0;
    {
        auto res = forward(net, batch);
        auto scores = neuron_scores(res.trace);
        if (dormant_set(scores[0], 0.0).empty()) {
            for (std::size_t i = 0; i < net.specs[0].in_dim; ++i) net.weights[0](i, 5) = 0.0;
            net.biases[0][5] = -1.0;
        }
    }
    const auto before = forward(net, batch);
    const auto scores = neuron_scores(before.trace);
    std::vector<std::set<std::size_t>> dormant;
    dormant.push_back(dormant_set(scores[0], 0.0, net.prune_mask[0]));
    dormant.push_back(dormant_set(scores[1], 0.0, net.prune_mask[1]));
    REQUIRE((dormant[0].size() + dormant[1].size()) > 0);

    Network pruned = net;
    prune_dormant(pruned, dormant);
    for (std::size_t i : dormant[0]) {
        CHECK(pruned.prune_mask[0][i]);
        for (std::size_t c = 0; c < pruned.weights[1].cols; ++c)
            CHECK(pruned.weights[1](i, c) == 0.0);
    }
    const auto after = forward(pruned, batch);
    for (std::size_t i = 0; i < before.outputs.size(); ++i)
        CHECK(before.outputs.data[i] == after.outputs.data[i]);  // bit-identical

    // pruning the empty set changes nothing
    Network untouched = net;
    prune_dormant(untouched, {{}, {}});
    for (std::size_t l = 0; l < net.layer_count(); ++l)
        for (std::size_t i = 0; i < net.weights[l].size(); ++i)
            CHECK(untouched.weights[l].data[i] == net.weights[l].data[i]);
}

TEST_CASE("pruning every hidden neuron leaves only the output bias") {
    auto net = build_network(q_network_specs(4, {6}, 2, Activation::relu, 0.01), 71);
    net.biases[1] = {0.25, -0.75};
    std::set<std::size_t> all;
    for (std::size_t i = 0; i < 6; ++i) all.insert(i);
    prune_dormant(net, {all});
    Matrix batch(5, 4);
    Rng rng(72);
    for (double& v : batch.data) v = rng.uniform(-2.0, 2.0);
    const auto res = forward(net, batch);
    for (std::size_t i = 0; i < batch.rows; ++i) {
        CHECK(res.outputs(i, 0) == 0.25);
        CHECK(res.outputs(i, 1) == -0.75);
    }
}

TEST_CASE("prune_dormant rejects bad indices and double pruning") {
    auto net = build_network(q_network_specs(4, {6}, 2, Activation::relu, 0.01), 81);
    CHECK_THROWS_AS(prune_dormant(net, {{9}}), std::out_of_range);
    prune_dormant(net, {{2}});
    CHECK_THROWS_AS(prune_dormant(net, {{2}}), std::invalid_argument);
    CHECK_THROWS_AS(prune_dormant(net, {{1}, {0}}), std::invalid_argument);
}

TEST_CASE("pruned neurons are excluded from subsequent reports") {
    auto net = build_network(q_network_specs(4, {6}, 2, Activation::relu, 0.01), 91);
    prune_dormant(net, {{0, 1}});
    Matrix h(3, 6, 0.0);
    h(0, 2) = 1.0;  // neuron 2 alive, 3..5 dead, 0..1 pruned
    const auto report = measure_dormancy(net, trace_from({h}), 0.0);
    CHECK(report.layers[0].dormant == std::set<std::size_t>{3, 4, 5});
    CHECK(report.layers[0].dormant_fraction == doctest::Approx(3.0 / 4.0));
}
