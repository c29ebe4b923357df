#include <doctest.h>

#include <cmath>
#include <set>

#include "redolab/envs.hpp"
#include "redolab/tasks.hpp"

using namespace redolab;

namespace {

EnvSpec catch_spec(std::size_t rows = 10, std::size_t cols = 5) {
    EnvSpec s;
    s.kind = EnvKind::catch_grid;
    s.rows = rows;
    s.cols = cols;
    return s;
}

EnvSpec cartpole_spec(std::size_t cap = 200) {
    EnvSpec s;
    s.kind = EnvKind::cartpole;
    s.episode_cap = cap;
    return s;
}

}  // namespace

TEST_CASE("catch reset: two cells set, paddle centered, pellet at the top") {
    Env env(catch_spec());
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto obs = env.reset(seed);
        std::size_t ones = 0;
        for (double v : obs) {
            CHECK((v == 0.0 || v == 1.0));
            if (v == 1.0) ++ones;
        }
        CHECK(ones == 2);
        CHECK(env.pellet_row == 0);
        CHECK(env.paddle_col == 2);
        CHECK(obs[env.pellet_col] == 1.0);
    }
}

TEST_CASE("catch reset covers every pellet column over a seed sweep") {
    Env env(catch_spec());
    std::set<std::size_t> seen;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        env.reset(seed);
        seen.insert(env.pellet_col);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("catch episode always lasts rows-1 steps") {
    Env env(catch_spec());
    env.reset(3);
    std::size_t steps = 0;
    bool done = false;
    while (!done) {
        done = env.step(1).done;
        ++steps;
    }
    CHECK(steps == 9);
    CHECK_THROWS_AS(env.step(1), std::logic_error);
}

TEST_CASE("catch terminal reward: aligned catch wins, misses lose") {
    Env env(catch_spec());
    env.set_catch_state(8, 3, 3);  // pellet one row above bottom, aligned
    const auto res = env.step(1);  // stay
    CHECK(res.done);
    CHECK(res.reward == 1.0);

    env.set_catch_state(8, 0, 4);
    const auto miss = env.step(1);
    CHECK(miss.done);
    CHECK(miss.reward == -1.0);
}

TEST_CASE("catch paddle clamps at the walls") {
    Env env(catch_spec());
    env.set_catch_state(0, 2, 0);
    env.step(0);  // left against the wall
    CHECK(env.paddle_col == 0);
    env.set_catch_state(0, 2, 4);
    env.step(2);  // right against the wall
    CHECK(env.paddle_col == 4);
}

TEST_CASE("catch: greedy-toward-pellet policy wins from every start") {
    // exhaustive over pellet columns x paddle positions
    for (std::size_t pellet = 0; pellet < 5; ++pellet) {
        for (std::size_t paddle = 0; paddle < 5; ++paddle) {
            Env env(catch_spec());
            env.set_catch_state(0, pellet, paddle);
            double reward = 0.0;
            bool done = false;
            while (!done) {
                std::size_t action = 1;
                if (env.pellet_col < env.paddle_col) action = 0;
                if (env.pellet_col > env.paddle_col) action = 2;
                const auto res = env.step(action);
                reward = res.reward;
                done = res.done;
            }
            CHECK(reward == 1.0);
        }
    }
}

TEST_CASE("catch episodic return is always +1 or -1") {
    Env env(catch_spec());
    Rng rng(99);
    for (int episode = 0; episode < 50; ++episode) {
        env.reset(1000 + episode);
        double total = 0.0;
        bool done = false;
        while (!done) {
            const auto res = env.step(rng.uniform_int(3));
            total += res.reward;
            done = res.done;
        }
        CHECK((total == 1.0 || total == -1.0));
    }
}

TEST_CASE("cartpole reset is deterministic and bounded") {
    Env env(cartpole_spec());
    const auto a = env.reset(42);
    const auto b = env.reset(42);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a[i] == b[i]);
        CHECK(std::fabs(a[i]) <= 0.05);
    }
}

TEST_CASE("cartpole two-step trajectory matches the hand-stepped oracle") {
    Env env(cartpole_spec());
    env.reset(7);
    env.x = 0.0;
    env.x_dot = 0.0;
    env.theta = 0.0;
    env.theta_dot = 0.0;

    // independent straight-line evaluation of the dynamics
    double x = 0.0, x_dot = 0.0, theta = 0.0, theta_dot = 0.0;
    const double g = 9.8, mc = 1.0, mp = 0.1, total = mc + mp, half = 0.5, fmag = 10.0,
                 dt = 0.02;
    const double pml = mp * half;
    for (int step = 0; step < 2; ++step) {
        const double force = step == 0 ? fmag : -fmag;  // right then left
        const double costh = std::cos(theta);
        const double sinth = std::sin(theta);
        const double temp = (force + pml * theta_dot * theta_dot * sinth) / total;
        const double theta_acc =
            (g * sinth - costh * temp) / (half * (4.0 / 3.0 - mp * costh * costh / total));
        const double x_acc = temp - pml * theta_acc * costh / total;
        x_dot += dt * x_acc;
        x += dt * x_dot;
        theta_dot += dt * theta_acc;
        theta += dt * theta_dot;
    }

    env.step(1);
    const auto res = env.step(0);
    CHECK(std::fabs(res.observation[0] - x) <= 1e-12);
    CHECK(std::fabs(res.observation[1] - x_dot) <= 1e-12);
    CHECK(std::fabs(res.observation[2] - theta) <= 1e-12);
    CHECK(std::fabs(res.observation[3] - theta_dot) <= 1e-12);
}

TEST_CASE("cartpole: zero force and exactly upright stays upright") {
    CartPoleState s;
    for (int i = 0; i < 500; ++i) {
        s = cartpole_dynamics(s, 0.0);
        CHECK(s.theta == 0.0);
        CHECK(s.theta_dot == 0.0);
    }
}

TEST_CASE("cartpole caps the episode length") {
    Env env(cartpole_spec(50));
    env.reset(5);
    env.x = 0.0;
    env.x_dot = 0.0;
    env.theta = 0.0;
    env.theta_dot = 0.0;
    std::size_t steps = 0;
    bool done = false;
    // lean-following pushes balance the pole long enough to hit the cap
    while (!done && steps < 1000) {
        const std::size_t action = env.theta + env.theta_dot > 0.0 ? 1 : 0;
        done = env.step(action).done;
        ++steps;
    }
    CHECK(steps == 50);
}

TEST_CASE("classification task is balanced, deterministic, and centered") {
    const auto task = make_classification_task(100, 8, 10, 77);
    REQUIRE(task.labels.size() == 100);
    REQUIRE(task.inputs.rows == 100);
    std::vector<std::size_t> counts(10, 0);
    for (auto label : task.labels) ++counts[label];
    for (auto c : counts) CHECK(c == 10);

    const auto again = make_classification_task(100, 8, 10, 77);
    for (std::size_t i = 0; i < task.inputs.size(); ++i)
        CHECK(task.inputs.data[i] == again.inputs.data[i]);

    CHECK_THROWS_AS(make_classification_task(101, 8, 10, 1), std::invalid_argument);
}

TEST_CASE("noise-free task is solved by a nearest-centroid oracle") {
    const auto task = make_classification_task(200, 8, 10, 5, 0.0);
    // recover per-class centers (inputs equal them exactly at sigma=0)
    std::vector<std::vector<double>> centers(10, std::vector<double>(8, 0.0));
    std::vector<std::size_t> counts(10, 0);
    for (std::size_t i = 0; i < 200; ++i) {
        for (std::size_t j = 0; j < 8; ++j)
            centers[task.labels[i]][j] += task.inputs(i, j);
        ++counts[task.labels[i]];
    }
    for (std::size_t c = 0; c < 10; ++c)
        for (auto& v : centers[c]) v /= static_cast<double>(counts[c]);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        double best = 1e300;
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < 10; ++c) {
            double dist = 0.0;
            for (std::size_t j = 0; j < 8; ++j) {
                const double diff = task.inputs(i, j) - centers[c][j];
                dist += diff * diff;
            }
            if (dist < best) {
                best = dist;
                best_c = c;
            }
        }
        if (best_c == task.labels[i]) ++correct;
    }
    CHECK(correct == 200);
}

TEST_CASE("shuffle_labels permutes labels, keeps inputs and multiset") {
    const auto task = make_classification_task(60, 4, 6, 9);
    const auto shuffled = shuffle_labels(task, 1);
    CHECK(shuffled.label_epoch == task.label_epoch + 1);
    for (std::size_t i = 0; i < task.inputs.size(); ++i)
        CHECK(shuffled.inputs.data[i] == task.inputs.data[i]);
    std::vector<std::size_t> a(task.labels), b(shuffled.labels);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);

    // single-sample task cannot change
    const auto tiny = make_classification_task(1, 3, 1, 2);
    CHECK(shuffle_labels(tiny, 5).labels == tiny.labels);

    // different seeds give different permutations essentially always
    std::size_t differing = 0;
    for (std::uint64_t s = 0; s < 100; ++s)
        if (shuffle_labels(task, s).labels != shuffle_labels(task, s + 100).labels) ++differing;
    CHECK(differing >= 95);
}

TEST_CASE("regression task freezes teacher outputs") {
    Matrix inputs(12, 5);
    Rng rng(3);
    for (double& v : inputs.data) v = rng.uniform(-1.0, 1.0);

    std::vector<LayerSpec> teacher_specs;
    {
        LayerSpec a;
        a.in_dim = 5;
        a.out_dim = 6;
        teacher_specs.push_back(a);
        LayerSpec b;
        b.in_dim = 6;
        b.out_dim = 2;
        b.activation = Activation::identity;
        teacher_specs.push_back(b);
    }
    const auto task = make_regression_task(inputs, teacher_specs, 11);
    const Network teacher = build_network(teacher_specs, 11);
    const Matrix expect = forward(teacher, inputs).outputs;
    REQUIRE(task.targets.same_shape(expect));
    for (std::size_t i = 0; i < expect.size(); ++i)
        CHECK(task.targets.data[i] == expect.data[i]);

    // zero-gain teacher produces all-zero targets
    for (auto& s : teacher_specs) s.init.gain = 0.0;
    const auto zero_task = make_regression_task(inputs, teacher_specs, 11);
    for (double v : zero_task.targets.data) CHECK(v == 0.0);

    Matrix bad(3, 4);
    CHECK_THROWS_AS(make_regression_task(bad, teacher), std::invalid_argument);
}
