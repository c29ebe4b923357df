#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "redolab/losses.hpp"
#include "redolab/network.hpp"
#include "redolab/optim.hpp"

using namespace redolab;

namespace {

LayerSpec layer(std::size_t in, std::size_t out, Activation act = Activation::relu,
                double gain = 1.0) {
    LayerSpec s;
    s.in_dim = in;
    s.out_dim = out;
    s.activation = act;
    s.init.gain = gain;
    return s;
}

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    Rng rng(seed);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

// independent straight-line re-evaluation of the forward pass: per sample,
// per layer, explicit dot products
std::vector<double> forward_oracle(const Network& net, const std::vector<double>& input) {
    std::vector<double> x = input;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const std::size_t out_dim = net.specs[l].out_dim;
        std::vector<double> z(out_dim, 0.0);
        for (std::size_t j = 0; j < out_dim; ++j) {
            double acc = net.biases[l][j];
            for (std::size_t i = 0; i < net.specs[l].in_dim; ++i)
                acc += x[i] * net.weights[l](i, j);
            switch (net.specs[l].activation) {
                case Activation::relu: acc = acc > 0.0 ? acc : 0.0; break;
                case Activation::leaky_relu:
                    acc = acc > 0.0 ? acc : acc * net.specs[l].leaky_slope;
                    break;
                case Activation::identity: break;
            }
            if (l + 1 < net.layer_count() && net.prune_mask[l][j]) acc = 0.0;
            z[j] = acc;
        }
        x = std::move(z);
    }
    return x;
}

double scalar_loss(const Network& net, const Matrix& batch, const Matrix& target, LossKind kind) {
    const Matrix out = forward(net, batch).outputs;
    switch (kind) {
        case LossKind::mse: return mse_loss(out, target).loss;
        case LossKind::huber: return huber_loss(out, target, 1.0).loss;
        case LossKind::cross_entropy: break;
    }
    std::vector<std::size_t> classes(target.rows);
    for (std::size_t i = 0; i < target.rows; ++i)
        classes[i] = static_cast<std::size_t>(target(i, 0));
    return cross_entropy_loss(out, classes).loss;
}

Gradients analytic_gradients(const Network& net, const Matrix& batch, const Matrix& target,
                             LossKind kind) {
    const Matrix out = forward(net, batch).outputs;
    LossResult res;
    switch (kind) {
        case LossKind::mse: res = mse_loss(out, target); break;
        case LossKind::huber: res = huber_loss(out, target, 1.0); break;
        case LossKind::cross_entropy: {
            std::vector<std::size_t> classes(target.rows);
            for (std::size_t i = 0; i < target.rows; ++i)
                classes[i] = static_cast<std::size_t>(target(i, 0));
            res = cross_entropy_loss(out, classes);
            break;
        }
    }
    return backward(net, batch, res.grad);
}

// central finite difference over one weight entry
double fd_weight(Network net, const Matrix& batch, const Matrix& target, LossKind kind,
                 std::size_t l, std::size_t r, std::size_t c, double h = 1e-5) {
    net.weights[l](r, c) += h;
    const double up = scalar_loss(net, batch, target, kind);
    net.weights[l](r, c) -= 2.0 * h;
    const double down = scalar_loss(net, batch, target, kind);
    return (up - down) / (2.0 * h);
}

double fd_bias(Network net, const Matrix& batch, const Matrix& target, LossKind kind,
               std::size_t l, std::size_t c, double h = 1e-5) {
    net.biases[l][c] += h;
    const double up = scalar_loss(net, batch, target, kind);
    net.biases[l][c] -= 2.0 * h;
    const double down = scalar_loss(net, batch, target, kind);
    return (up - down) / (2.0 * h);
}

double rel_err(double a, double b) {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / denom;
}

}  // namespace

TEST_CASE("build_network shapes, zero biases, stored init") {
    const auto net = build_network({layer(2, 3), layer(3, 1, Activation::identity)}, 7);
    REQUIRE(net.layer_count() == 2);
    CHECK(net.weights[0].rows == 2);
    CHECK(net.weights[0].cols == 3);
    CHECK(net.weights[1].rows == 3);
    CHECK(net.weights[1].cols == 1);
    for (double b : net.biases[0]) CHECK(b == 0.0);
    for (double b : net.biases[1]) CHECK(b == 0.0);
    CHECK(net.prune_mask.size() == 1);
    CHECK(net.unpruned_hidden_count() == 3);
    const double limit = net.specs[0].init.limit(2);
    for (double w : net.weights[0].data) {
        CHECK(w >= -limit);
        CHECK(w <= limit);
    }
}

TEST_CASE("build_network is deterministic in the seed") {
    const auto a = build_network({layer(4, 8), layer(8, 2, Activation::identity)}, 123);
    const auto b = build_network({layer(4, 8), layer(8, 2, Activation::identity)}, 123);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < a.weights[l].size(); ++i)
            CHECK(a.weights[l].data[i] == b.weights[l].data[i]);
    const auto c = build_network({layer(4, 8), layer(8, 2, Activation::identity)}, 124);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.weights[0].size(); ++i)
        if (a.weights[0].data[i] != c.weights[0].data[i]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("build_network rejects mismatched layer dims") {
    CHECK_THROWS_AS(build_network({layer(2, 3), layer(4, 1)}, 0), std::invalid_argument);
}

TEST_CASE("gain zero gives the all-zero network") {
    const auto net =
        build_network({layer(3, 4, Activation::relu, 0.0),
                       layer(4, 2, Activation::identity, 0.0)}, 9);
    const Matrix batch = random_batch(5, 3, 1);
    const auto res = forward(net, batch);
    for (double v : res.outputs.data) CHECK(v == 0.0);
    for (double v : res.trace.hidden[0].data) CHECK(v == 0.0);
}

TEST_CASE("forward identity chain reproduces inputs") {
    auto net = build_network({layer(3, 3, Activation::identity),
                              layer(3, 3, Activation::identity)}, 5);
    for (auto& w : net.weights) {
        w.fill(0.0);
        for (std::size_t i = 0; i < w.rows; ++i) w(i, i) = 1.0;
    }
    const Matrix batch = random_batch(4, 3, 2);
    const auto res = forward(net, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(res.outputs.data[i] == batch.data[i]);
}

TEST_CASE("relu net on zero input with non-positive biases traces zeros") {
    auto net = build_network({layer(3, 4), layer(4, 2, Activation::identity)}, 11);
    net.biases[0] = {-0.5, 0.0, -1.0, -0.1};
    const Matrix batch(2, 3, 0.0);
    const auto res = forward(net, batch);
    for (double v : res.trace.hidden[0].data) CHECK(v == 0.0);
    for (double v : res.outputs.data) CHECK(v == 0.0);
}

TEST_CASE("forward matches the straight-line oracle on random nets") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto net = build_network(
            {layer(6, 9), layer(9, 7, Activation::leaky_relu), layer(7, 3, Activation::identity)},
            seed);
        const Matrix batch = random_batch(8, 6, seed + 100);
        const auto res = forward(net, batch);
        for (std::size_t i = 0; i < batch.rows; ++i) {
            std::vector<double> row(batch.row_ptr(i), batch.row_ptr(i) + batch.cols);
            const auto oracle = forward_oracle(net, row);
            for (std::size_t j = 0; j < oracle.size(); ++j)
                CHECK(std::fabs(res.outputs(i, j) - oracle[j]) <= 1e-12);
        }
    }
}

TEST_CASE("forward rejects bad inputs") {
    const auto net = build_network({layer(3, 4), layer(4, 2, Activation::identity)}, 3);
    CHECK_THROWS_AS(forward(net, Matrix(2, 5)), std::invalid_argument);
    Matrix bad(1, 3);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(net, bad), std::invalid_argument);
}

TEST_CASE("forward and trace are bit-identical across repeated calls") {
    const auto net = build_network({layer(5, 8), layer(8, 4, Activation::identity)}, 77);
    const Matrix batch = random_batch(6, 5, 78);
    const auto a = forward(net, batch);
    const auto b = forward(net, batch);
    for (std::size_t i = 0; i < a.outputs.size(); ++i)
        CHECK(a.outputs.data[i] == b.outputs.data[i]);
    for (std::size_t i = 0; i < a.trace.hidden[0].size(); ++i)
        CHECK(a.trace.hidden[0].data[i] == b.trace.hidden[0].data[i]);
}

TEST_CASE("backward: zero loss grad gives zero gradients") {
    const auto net = build_network({layer(4, 6), layer(6, 2, Activation::identity)}, 21);
    const Matrix batch = random_batch(3, 4, 22);
    const auto grads = backward(net, batch, Matrix(3, 2, 0.0));
    for (const auto& g : grads.weights)
        for (double v : g.data) CHECK(v == 0.0);
    for (const auto& g : grads.biases)
        for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("backward: scalar linear net weight gradient is input^T * loss_grad") {
    auto net = build_network({layer(3, 1, Activation::identity)}, 31);
    const Matrix batch = random_batch(5, 3, 32);
    Matrix lg(5, 1);
    for (std::size_t i = 0; i < 5; ++i) lg(i, 0) = 0.25 * static_cast<double>(i) - 0.5;
    const auto grads = backward(net, batch, lg);
    for (std::size_t r = 0; r < 3; ++r) {
        double expect = 0.0;
        for (std::size_t i = 0; i < 5; ++i) expect += batch(i, r) * lg(i, 0);
        CHECK(grads.weights[0](r, 0) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("backward matches central finite differences across activations and losses") {
    struct Case {
        Activation act;
        LossKind loss;
    };
    const Case cases[] = {
        {Activation::relu, LossKind::mse},
        {Activation::leaky_relu, LossKind::huber},
        {Activation::relu, LossKind::cross_entropy},
        {Activation::identity, LossKind::mse},
    };
    for (const auto& c : cases) {
        const auto net = build_network(
            {layer(5, 8, c.act), layer(8, 6, c.act), layer(6, 3, Activation::identity)}, 41);
        const Matrix batch = random_batch(7, 5, 42);
        Matrix target(7, c.loss == LossKind::cross_entropy ? 1 : 3);
        Rng trng(43);
        if (c.loss == LossKind::cross_entropy) {
            for (std::size_t i = 0; i < 7; ++i)
                target(i, 0) = static_cast<double>(trng.uniform_int(3));
        } else {
            for (double& v : target.data) v = trng.uniform(-1.0, 1.0);
        }

        const auto grads = analytic_gradients(net, batch, target, c.loss);
        Rng pick(44);
        for (int trial = 0; trial < 25; ++trial) {
            const std::size_t l = pick.uniform_int(net.layer_count());
            if (pick.bernoulli(0.2)) {
                const std::size_t j = pick.uniform_int(net.specs[l].out_dim);
                const double fd = fd_bias(net, batch, target, c.loss, l, j);
                CHECK(rel_err(grads.biases[l][j], fd) < 1e-5);
            } else {
                const std::size_t r = pick.uniform_int(net.specs[l].in_dim);
                const std::size_t col = pick.uniform_int(net.specs[l].out_dim);
                const double fd = fd_weight(net, batch, target, c.loss, l, r, col);
                CHECK(rel_err(grads.weights[l](r, col), fd) < 1e-5);
            }
        }
    }
}

TEST_CASE("opt_step: zero gradients leave parameters unchanged") {
    for (auto kind : {OptKind::sgd, OptKind::adam}) {
        auto net = build_network({layer(3, 4), layer(4, 2, Activation::identity)}, 51);
        const auto before = net.weights;
        OptState opt = kind == OptKind::sgd ? OptState::sgd_momentum(0.1, 0.9)
                                            : OptState::adam(0.1);
        opt_step(net, zero_gradients(net), opt);
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < before[l].size(); ++i)
                CHECK(net.weights[l].data[i] == before[l].data[i]);
    }
}

TEST_CASE("opt_step: adam first step matches the hand-evaluated recurrence") {
    auto net = build_network({layer(1, 1, Activation::identity, 0.0)}, 61);
    net.weights[0](0, 0) = 1.0;
    Gradients g = zero_gradients(net);
    g.weights[0](0, 0) = 1.0;
    const double lr = 0.1, beta1 = 0.9, beta2 = 0.999, eps = 1.5e-4;
    OptState opt = OptState::adam(lr, 0.0, beta1, beta2, eps);
    opt_step(net, g, opt);
    // t=1: m_hat = g, v_hat = g^2; p' = p - lr * g / (|g| + eps)
    const double expected = 1.0 - lr * 1.0 / (std::sqrt(1.0) + eps);
    CHECK(net.weights[0](0, 0) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("opt_step: decay-only step scales weights by 1 - lr*wd and spares biases") {
    for (auto kind : {OptKind::sgd, OptKind::adam}) {
        auto net = build_network({layer(3, 4), layer(4, 2, Activation::identity)}, 71);
        net.biases[0] = {0.5, -0.5, 1.0, 2.0};
        const auto before = net.weights;
        OptState opt = kind == OptKind::sgd ? OptState::sgd_momentum(1.0, 0.0, 0.1)
                                            : OptState::adam(1.0, 0.1);
        opt_step(net, zero_gradients(net), opt);
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < before[l].size(); ++i)
                CHECK(net.weights[l].data[i] == doctest::Approx(0.9 * before[l].data[i]));
        CHECK(net.biases[0][0] == 0.5);
        CHECK(net.biases[0][3] == 2.0);
    }
}

TEST_CASE("opt_step rejects non-finite gradients and names the layer") {
    auto net = build_network({layer(2, 2), layer(2, 1, Activation::identity)}, 81);
    Gradients g = zero_gradients(net);
    g.weights[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
    OptState opt = OptState::adam(0.1);
    try {
        opt_step(net, g, opt);
        FAIL("expected throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}

TEST_CASE("mask safety: pruned outgoing rows stay zero through optimizer steps") {
    auto net = build_network({layer(4, 6), layer(6, 3, Activation::identity)}, 91);
    net.prune_mask[0][2] = true;
    net.prune_mask[0][4] = true;
    for (std::size_t c = 0; c < 3; ++c) {
        net.weights[1](2, c) = 0.0;
        net.weights[1](4, c) = 0.0;
    }
    OptState opt = OptState::adam(0.05, 0.01);
    Rng rng(92);
    const Matrix batch = random_batch(6, 4, 93);
    for (int step = 0; step < 10; ++step) {
        Matrix lg(6, 3);
        for (double& v : lg.data) v = rng.uniform(-1.0, 1.0);
        const auto grads = backward(net, batch, lg);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(grads.weights[1](2, c) == 0.0);
            CHECK(grads.weights[1](4, c) == 0.0);
        }
        const auto before_col2 = net.weights[0](0, 2);
        const auto before_bias2 = net.biases[0][2];
        opt_step(net, grads, opt);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(net.weights[1](2, c) == 0.0);
            CHECK(net.weights[1](4, c) == 0.0);
        }
        // incoming parameters of pruned neurons are untouched too
        CHECK(net.weights[0](0, 2) == before_col2);
        CHECK(net.biases[0][2] == before_bias2);
    }
}

TEST_CASE("relu activation scale equivariance in the first layer") {
    auto net = build_network({layer(4, 6), layer(6, 2, Activation::identity)}, 101);
    const Matrix batch = random_batch(5, 4, 102);
    const auto base = forward(net, batch);
    const double c = 3.5;
    auto scaled = net;
    for (double& v : scaled.weights[0].data) v *= c;
    const auto res = forward(scaled, batch);
    for (std::size_t i = 0; i < base.trace.hidden[0].size(); ++i)
        CHECK(res.trace.hidden[0].data[i] ==
              doctest::Approx(c * base.trace.hidden[0].data[i]).epsilon(1e-12));
}

TEST_CASE("loss functions: fixed points and definitional regimes") {
    Matrix pred(2, 2);
    pred.data = {1.0, -2.0, 0.5, 3.0};
    const auto zero = mse_loss(pred, pred);
    CHECK(zero.loss == 0.0);
    for (double v : zero.grad.data) CHECK(v == 0.0);

    // huber inside the delta band reduces to the half-quadratic
    Matrix target(2, 2);
    target.data = {1.2, -2.3, 0.1, 3.4};
    const auto h = huber_loss(pred, target, 1.0);
    const auto m = mse_loss(pred, target);
    CHECK(h.loss == doctest::Approx(0.5 * m.loss).epsilon(1e-15));

    // outside the band the gradient saturates at delta/N
    Matrix far(1, 1);
    far(0, 0) = 10.0;
    Matrix tgt(1, 1);
    tgt(0, 0) = 0.0;
    const auto sat = huber_loss(far, tgt, 1.0);
    CHECK(sat.grad(0, 0) == 1.0);
    CHECK(sat.loss == doctest::Approx(1.0 * (10.0 - 0.5)));

    CHECK_THROWS_AS(mse_loss(pred, Matrix(3, 2)), std::invalid_argument);
    Matrix logits(1, 3);
    logits.data = {0.0, 1.0, 2.0};
    CHECK_THROWS_AS(cross_entropy_loss(logits, {7}), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    auto net = build_network(
        {layer(5, 7), layer(7, 6, Activation::leaky_relu), layer(6, 2, Activation::identity)},
        111);
    net.prune_mask[0][3] = true;
    net.biases[1][2] = -0.1234567890123456789;
    const std::string path = (std::filesystem::temp_directory_path() / "redolab_ckpt.net").string();
    save_network(net, path);
    const Network loaded = load_network(path);
    REQUIRE(loaded.layer_count() == net.layer_count());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(loaded.specs[l].activation == net.specs[l].activation);
        CHECK(loaded.specs[l].init.gain == net.specs[l].init.gain);
        CHECK(loaded.specs[l].init.stream == net.specs[l].init.stream);
        for (std::size_t i = 0; i < net.weights[l].size(); ++i)
            CHECK(loaded.weights[l].data[i] == net.weights[l].data[i]);
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            CHECK(loaded.biases[l][i] == net.biases[l][i]);
    }
    CHECK(loaded.prune_mask[0][3]);
    CHECK_FALSE(loaded.prune_mask[0][0]);
    std::filesystem::remove(path);
}
