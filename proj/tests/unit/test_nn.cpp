#include "eaoa/nn.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using eaoa::Matrix;
using eaoa::nn::Mlp;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("forward of a one-layer net is an affine map") {
    std::mt19937_64 rng(3);
    auto m = Mlp::initialized({4, 3}, 9);
    const Matrix x = random_matrix(5, 4, rng);
    const Matrix expected =
        (x * m.layers()[0].weight.transpose()).rowwise() + m.layers()[0].bias.transpose();
    CHECK((m.forward(x) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("glorot bounds and zero biases") {
    const auto m = Mlp::initialized({10, 6, 3}, 1);
    for (const auto& layer : m.layers()) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(layer.weight.cols() + layer.weight.rows()));
        CHECK(layer.weight.cwiseAbs().maxCoeff() <= bound);
        CHECK(layer.bias.isZero());
    }
    CHECK(m == Mlp::initialized({10, 6, 3}, 1));
    CHECK_FALSE(m == Mlp::initialized({10, 6, 3}, 2));
    CHECK(m.parameter_count() == 10 * 6 + 6 + 6 * 3 + 3);
}

TEST_CASE("squared error gradient of a one-layer net is closed form") {
    auto m = Mlp::initialized({3, 2}, 4);
    Matrix x(1, 3);
    x << 0.5, -1.0, 2.0;
    Matrix y(1, 2);
    y << 0.3, -0.7;
    const auto cache = m.forward_cached(x);
    const Matrix residual = cache.logits() - y;
    const auto g = m.backward(cache, 2.0 * residual);
    const Matrix expected_w = 2.0 * residual.transpose() * x;
    CHECK((g.layers[0].weight - expected_w).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.layers[0].bias - 2.0 * residual.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batch gradient equals the sum of per-example gradients") {
    std::mt19937_64 rng(11);
    const auto m = Mlp::initialized({4, 5, 3}, 8);
    const Matrix x = random_matrix(6, 4, rng);
    const Matrix gl = random_matrix(6, 3, rng);
    const auto whole = oracle::flatten(m.backward(m.forward_cached(x), gl));
    std::vector<double> sum(whole.size(), 0.0);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const auto part =
            oracle::flatten(m.backward(m.forward_cached(x.row(r)), Matrix(gl.row(r))));
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += part[i];
        }
    }
    CHECK(oracle::relative_error(whole, sum) < 1e-12);
}

TEST_CASE("backward matches finite differences on a linear readout") {
    std::mt19937_64 rng(5);
    const auto m = Mlp::initialized({3, 7, 4, 2}, 21);
    Matrix x = random_matrix(4, 3, rng);
    while (oracle::min_abs_preactivation(m, x) < 1e-3) {
        x = random_matrix(4, 3, rng);
    }
    const Matrix w = random_matrix(4, 2, rng);
    const auto f = [&](const Mlp& net) { return (net.forward(x).array() * w.array()).sum(); };
    const auto analytic = oracle::flatten(m.backward(m.forward_cached(x), w));
    CHECK(oracle::relative_error(analytic, oracle::finite_difference(m, f)) < 1e-6);
}

TEST_CASE("penultimate is the last hidden activation") {
    std::mt19937_64 rng(6);
    const auto m = Mlp::initialized({3, 5, 2}, 2);
    const Matrix x = random_matrix(4, 3, rng);
    const Matrix h =
        ((x * m.layers()[0].weight.transpose()).rowwise() + m.layers()[0].bias.transpose())
            .cwiseMax(0.0);
    CHECK((m.penultimate(x) - h).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(Mlp::initialized({3, 2}, 1).penultimate(x), eaoa::ShapeError);
}

TEST_CASE("shape errors") {
    const auto m = Mlp::initialized({3, 2}, 1);
    CHECK_THROWS_AS(m.forward(Matrix::Zero(2, 4)), eaoa::ShapeError);
    CHECK_THROWS(Mlp::initialized({3}, 1));
}

TEST_CASE("single-parameter quadratic follows hand-computed gradient descent") {
    // Loss 0.5 * (w - 3)^2 through a 1->1 linear net with input 1 and zero bias gradient
    // contribution folded in: logits = w + b, gradient on logits = logits - 3.
    auto m = Mlp::zeros({1, 1});
    const Matrix x = Matrix::Ones(1, 1);
    const std::vector<int> labels{0};
    eaoa::nn::SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    cfg.batch_size = 1;
    cfg.epochs = 3;
    cfg.lr_decay_every = 1000;
    const eaoa::nn::BatchLoss loss = [](const Matrix& logits, std::span<const int>, Matrix& g) {
        g = logits.array() - 3.0;
        return 0.5 * (logits(0, 0) - 3.0) * (logits(0, 0) - 3.0);
    };
    const auto result = eaoa::nn::train_epochs(m, x, labels, loss, cfg, 1);
    // Both w and b move by lr * (w + b - 3) each step, so s = w + b follows
    // s <- s - 2 * lr * (s - 3): 0 -> 0.6 -> 1.08 -> 1.464.
    const double s = result.model.layers()[0].weight(0, 0) + result.model.layers()[0].bias(0);
    CHECK(s == doctest::Approx(1.464).epsilon(1e-12));
    REQUIRE(result.loss_trace.size() == 3);
    CHECK(result.loss_trace[0] == doctest::Approx(4.5));
    CHECK(result.loss_trace[1] == doctest::Approx(0.5 * 2.4 * 2.4));
}

TEST_CASE("momentum and weight decay follow the classical update") {
    auto m = Mlp::zeros({1, 1});
    m.layers()[0].weight(0, 0) = 1.0;
    const Matrix x = Matrix::Zero(1, 1);  // input 0 leaves only the decay term on w
    const std::vector<int> labels{0};
    eaoa::nn::SgdConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.1;
    cfg.batch_size = 1;
    cfg.epochs = 2;
    cfg.lr_decay_every = 1000;
    const eaoa::nn::BatchLoss zero = [](const Matrix& logits, std::span<const int>, Matrix& g) {
        g = Matrix::Zero(logits.rows(), logits.cols());
        return 0.0;
    };
    const auto r = eaoa::nn::train_epochs(m, x, labels, zero, cfg, 1);
    // v1 = 0.1, w1 = 0.95; v2 = 0.09 + 0.095 = 0.185, w2 = 0.8575.
    CHECK(r.model.layers()[0].weight(0, 0) == doctest::Approx(0.8575).epsilon(1e-14));
}

TEST_CASE("step decay schedule") {
    eaoa::nn::SgdConfig cfg;
    CHECK(cfg.learning_rate_at(0) == doctest::Approx(0.01));
    CHECK(cfg.learning_rate_at(39) == doctest::Approx(0.01));
    CHECK(cfg.learning_rate_at(40) == doctest::Approx(0.001));
    CHECK(cfg.learning_rate_at(80) == doctest::Approx(0.0001));
}

TEST_CASE("training is deterministic per seed and reports one loss per epoch") {
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(37, 3, rng);
    std::vector<int> y(37);
    for (int i = 0; i < 37; ++i) {
        y[static_cast<std::size_t>(i)] = x(i, 0) > 0 ? 1 : 0;
    }
    eaoa::nn::SgdConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 5;
    const eaoa::nn::BatchLoss mse = [](const Matrix& logits, std::span<const int> labels,
                                       Matrix& g) {
        g = logits;
        double l = 0.0;
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
        }
        l = 0.5 * g.squaredNorm() / static_cast<double>(logits.rows());
        g /= static_cast<double>(logits.rows());
        return l;
    };
    const auto init = Mlp::initialized({3, 4, 2}, 7);
    const auto a = eaoa::nn::train_epochs(init, x, y, mse, cfg, 99);
    const auto b = eaoa::nn::train_epochs(init, x, y, mse, cfg, 99);
    const auto c = eaoa::nn::train_epochs(init, x, y, mse, cfg, 100);
    CHECK(a.model == b.model);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK_FALSE(a.model == c.model);
    CHECK(a.loss_trace.size() == 5);
}

TEST_CASE("training rejects empty data and non-finite loss") {
    const auto init = Mlp::initialized({2, 2}, 1);
    eaoa::nn::SgdConfig cfg;
    cfg.epochs = 1;
    const eaoa::nn::BatchLoss nan_loss = [](const Matrix& logits, std::span<const int>,
                                            Matrix& g) {
        g = Matrix::Zero(logits.rows(), logits.cols());
        return std::nan("");
    };
    CHECK_THROWS(eaoa::nn::train_epochs(init, Matrix(0, 2), {}, nan_loss, cfg, 1));
    const std::vector<int> y{0, 1};
    CHECK_THROWS_AS(eaoa::nn::train_epochs(init, Matrix::Ones(2, 2), y, nan_loss, cfg, 1),
                    eaoa::NumericError);
}

TEST_CASE("checkpoint round trip is exact") {
    const auto m = Mlp::initialized({5, 4, 3}, 77);
    std::stringstream buf;
    m.save(buf);
    CHECK(Mlp::load(buf) == m);
    std::stringstream bad("not-a-checkpoint");
    CHECK_THROWS(Mlp::load(bad));
}

}  // TEST_SUITE
