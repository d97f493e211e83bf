#include "eaoa/score_fusion.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

namespace fu = eaoa::fusion;

TEST_SUITE("fusion") {

TEST_CASE("recovers a well-separated two-Gaussian mixture") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> lo(-5.0, 1.0);
    std::normal_distribution<double> hi(5.0, 1.0);
    std::vector<double> x;
    for (int i = 0; i < 200; ++i) {
        x.push_back(lo(rng));
        x.push_back(hi(rng));
    }
    const auto fit = fu::fit_gmm(x);
    const auto& g = fit.model;
    CHECK(std::abs(g.means[g.low_component] + 5.0) < 0.5);
    CHECK(std::abs(g.means[g.high_component()] - 5.0) < 0.5);
    CHECK(std::abs(g.weights[0] - 0.5) < 0.1);
    CHECK(std::abs(g.weights[0] + g.weights[1] - 1.0) < 1e-9);
    CHECK(fit.converged);
}

TEST_CASE("two-level scores split into components near each level") {
    const std::vector<double> x{0, 0, 0, 1, 1, 1};
    const auto g = fu::fit_gmm(x).model;
    CHECK(g.means[g.low_component] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(g.means[g.high_component()] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.variances[0] >= 1e-6);
    CHECK(g.variances[1] >= 1e-6);
}

TEST_CASE("log-likelihood never decreases") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
        std::normal_distribution<double> a(0.0, 1.0 + t % 3);
        std::normal_distribution<double> b(1.0 + t % 4, 0.5);
        std::vector<double> x;
        for (int i = 0; i < 30 + 5 * t; ++i) {
            x.push_back(i % 3 == 0 ? b(rng) : a(rng));
        }
        const auto ll = fu::fit_gmm(x).log_likelihood;
        REQUIRE(ll.size() >= 2);
        for (std::size_t i = 1; i < ll.size(); ++i) {
            CHECK(ll[i] >= ll[i - 1] - 1e-9);
        }
    }
}

TEST_CASE("posterior properties") {
    fu::Gmm1d g;
    g.means = {-2.0, 4.0};
    g.variances = {1.5, 1.5};
    g.weights = {0.5, 0.5};
    g.low_component = 0;
    const auto mid = fu::to_probabilistic(g, std::vector<double>{1.0});
    CHECK(std::abs(mid[0] - 0.5) < 1e-6);
    const auto tail = fu::to_probabilistic(g, std::vector<double>{4.0 + 10 * std::sqrt(1.5)});
    CHECK(tail[0] > 0.999);
    const auto r = g.responsibilities(0.3);
    CHECK(std::abs(r[0] + r[1] - 1.0) < 1e-12);
    // Monotone for equal variances.
    std::vector<double> xs;
    for (int i = -40; i <= 40; ++i) {
        xs.push_back(0.25 * i);
    }
    const auto p = fu::to_probabilistic(g, xs);
    for (std::size_t i = 1; i < p.size(); ++i) {
        CHECK(p[i] >= p[i - 1]);
    }
}

TEST_CASE("posterior matches direct Bayes rule on a fitted model") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> a(-1.0, 0.7);
    std::normal_distribution<double> b(2.0, 1.3);
    std::vector<double> x;
    for (int i = 0; i < 300; ++i) {
        x.push_back(i % 4 == 0 ? b(rng) : a(rng));
    }
    const auto g = fu::fit_gmm(x).model;
    const auto p = fu::to_probabilistic(g, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(std::abs(p[i] - static_cast<double>(oracle::posterior_high(g, x[i]))) < 1e-12);
    }
}

TEST_CASE("degenerate scores") {
    CHECK_THROWS_AS(fu::fit_gmm(std::vector<double>(10, 2.0)), fu::DegenerateScores);
    CHECK_THROWS_AS(fu::fit_gmm(std::vector<double>{1, 2, 3}), fu::DegenerateScores);
    const auto flat = fu::probabilistic_or_fallback(std::vector<double>(5, 1.0));
    CHECK_FALSE(flat.fitted);
    for (double v : flat.values) {
        CHECK(v == 0.5);
    }
    const auto few = fu::probabilistic_or_fallback(std::vector<double>{1.0, 3.0, 2.0});
    CHECK(few.values == std::vector<double>{0.0, 1.0, 0.5});
}

TEST_CASE("product fusion") {
    CHECK(fu::fuse_eu(std::vector<double>{0.5}, std::vector<double>{0.5})[0] == 0.25);
    CHECK(fu::fuse_eu(std::vector<double>{0.7, 0.0}, std::vector<double>{0.0, 0.3}) ==
          std::vector<double>{0.0, 0.0});
    CHECK(fu::fuse_eu(std::vector<double>{1, 1}, std::vector<double>{1, 1}) ==
          std::vector<double>{1, 1});
    CHECK_THROWS_AS(fu::fuse_eu(std::vector<double>{1}, std::vector<double>{1, 1}),
                    eaoa::ShapeError);
}

}  // TEST_SUITE
