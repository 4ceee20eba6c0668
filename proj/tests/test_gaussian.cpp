// Gaussian state algebra: model validation, stationary covariance,
// purity, stationary-state largest eigenvalue, and two-state overlaps.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "unravel/gaussian.hpp"

using namespace unravel;

namespace {

// Hand-picked valid covariances (det >= 1) used across property checks.
const std::vector<CovarianceMatrix> kValidCovariances = {
    {1.3, 1.1, 0.4}, {0.7, 1.6, 0.2},  {2.0, 2.0, -0.8},
    {1.0, 1.0, 0.0}, {0.52, 2.1, -0.3},
};

// Values frozen from an independent high-precision implementation.
struct LambdaGold {
    double chi;
    double lambda;
};
const std::vector<LambdaGold> kLambdaGold = {
    {0.1, 0.997487421324},
    {0.3, 0.976426698154},
    {0.5, 0.928203230276},
    {0.9, 0.607135541615},
};

}  // namespace

TEST_CASE("pump parameter is validated") {
    REQUIRE_THROWS_AS(OpoModel{1.0}, std::invalid_argument);
    REQUIRE_THROWS_AS(OpoModel{-1.0}, std::invalid_argument);
    REQUIRE_THROWS_AS(OpoModel{1.5}, std::invalid_argument);
    REQUIRE_NOTHROW(OpoModel{0.999});
    REQUIRE_NOTHROW(OpoModel{-0.5});
    REQUIRE_NOTHROW(OpoModel{0.0});
}

TEST_CASE("stationary covariance of the damped pumped cavity") {
    const CovarianceMatrix m = stationary_covariance(OpoModel{0.5});
    CHECK(m.gamma == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(m.alpha == Catch::Approx(2.0).margin(1e-15));
    CHECK(m.beta == 0.0);

    const CovarianceMatrix vac = stationary_covariance(OpoModel{0.0});
    CHECK(vac.gamma == 1.0);
    CHECK(vac.alpha == 1.0);
    CHECK(vac.beta == 0.0);

    // Negative pump swaps the squeezed and amplified axes.
    const CovarianceMatrix neg = stationary_covariance(OpoModel{-0.5});
    CHECK(neg.gamma == Catch::Approx(2.0).margin(1e-15));
    CHECK(neg.alpha == Catch::Approx(2.0 / 3.0).margin(1e-15));
}

TEST_CASE("covariance validity checks") {
    CHECK(is_valid_quantum_covariance({1.0, 1.0, 0.0}));
    CHECK_FALSE(is_valid_quantum_covariance({0.5, 0.5, 0.0}));
    CHECK_FALSE(is_valid_quantum_covariance({-1.0, -2.0, 0.0}));
    // det = 1 - beta^2 < 1 even though the diagonal looks fine.
    CHECK_FALSE(is_valid_quantum_covariance({1.0, 1.0, 0.5}));

    for (const double chi : {0.3, 0.5, 0.9}) {
        const CovarianceMatrix pure{1.0 / (1.0 + chi), 1.0 + chi, 0.0};
        CHECK(is_valid_quantum_covariance(pure));
        CHECK(std::abs(pure.det() - 1.0) < 1e-15);
    }
}

TEST_CASE("covariance eigenvalue helpers satisfy trace and det identities") {
    for (const auto& m : kValidCovariances) {
        const double lo = m.min_eigenvalue();
        const double hi = m.gamma + m.alpha - lo;
        CHECK(lo * hi == Catch::Approx(m.det()).margin(1e-12));
        CHECK(lo <= std::min(m.gamma, m.alpha) + 1e-12);
        CHECK(lo > 0.0);
    }
}

TEST_CASE("purity of the stationary state is sqrt(1 - chi^2)") {
    for (const double chi :
         {-0.99, -0.9, -0.5, -0.3, 0.0, 0.3, 0.5, 0.9, 0.99}) {
        const OpoModel model{chi};
        const double p = purity(stationary_covariance(model));
        CHECK(std::abs(p - std::sqrt(1.0 - chi * chi)) < 1e-12);
    }
}

TEST_CASE("purity bounds and rejection") {
    for (const auto& m : kValidCovariances) {
        const double p = purity(m);
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
        if (m.det() > 1.0 + 1e-9) {
            CHECK(p < 1.0);
        }
    }
    CHECK(purity({1.0, 1.0, 0.0}) == 1.0);
    CHECK(purity({2.0, 2.0, 0.0}) == Catch::Approx(0.5).margin(1e-15));
    // det within tolerance of 1 clamps to exactly 1 instead of exceeding it.
    CHECK(purity({1.0 - 5e-13, 1.0, 0.0}) == 1.0);
    REQUIRE_THROWS_AS(purity({0.5, 0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("largest stationary eigenvalue") {
    CHECK(largest_eigenvalue(OpoModel{0.0}) == 1.0);
    for (const auto& g : kLambdaGold) {
        CHECK(std::abs(largest_eigenvalue(OpoModel{g.chi}) - g.lambda) <
              1e-12);
    }
    // Lambda dominates the stationary purity and decreases with pumping.
    double prev = 1.0 + 1e-12;
    for (double chi = 0.0; chi < 0.95; chi += 0.05) {
        const OpoModel model{chi};
        const double lambda = largest_eigenvalue(model);
        CHECK(lambda >= purity(stationary_covariance(model)) - 1e-12);
        CHECK(lambda < prev);
        prev = lambda;
    }
}

TEST_CASE("overlap regression against the number-basis calibration") {
    // Two pure squeezed states (the chi=0.5 stationary member covariance)
    // displaced relative to each other by (1, 0); the exponent prefactor
    // was calibrated against the number-basis oracle and frozen. The
    // analytic value of this configuration is exp(-3/8).
    const CovarianceMatrix member{2.0 / 3.0, 1.5, 0.0};
    const GaussianState s1{{1.0, 0.0}, member};
    const GaussianState s2{{0.0, 0.0}, member};
    const double overlap = gaussian_overlap(s1, s2);
    CHECK(std::abs(overlap - 0.687289278790972) < 1e-12);
    CHECK(gaussian_overlap(s2, s1) == Catch::Approx(overlap).margin(1e-15));
}

TEST_CASE("overlap of a state with itself equals its purity") {
    for (const auto& m : kValidCovariances) {
        const GaussianState s{{0.3, -1.1}, m};
        CHECK(std::abs(gaussian_overlap(s, s) - purity(m)) < 1e-12);
    }
}

TEST_CASE("overlap reproduces the coherent-state law for displaced vacua") {
    const CovarianceMatrix vac{1.0, 1.0, 0.0};
    for (const auto& mu : std::vector<MeanVector>{
             {0.0, 0.0}, {1.0, 0.0}, {0.0, -2.0}, {1.5, 2.5}, {-0.3, 0.7}}) {
        const double got =
            gaussian_overlap({{0.0, 0.0}, vac}, {mu, vac});
        const double want =
            std::exp(-(mu.x_bar * mu.x_bar + mu.y_bar * mu.y_bar) / 4.0);
        CHECK(std::abs(got - want) < 1e-12);
    }
}

TEST_CASE("overlap range and monotone decay with separation") {
    for (const auto& m1 : kValidCovariances) {
        for (const auto& m2 : kValidCovariances) {
            const double o =
                gaussian_overlap({{0.2, -0.5}, m1}, {{-1.0, 0.4}, m2});
            CHECK(o > 0.0);
            CHECK(o <= 1.0 + 1e-12);
        }
    }
    // Fixed covariances, growing separation along a ray.
    const GaussianState base{{0.0, 0.0}, {1.3, 1.1, 0.4}};
    double prev = 2.0;
    for (double s = 0.0; s < 3.0; s += 0.25) {
        const double o =
            gaussian_overlap(base, {{s * 1.0, s * 2.0}, {0.7, 1.6, 0.2}});
        CHECK(o < prev);
        prev = o;
    }
}

TEST_CASE("overlap rejects unphysical covariances") {
    const GaussianState good{{0.0, 0.0}, {1.0, 1.0, 0.0}};
    const GaussianState bad{{0.0, 0.0}, {0.5, 0.5, 0.0}};
    REQUIRE_THROWS_AS(gaussian_overlap(good, bad), std::invalid_argument);
    REQUIRE_THROWS_AS(gaussian_overlap(bad, good), std::invalid_argument);
}
