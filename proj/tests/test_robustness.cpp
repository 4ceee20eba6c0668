// Survival analysis: the two survival-probability forms, the closed-form
// optimum, survival-time root finding, disk optimization, and the summary
// table behind the parameter sweeps.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "unravel/dynamics.hpp"
#include "unravel/gaussian.hpp"
#include "unravel/robustness.hpp"

using namespace unravel;

namespace {

// Values frozen from an independent high-precision implementation.
constexpr double kTauGold01 = 1.537537065985;
constexpr double kTauGold03 = 1.946941289047;
constexpr double kTauGold05 = 2.631512502572;
constexpr double kTauGold09 = 10.276063893465;
// Ensemble survival at chi = 0.5, u = -1, t in {0.5, 1, 2}.
constexpr double kSurvGold05[3] = {0.980973285464, 0.965054488389,
                                   0.940239868694};

// 4th-order integration of the unconditioned moment flow; an independent
// cross-check for the closed-form propagator in evolved_moments.
CovarianceMatrix integrate_unconditioned(CovarianceMatrix m,
                                         const OpoModel& model, double t,
                                         double dt) {
    auto rhs = [&](const CovarianceMatrix& c) {
        const auto d = unconditioned_derivatives({{}, c}, model);
        return CovarianceMatrix{d.dgamma, d.dalpha, d.dbeta};
    };
    auto axpy = [](const CovarianceMatrix& c, double s,
                   const CovarianceMatrix& k) {
        return CovarianceMatrix{c.gamma + s * k.gamma, c.alpha + s * k.alpha,
                                c.beta + s * k.beta};
    };
    int steps = static_cast<int>(std::round(t / dt));
    for (int i = 0; i < steps; ++i) {
        const auto k1 = rhs(m);
        const auto k2 = rhs(axpy(m, 0.5 * dt, k1));
        const auto k3 = rhs(axpy(m, 0.5 * dt, k2));
        const auto k4 = rhs(axpy(m, dt, k3));
        m = axpy(m, dt / 6.0,
                 {k1.gamma + 2.0 * (k2.gamma + k3.gamma) + k4.gamma,
                  k1.alpha + 2.0 * (k2.alpha + k3.alpha) + k4.alpha,
                  k1.beta + 2.0 * (k2.beta + k3.beta) + k4.beta});
    }
    return m;
}

}  // namespace

TEST_CASE("decay factors of the unmonitored propagator") {
    const OpoModel model{0.5};
    const Propagator id = make_propagator(model, 0.0);
    CHECK(id.v_plus == 1.0);
    CHECK(id.v_minus == 1.0);
    for (const double t : {0.1, 1.0, 5.0}) {
        const Propagator v = make_propagator(model, t);
        CHECK(v.v_plus == Catch::Approx(std::exp(-1.5 * t / 2.0)).margin(1e-15));
        CHECK(v.v_minus == Catch::Approx(std::exp(-0.5 * t / 2.0)).margin(1e-15));
        CHECK(v.v_plus > 0.0);
        CHECK(v.v_plus <= v.v_minus);
        CHECK(v.v_minus <= 1.0);
    }
}

TEST_CASE("unmonitored moment evolution") {
    const OpoModel model{0.5};
    const CovarianceMatrix m0{2.0 / 3.0, 1.5, 0.0};

    const auto [v0, same] = evolved_moments(m0, model, 0.0);
    CHECK(same.gamma == m0.gamma);
    CHECK(same.alpha == m0.alpha);
    CHECK(same.beta == m0.beta);

    const auto [vlong, late] = evolved_moments(m0, model, 60.0);
    const CovarianceMatrix minf = stationary_covariance(model);
    CHECK(std::abs(late.gamma - minf.gamma) < 1e-8);
    CHECK(std::abs(late.alpha - minf.alpha) < 1e-8);
    CHECK(std::abs(late.beta) < 1e-8);

    // Cross-check the closed form against direct integration of the
    // unconditioned flow, including a beta-coupled start.
    for (const auto& start :
         {m0, CovarianceMatrix{0.8, (1.0 + 0.25) / 0.8, 0.5}}) {
        const auto [v1, closed] = evolved_moments(start, model, 1.0);
        const CovarianceMatrix ode =
            integrate_unconditioned(start, model, 1.0, 1e-3);
        CHECK(std::abs(closed.gamma - ode.gamma) < 1e-8);
        CHECK(std::abs(closed.alpha - ode.alpha) < 1e-8);
        CHECK(std::abs(closed.beta - ode.beta) < 1e-8);
    }

    REQUIRE_THROWS_AS(evolved_moments(m0, model, -0.1), std::invalid_argument);
}

TEST_CASE("survival probability, determinant form") {
    const OpoModel model{0.5};
    const CovarianceMatrix m0{2.0 / 3.0, 1.5, 0.0};

    CHECK(survival_probability_integral(m0, model, 0.0) ==
          Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(survival_probability_integral(m0, model, 200.0) -
                   std::sqrt(0.75)) < 1e-9);
    for (int i = 0; i < 3; ++i) {
        const double t = (i == 0) ? 0.5 : (i == 1) ? 1.0 : 2.0;
        CHECK(std::abs(survival_probability_integral(m0, model, t) -
                       kSurvGold05[i]) < 1e-9);
    }

    // Against the closed form at the analytic fixed point.
    const OpoModel hard{0.9};
    const CovarianceMatrix m9{1.0 / 1.9, 1.9, 0.0};
    CHECK(std::abs(survival_probability_integral(m9, hard, 2.0) -
                   robust_survival(hard, 2.0)) < 1e-10);

    // Mixed member covariances and members leaking outside the stationary
    // state are both rejected.
    REQUIRE_THROWS_AS(
        survival_probability_integral(stationary_covariance(model), model, 1.0),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        survival_probability_integral({1.2, 1.0 / 1.2, 0.0}, model, 1.0),
        std::invalid_argument);
}

TEST_CASE("survival probability, scalar form") {
    const OpoModel model{0.5};

    for (const double g0 : {0.4, 0.666, 1.2}) {
        CHECK(survival_probability(g0, 0.2, model, 0.0) ==
              Catch::Approx(1.0).margin(1e-12));
    }
    // Reduces to the closed-form optimum curve at the analytic point.
    for (double t = 0.0; t <= 6.0; t += 0.3) {
        CHECK(std::abs(survival_probability(1.0 / 1.5, 0.0, model, t) -
                       robust_survival(model, t)) < 1e-12);
    }
    // Depends on the cross moment only through its square.
    CHECK(survival_probability(0.8, 0.5, model, 1.3) ==
          survival_probability(0.8, -0.5, model, 1.3));

    REQUIRE_THROWS_AS(survival_probability(0.0, 0.0, model, 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(survival_probability(-0.5, 0.0, model, 1.0),
                      std::invalid_argument);
}

TEST_CASE("both survival forms agree over schemes and times") {
    for (const double chi : {0.3, 0.9}) {
        const OpoModel model{chi};
        for (const auto& u :
             {UnravelingParam{0.0, 0.0}, UnravelingParam{0.5, 0.0},
              UnravelingParam{-0.5, 0.5}, UnravelingParam{0.0, -1.0},
              UnravelingParam{0.9, 0.1}}) {
            const CovarianceMatrix m0 =
                stationary_covariance_for_unraveling(u, model);
            for (const double t : {0.05, 0.3, 0.7, 1.5, 3.0, 6.0}) {
                const double s_int =
                    survival_probability_integral(m0, model, t);
                const double s_sc =
                    survival_probability(m0.gamma, m0.beta, model, t);
                INFO("chi=" << chi << " r=" << u.r << " h=" << u.h
                            << " t=" << t);
                CHECK(std::abs(s_int - s_sc) < 1e-10);
                CHECK(s_int > 0.0);
                CHECK(s_int <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("closed-form survival of the best scheme") {
    const OpoModel model{0.5};
    CHECK(robust_survival(model, 0.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(std::abs(robust_survival(model, 1e6) - std::sqrt(0.75)) < 1e-12);
    CHECK(std::abs(robust_survival(OpoModel{0.9}, 1e6) -
                   0.435889894354) < 1e-9);
    for (int i = 0; i < 3; ++i) {
        const double t = (i == 0) ? 0.5 : (i == 1) ? 1.0 : 2.0;
        CHECK(std::abs(robust_survival(model, t) - kSurvGold05[i]) < 1e-11);
    }
    // Monotone decreasing in the pump at fixed time.
    double prev = 1.0;
    for (double chi = 0.05; chi < 1.0; chi += 0.05) {
        const double s = robust_survival(OpoModel{chi}, 1.0);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("closed-form survival time") {
    CHECK(std::abs(robust_survival_time(OpoModel{0.1}) - kTauGold01) < 1e-9);
    CHECK(std::abs(robust_survival_time(OpoModel{0.3}) - kTauGold03) < 1e-9);
    CHECK(std::abs(robust_survival_time(OpoModel{0.5}) - kTauGold05) < 1e-9);
    CHECK(std::abs(robust_survival_time(OpoModel{0.9}) - kTauGold09) < 1e-9);
    CHECK(robust_survival_time(OpoModel{0.0}) == 2.0 * std::log(2.0));
    // The pump enters only through its magnitude.
    CHECK(robust_survival_time(OpoModel{-0.5}) ==
          robust_survival_time(OpoModel{0.5}));

    // Crossing identity on a pump grid.
    for (double chi = 0.1; chi < 0.95; chi += 0.1) {
        const OpoModel model{chi};
        CHECK(std::abs(robust_survival(model, robust_survival_time(model)) -
                       largest_eigenvalue(model)) < 1e-9);
    }

    // Cancellation-free small-pump behavior: tau follows
    // 2 ln 2 (1 + chi) + O(chi^2), which a naive evaluation of the
    // closed form cannot resolve at chi = 1e-6.
    const double tau_small = robust_survival_time(OpoModel{1e-6});
    CHECK(std::abs(tau_small - 2.0 * std::log(2.0) * (1.0 + 1e-6)) < 1e-10);

    // Rate of divergence toward threshold: (1 - chi) tau stays bounded,
    // positive, and non-increasing on [0.9, 0.999].
    double prev = 1e9;
    for (double chi = 0.9; chi <= 0.999 + 1e-12; chi += 1e-3) {
        const double q = (1.0 - chi) * robust_survival_time(OpoModel{chi});
        CHECK(q > 0.0);
        CHECK(q < 2.0);
        CHECK(q <= prev + 1e-12);
        prev = q;
    }
}

TEST_CASE("survival time from the scan-and-bisect root finder") {
    const OpoModel hard{0.9};
    const SurvivalTime tau9 =
        survival_time(UnravelingParam{-1.0, 0.0}, hard);
    CHECK(std::abs(tau9.tau - kTauGold09) < 1e-8);
    CHECK(tau9.bracket_lo <= tau9.tau);
    CHECK(tau9.tau <= tau9.bracket_hi);

    // The crossing really is a crossing of the stationary eigenvalue.
    const CovarianceMatrix m0 =
        stationary_covariance_for_unraveling(UnravelingParam{-1.0, 0.0}, hard);
    CHECK(std::abs(
              survival_probability(m0.gamma, m0.beta, hard, tau9.tau) -
              largest_eigenvalue(hard)) < 1e-9);

    // No other scheme survives longer.
    const OpoModel half{0.5};
    const double tau_best = robust_survival_time(half);
    for (const auto& u :
         {UnravelingParam{1.0, 0.0}, UnravelingParam{0.0, 1.0},
          UnravelingParam{0.5, 0.5}, UnravelingParam{0.0, 0.0}}) {
        const SurvivalTime tau = survival_time(u, half);
        CHECK(tau.tau > 0.0);
        CHECK(tau.tau <= tau_best + 1e-9);
    }
}

TEST_CASE("disk optimization finds the most robust scheme") {
    const OpoModel model{0.5};
    const OptimizationResult res = optimal_unraveling(model, 11, 16);
    CHECK(std::hypot(res.u.r + 1.0, res.u.h) < 1e-2);
    CHECK(std::abs(res.tau.tau - robust_survival_time(model)) < 1e-6);
    CHECK(res.failed_points == 0);
    CHECK(res.landscape.size() == 10 * 16 + 1);
    for (const auto& sample : res.landscape) {
        REQUIRE(sample.ok);
        CHECK(sample.tau <= robust_survival_time(model) + 1e-9);
    }
    REQUIRE_THROWS_AS(optimal_unraveling(OpoModel{0.0}), std::invalid_argument);
}

TEST_CASE("summary table rows and trends") {
    const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4,
                                   0.5, 0.6, 0.7, 0.8, 0.9};
    const auto rows = figure2_table(grid);
    REQUIRE(rows.size() == grid.size());

    CHECK(rows[0].tau_R == 2.0 * std::log(2.0));
    CHECK(rows[0].alpha_inf == 1.0);
    CHECK(rows[0].alpha0_R == 1.0);
    CHECK(rows[0].lambda == 1.0);
    CHECK(rows[0].s_inf == 1.0);

    CHECK(std::abs(rows[9].tau_R - kTauGold09) < 1e-9);
    CHECK(std::abs(rows[9].alpha_inf - 10.0) < 1e-9);
    CHECK(std::abs(rows[9].alpha0_R - 1.9) < 1e-12);
    CHECK(std::abs(rows[9].lambda - 0.607135541615) < 1e-9);
    CHECK(std::abs(rows[9].s_inf - 0.435889894354) < 1e-9);

    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].tau_R > rows[i - 1].tau_R);
        CHECK(rows[i].alpha_inf > rows[i - 1].alpha_inf);
        CHECK(rows[i].alpha0_R > rows[i - 1].alpha0_R);
        CHECK(rows[i].lambda < rows[i - 1].lambda);
        CHECK(rows[i].s_inf < rows[i - 1].s_inf);
    }

    REQUIRE_THROWS_AS(figure2_table({1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(figure2_table({-0.1}), std::invalid_argument);
}
