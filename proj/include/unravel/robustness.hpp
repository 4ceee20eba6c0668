#pragma once

// Survival analysis of stationary conditional ensembles: how long a
// snapshot of the monitored ensemble remains a good description of the
// unmonitored cavity. Implements the ensemble-average survival
// probability S(t) (determinant and scalar closed forms), the survival
// time tau (first crossing of the stationary state's largest eigenvalue),
// the closed forms at the optimal scheme u = -1, and a derivative-free
// maximization of tau over the unit disk of schemes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "unravel/dynamics.hpp"
#include "unravel/gaussian.hpp"

namespace unravel {

// Quadrature damping factors over a time interval t:
// v_pm = exp(-(1 pm chi) t / 2). The squeezed quadrature (x) relaxes
// faster; for chi >= 0, v_plus <= v_minus.
struct Propagator {
    double t = 0.0;
    double v_plus = 1.0;
    double v_minus = 1.0;
};

inline Propagator make_propagator(const OpoModel& model, double t) {
    return {t, std::exp(-(1.0 + model.chi) * t / 2.0),
            std::exp(-(1.0 - model.chi) * t / 2.0)};
}

// Unmonitored evolution of a Gaussian's moments over time t:
//   mu_t = V mu,   M_t = V M0 V^T + M_inf - V M_inf V^T,
// with V = diag(v_plus, v_minus). Returns the propagator and M_t.
inline std::pair<Propagator, CovarianceMatrix> evolved_moments(
    const CovarianceMatrix& m0, const OpoModel& model, double t) {
    if (t < 0.0) {
        throw std::invalid_argument("evolved_moments: negative time");
    }
    const Propagator p = make_propagator(model, t);
    const CovarianceMatrix minf = stationary_covariance(model);
    const double vp2 = p.v_plus * p.v_plus;
    const double vm2 = p.v_minus * p.v_minus;
    return {p,
            {vp2 * m0.gamma + (1.0 - vp2) * minf.gamma,
             vm2 * m0.alpha + (1.0 - vm2) * minf.alpha,
             p.v_plus * p.v_minus * m0.beta}};
}

// Ensemble-average survival probability, determinant form: the average
// over members (means weighted by the stationary spread M_inf - M0) of
// the overlap between a member and its unmonitored evolution,
//   S(t) = det( [ (1-V)(M_inf - M0)(1-V^T) + M_t + M0 ] / 2 )^(-1/2).
inline double survival_probability_integral(const CovarianceMatrix& m0,
                                            const OpoModel& model, double t) {
    if (std::abs(m0.det() - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "survival_probability_integral: members must be pure (det = 1)");
    }
    const CovarianceMatrix minf = stationary_covariance(model);
    const CovarianceMatrix w{minf.gamma - m0.gamma, minf.alpha - m0.alpha,
                             minf.beta - m0.beta};
    if (w.min_eigenvalue() < -1e-8 * (1.0 + w.norm())) {
        throw std::invalid_argument(
            "survival_probability_integral: mean-spread matrix not PSD");
    }
    const auto [p, mt] = evolved_moments(m0, model, t);
    const double fp = 1.0 - p.v_plus;
    const double fm = 1.0 - p.v_minus;
    const double xx = 0.5 * (fp * fp * w.gamma + mt.gamma + m0.gamma);
    const double yy = 0.5 * (fm * fm * w.alpha + mt.alpha + m0.alpha);
    const double xy = 0.5 * (fp * fm * w.beta + mt.beta + m0.beta);
    return 1.0 / std::sqrt(xx * yy - xy * xy);
}

// Same quantity in scalar closed form, written directly in the member
// covariance entries (gamma0, beta0) — alpha0 is eliminated by purity.
// Agrees with the determinant form to roundoff; kept separate as a
// cross-check and because it only needs two of the three entries.
inline double survival_probability(double gamma0, double beta0,
                                   const OpoModel& model, double t) {
    if (!(gamma0 > 0.0)) {
        throw std::invalid_argument("survival_probability: gamma0 <= 0");
    }
    const double chi = model.chi;
    const Propagator p = make_propagator(model, t);
    const double vp = p.v_plus, vm = p.v_minus;
    const double bracket =
        vp * vm + vm * (1.0 - vp) / ((1.0 + chi) * gamma0) +
        vp * (1.0 - vm) * gamma0 / (1.0 - chi) +
        (1.0 - vp) * (1.0 - vm) / (1.0 - chi * chi) +
        beta0 * beta0 * (vm * (1.0 - vp) / ((1.0 + chi) * gamma0) -
                         0.25 * (vp - vm) * (vp - vm));
    return 1.0 / std::sqrt(bracket);
}

// Survival probability of the most robust ensemble (u = -1, where
// gamma0 = 1/(1+chi), beta0 = 0):
//   S_R(t) = sqrt((1 - chi^2) / (1 - chi^2 exp(-(1-chi) t / 2))).
inline double robust_survival(const OpoModel& model, double t) {
    const double c2 = model.chi * model.chi;
    return std::sqrt((1.0 - c2) / (1.0 - c2 * std::exp(-(1.0 - model.chi) * t / 2.0)));
}

// Closed-form survival time of the u = -1 ensemble. Algebraically
//   tau_R = (2/(1-chi)) ln[4 chi^2 / (2 + chi^2 - 2 sqrt(1-chi^2))],
// evaluated here through the identity
//   2 + chi^2 - 2 sqrt(1-chi^2) = chi^2 (3+s)/(1+s),  s = sqrt(1-chi^2),
// which avoids the catastrophic cancellation of the textbook arrangement
// as chi -> 0 (where tau_R -> 2 ln 2).
inline double robust_survival_time(const OpoModel& model) {
    const double chi = std::abs(model.chi);
    if (chi == 0.0) {
        return 2.0 * std::log(2.0);
    }
    const double s = std::sqrt(1.0 - chi * chi);
    return 2.0 / (1.0 - chi) * std::log(4.0 * (1.0 + s) / (3.0 + s));
}

// Survival time of a scheme's ensemble: the first time S(t) falls to
// Lambda, the largest eigenvalue of the stationary state. The crossing is
// bracketed by a forward scan (never assuming S is monotone), then
// refined by bisection.
struct SurvivalTime {
    double tau = 0.0;
    double bracket_lo = 0.0;  // scan bracket around the first crossing
    double bracket_hi = 0.0;
};

// Scan step of the crossing search, in lifetimes.
inline constexpr double kSurvivalScanStep = 0.01;

namespace detail {

// Scan cap: generous multiple of the optimal survival time's growth rate.
inline double survival_scan_cap(const OpoModel& model) {
    const double chi = std::abs(model.chi);
    return 10.0 * (2.0 / (1.0 - chi)) * std::log(4.0 / (1.0 - chi));
}

template <typename SurvivalFn>
SurvivalTime first_crossing(const SurvivalFn& survival, double lambda,
                            double t_cap) {
    double t_prev = 0.0;
    double s_prev = survival(0.0);
    if (s_prev <= lambda) {
        return {0.0, 0.0, 0.0};
    }
    double t = 0.0;
    while (t < t_cap) {
        t += kSurvivalScanStep;
        const double s = survival(t);
        if (s <= lambda) {
            double lo = t_prev, hi = t;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                (survival(mid) > lambda ? lo : hi) = mid;
            }
            return {0.5 * (lo + hi), t_prev, t};
        }
        t_prev = t;
        s_prev = s;
    }
    throw std::runtime_error(
        "survival_time: no crossing of Lambda before the scan cap");
}

}  // namespace detail

inline SurvivalTime survival_time(const UnravelingParam& u,
                                  const OpoModel& model) {
    const CovarianceMatrix m0 = stationary_covariance_for_unraveling(u, model);
    const double lambda = largest_eigenvalue(model);
    const auto survival = [&](double t) {
        return survival_probability(m0.gamma, m0.beta, model, t);
    };
    return detail::first_crossing(survival, lambda,
                                  detail::survival_scan_cap(model));
}

// Result of maximizing tau over the closed unit disk of schemes.
struct LandscapeSample {
    double r = 0.0;
    double h = 0.0;
    double tau = 0.0;
    bool ok = false;
};

struct OptimizationResult {
    UnravelingParam u{-1.0, 0.0};
    SurvivalTime tau;
    std::vector<LandscapeSample> landscape;  // the coarse polar grid
    std::size_t failed_points = 0;
};

// Maximizes the survival time over u by a coarse polar grid (radii x
// angles, including the center and the rim) followed by coordinate
// descent with shrinking steps; terminates when a full sweep moves u by
// less than 1e-3. Point failures (stationary solve or crossing search)
// are skipped and counted. Ties on tau break lexicographically on (r, h)
// so the scan order never matters.
inline OptimizationResult optimal_unraveling(const OpoModel& model,
                                             std::size_t n_radii = 21,
                                             std::size_t n_angles = 32) {
    if (model.chi == 0.0) {
        throw std::invalid_argument(
            "optimal_unraveling: chi = 0 is degenerate (every scheme gives "
            "the vacuum ensemble)");
    }
    if (n_radii < 2 || n_angles < 4) {
        throw std::invalid_argument("optimal_unraveling: grid too coarse");
    }
    const double pi = std::acos(-1.0);

    OptimizationResult out;
    double best_tau = -1.0;
    double best_r = 0.0, best_h = 0.0;
    bool have_best = false;

    const auto consider = [&](double r, double h, double tau) {
        if (!have_best || tau > best_tau ||
            (tau == best_tau && std::pair{r, h} < std::pair{best_r, best_h})) {
            have_best = true;
            best_tau = tau;
            best_r = r;
            best_h = h;
        }
    };
    const auto tau_at = [&](double r, double h, bool* ok) -> double {
        try {
            const SurvivalTime st = survival_time({r, h}, model);
            *ok = true;
            return st.tau;
        } catch (const std::exception&) {
            *ok = false;
            return 0.0;
        }
    };

    // Coarse polar grid. Radius 0 contributes a single center point.
    out.landscape.reserve(1 + (n_radii - 1) * n_angles);
    for (std::size_t i = 0; i < n_radii; ++i) {
        const double radius =
            static_cast<double>(i) / static_cast<double>(n_radii - 1);
        const std::size_t angles = (i == 0) ? 1 : n_angles;
        for (std::size_t k = 0; k < angles; ++k) {
            const double theta =
                2.0 * pi * static_cast<double>(k) / static_cast<double>(angles);
            const double r = radius * std::cos(theta);
            const double h = radius * std::sin(theta);
            bool ok = false;
            const double tau = tau_at(r, h, &ok);
            out.landscape.push_back({r, h, tau, ok});
            if (ok) {
                consider(r, h, tau);
            } else {
                ++out.failed_points;
            }
        }
    }
    if (!have_best) {
        throw std::runtime_error(
            "optimal_unraveling: every grid point failed");
    }

    // Coordinate descent from the best grid point, clipped to the disk.
    double step = 1.0 / static_cast<double>(n_radii - 1);
    while (step >= 1e-3) {
        bool moved = false;
        for (int axis = 0; axis < 2; ++axis) {
            for (double sign : {+1.0, -1.0}) {
                double r = best_r + (axis == 0 ? sign * step : 0.0);
                double h = best_h + (axis == 1 ? sign * step : 0.0);
                const double norm = std::hypot(r, h);
                if (norm > 1.0) {
                    r /= norm;
                    h /= norm;
                }
                bool ok = false;
                const double tau = tau_at(r, h, &ok);
                if (ok && tau > best_tau) {
                    best_tau = tau;
                    best_r = r;
                    best_h = h;
                    moved = true;
                }
            }
        }
        if (!moved) {
            step *= 0.5;
        }
    }

    out.u = UnravelingParam{best_r, best_h};
    out.tau = survival_time(out.u, model);
    return out;
}

// One row of the closed-form characterization of the optimal ensemble as
// a function of chi: survival time, stationary anti-squeezing, member
// anti-squeezing, largest stationary eigenvalue, and S(infinity).
struct RobustnessSummaryRow {
    double chi = 0.0;
    double tau_R = 0.0;
    double alpha_inf = 0.0;  // stationary <y^2> = 1/(1-chi)
    double alpha0_R = 0.0;   // member <y^2> at u = -1, equals 1+chi
    double lambda = 0.0;
    double s_inf = 0.0;      // limiting survival sqrt(1-chi^2)
};

inline std::vector<RobustnessSummaryRow> figure2_table(
    const std::vector<double>& chi_grid) {
    std::vector<RobustnessSummaryRow> rows;
    rows.reserve(chi_grid.size());
    for (const double chi : chi_grid) {
        if (!(chi >= 0.0 && chi < 1.0)) {
            throw std::invalid_argument(
                "figure2_table: chi values must lie in [0, 1)");
        }
        const OpoModel model{chi};
        rows.push_back({chi, robust_survival_time(model), 1.0 / (1.0 - chi),
                        1.0 + chi, largest_eigenvalue(model),
                        std::sqrt(1.0 - chi * chi)});
    }
    return rows;
}

}  // namespace unravel
