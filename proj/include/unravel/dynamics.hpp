#pragma once

// Deterministic second-moment dynamics of the cavity mode under a
// continuous diffusive measurement scheme parameterized by a complex
// number u = r + ih on the closed unit disk (the self-correlation of the
// complex Wiener noise driving the conditional evolution).
//
// Provides: the moment derivative field, fixed-step integration of the
// covariance flow, the stationary conditional covariance M0(u), the
// inverse (covariance -> u) linear solve, both region boundaries in the
// (beta, gamma) plane, and the stationary-ensemble descriptor
// (shared pure covariance + Gaussian spread of member means).

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "unravel/gaussian.hpp"

namespace unravel {

// Tolerance on r^2 + h^2 <= 1 when classifying an inverse solution as
// physically realizable.
inline constexpr double kRealizableTol = 1e-6;

// Noise self-correlation u = r + ih, with dW^2 = u dt and |dW|^2 = dt.
// Physical schemes require |u| <= 1 (the joint quadrature-noise covariance
// must stay positive semidefinite); construction enforces that.
struct UnravelingParam {
    double r;
    double h;

    UnravelingParam(double r_, double h_) : r(r_), h(h_) {
        if (r * r + h * h > 1.0 + 1e-12) {
            throw std::invalid_argument(
                "UnravelingParam: require r^2 + h^2 <= 1");
        }
    }

    double norm() const { return std::hypot(r, h); }
};

// Drift of the conditional moments, plus the complex coefficients that
// multiply dW(t) in the stochastic mean equations. The covariance
// derivatives carry no stochastic part: second moments evolve
// deterministically under this class of schemes.
struct MomentDerivatives {
    double dx_bar = 0.0;
    double dy_bar = 0.0;
    double dgamma = 0.0;
    double dalpha = 0.0;
    double dbeta = 0.0;
    std::complex<double> x_noise_coeff{0.0, 0.0};
    std::complex<double> y_noise_coeff{0.0, 0.0};
};

// Moment drift with the measurement-conditioning terms removed: the
// evolution any initial Gaussian follows when nobody watches the output.
inline MomentDerivatives unconditioned_derivatives(const GaussianState& state,
                                                   const OpoModel& model) {
    const double chi = model.chi;
    MomentDerivatives d;
    d.dx_bar = -(1.0 + chi) * state.mean.x_bar / 2.0;
    d.dy_bar = -(1.0 - chi) * state.mean.y_bar / 2.0;
    d.dgamma = -(1.0 + chi) * state.cov.gamma + 1.0;
    d.dalpha = -(1.0 - chi) * state.cov.alpha + 1.0;
    d.dbeta = -state.cov.beta;
    return d;
}

namespace detail {

// Conditional moment derivatives for raw correlation components (r, h),
// without the unit-disk validation — used internally and by diagnostics
// that probe stationarity outside the physical disk.
inline MomentDerivatives conditional_derivatives(const GaussianState& state,
                                                 double r, double h,
                                                 const OpoModel& model) {
    const double g = state.cov.gamma;
    const double a = state.cov.alpha;
    const double b = state.cov.beta;

    MomentDerivatives d = unconditioned_derivatives(state, model);
    d.dgamma += 0.5 * (-(1.0 + r) * (g - 1.0) * (g - 1.0) -
                       (1.0 - r) * b * b + 2.0 * h * (g - 1.0) * b);
    d.dalpha += 0.5 * (-(1.0 - r) * (a - 1.0) * (a - 1.0) -
                       (1.0 + r) * b * b + 2.0 * h * (a - 1.0) * b);
    d.dbeta += 0.5 * (-(1.0 + r) * (g - 1.0) * b - (1.0 - r) * (a - 1.0) * b +
                      h * (b * b + (g - 1.0) * (a - 1.0)));
    d.x_noise_coeff = {g - 1.0, b};
    d.y_noise_coeff = {b, a - 1.0};
    return d;
}

// Covariance sector of the raw drift.
inline CovarianceMatrix cov_rhs_raw(const CovarianceMatrix& m, double r,
                                    double h, const OpoModel& model) {
    const MomentDerivatives d = conditional_derivatives({{}, m}, r, h, model);
    return {d.dgamma, d.dalpha, d.dbeta};
}

}  // namespace detail

// Full conditional moment derivatives for the scheme u. The conditioning
// contribution to each covariance derivative is
//   -1/2 (Re[u z_j z_k] + Re[z_j conj(z_k)]),
// where z_x = (gamma - 1) + i beta and z_y = beta + i (alpha - 1) are the
// noise coefficients of the mean equations; the same z's are returned so
// stochastic integrators can share them.
inline MomentDerivatives moment_derivatives(const GaussianState& state,
                                            const UnravelingParam& u,
                                            const OpoModel& model) {
    return detail::conditional_derivatives(state, u.r, u.h, model);
}

namespace detail {

// Covariance sector of the drift, as a plain vector field for integration.
inline CovarianceMatrix cov_rhs(const CovarianceMatrix& m,
                                const UnravelingParam& u,
                                const OpoModel& model) {
    const MomentDerivatives d = moment_derivatives({{}, m}, u, model);
    return {d.dgamma, d.dalpha, d.dbeta};
}

inline CovarianceMatrix axpy(const CovarianceMatrix& m, double s,
                             const CovarianceMatrix& k) {
    return {m.gamma + s * k.gamma, m.alpha + s * k.alpha, m.beta + s * k.beta};
}

inline bool finite(const CovarianceMatrix& m) {
    return std::isfinite(m.gamma) && std::isfinite(m.alpha) &&
           std::isfinite(m.beta);
}

}  // namespace detail

// Default fixed step of the 4th-order covariance integrator, in lifetimes.
inline constexpr double kCovarianceStep = 1e-3;

// Integrates the deterministic covariance flow for time t with a
// fixed-step classical 4th-order scheme. Throws if the trajectory
// diverges (which cannot happen for |u| <= 1 and a valid start).
inline CovarianceMatrix integrate_covariance(const CovarianceMatrix& m0,
                                             const UnravelingParam& u,
                                             const OpoModel& model, double t,
                                             double dt = kCovarianceStep) {
    if (t < 0.0) {
        throw std::invalid_argument("integrate_covariance: negative time");
    }
    CovarianceMatrix m = m0;
    double remaining = t;
    while (remaining > 0.0) {
        const double s = std::min(dt, remaining);
        const CovarianceMatrix k1 = detail::cov_rhs(m, u, model);
        const CovarianceMatrix k2 =
            detail::cov_rhs(detail::axpy(m, 0.5 * s, k1), u, model);
        const CovarianceMatrix k3 =
            detail::cov_rhs(detail::axpy(m, 0.5 * s, k2), u, model);
        const CovarianceMatrix k4 =
            detail::cov_rhs(detail::axpy(m, s, k3), u, model);
        m.gamma += s / 6.0 * (k1.gamma + 2.0 * k2.gamma + 2.0 * k3.gamma + k4.gamma);
        m.alpha += s / 6.0 * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha);
        m.beta += s / 6.0 * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta);
        if (!detail::finite(m) || m.norm() > 1e6) {
            throw std::runtime_error(
                "integrate_covariance: trajectory diverged (step too large?)");
        }
        remaining -= s;
    }
    return m;
}

// Unique attracting fixed point M0(u) of the conditional covariance flow,
// found by forward integration from the vacuum with convergence detection:
// stop once max|dM/dt| < 1e-12, fail past the cap t = 1e4 / (1 - |chi|)
// (relaxation slows down critically as |chi| -> 1).
inline CovarianceMatrix stationary_covariance_for_unraveling(
    const UnravelingParam& u, const OpoModel& model) {
    constexpr double kResidualTol = 1e-12;
    const double t_cap = 1e4 / (1.0 - std::abs(model.chi));
    const double chunk = 1.0;

    CovarianceMatrix m{1.0, 1.0, 0.0};
    for (double t = 0.0; t < t_cap; t += chunk) {
        const CovarianceMatrix d = detail::cov_rhs(m, u, model);
        const double residual = std::max(
            {std::abs(d.gamma), std::abs(d.alpha), std::abs(d.beta)});
        if (residual < kResidualTol) {
            return m;
        }
        m = integrate_covariance(m, u, model, chunk);
    }
    throw std::runtime_error(
        "stationary_covariance_for_unraveling: no convergence before the "
        "time cap");
}

// Result of the inverse problem: which scheme (if any) holds a given pure
// covariance stationary. The three stationarity equations are linear in
// (r, h); they are solved in the least-squares sense and the residual is
// reported. `consistent` means the residual is small enough for m to be a
// stationary covariance of some scheme; `realizable` additionally means
// r^2 + h^2 <= 1 (+ tolerance). At chi = 0 the vacuum is stationary for
// every u and the system degenerates: `underdetermined` is set instead.
struct InverseResult {
    double r = 0.0;
    double h = 0.0;
    double residual = 0.0;
    bool consistent = false;
    bool realizable = false;
    bool underdetermined = false;
};

inline InverseResult unraveling_for_covariance(const CovarianceMatrix& m,
                                               const OpoModel& model) {
    if (std::abs(m.det() - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "unraveling_for_covariance: covariance must be pure (det = 1)");
    }
    const double chi = model.chi;
    const double g = m.gamma, a = m.alpha, b = m.beta;

    // Rows of the 3x2 system A [r, h]^T = c, one per stationarity equation.
    const double A[3][2] = {
        {-0.5 * ((g - 1.0) * (g - 1.0) - b * b), (g - 1.0) * b},
        {0.5 * ((a - 1.0) * (a - 1.0) - b * b), (a - 1.0) * b},
        {0.5 * b * (a - g), 0.5 * (b * b + (g - 1.0) * (a - 1.0))},
    };
    const double c[3] = {
        (1.0 + chi) * g - 1.0 + 0.5 * ((g - 1.0) * (g - 1.0) + b * b),
        (1.0 - chi) * a - 1.0 + 0.5 * ((a - 1.0) * (a - 1.0) + b * b),
        b * (g + a) / 2.0,
    };

    InverseResult out;
    double a_scale = 0.0;
    for (const auto& row : A) {
        a_scale = std::max({a_scale, std::abs(row[0]), std::abs(row[1])});
    }
    if (a_scale < 1e-12) {
        // Every u satisfies the equations (vacuum at chi = 0).
        out.underdetermined = true;
        out.residual = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
        out.consistent = out.residual < 1e-8 * (1.0 + m.norm());
        out.realizable = out.consistent;
        return out;
    }

    // Normal equations of the 3x2 least-squares problem.
    double ata00 = 0.0, ata01 = 0.0, ata11 = 0.0, atc0 = 0.0, atc1 = 0.0;
    for (int i = 0; i < 3; ++i) {
        ata00 += A[i][0] * A[i][0];
        ata01 += A[i][0] * A[i][1];
        ata11 += A[i][1] * A[i][1];
        atc0 += A[i][0] * c[i];
        atc1 += A[i][1] * c[i];
    }
    const double det = ata00 * ata11 - ata01 * ata01;
    if (det < 1e-14 * a_scale * a_scale * a_scale * a_scale + 1e-300) {
        out.underdetermined = true;
        return out;
    }
    out.r = (ata11 * atc0 - ata01 * atc1) / det;
    out.h = (ata00 * atc1 - ata01 * atc0) / det;

    double res2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double e = A[i][0] * out.r + A[i][1] * out.h - c[i];
        res2 += e * e;
    }
    out.residual = std::sqrt(res2);
    out.consistent = out.residual < 1e-8 * (1.0 + m.norm());
    out.realizable =
        out.consistent && out.r * out.r + out.h * out.h <= 1.0 + kRealizableTol;
    return out;
}

// Stationary ensemble induced by a scheme: every member is a pure Gaussian
// with the same covariance M0(u); the member means are distributed as a
// zero-mean Gaussian whose covariance is M_inf - M0(u), so that member
// spread plus member covariance reassembles the stationary state.
struct EnsembleDescriptor {
    OpoModel model;
    UnravelingParam unraveling;
    CovarianceMatrix member_cov;
    CovarianceMatrix weight_cov;  // second moments of the mean distribution
};

inline EnsembleDescriptor stationary_ensemble(const UnravelingParam& u,
                                              const OpoModel& model) {
    const CovarianceMatrix m0 = stationary_covariance_for_unraveling(u, model);
    if (std::abs(m0.det() - 1.0) > 1e-6) {
        throw std::runtime_error(
            "stationary_ensemble: members are not pure (det(M0) != 1)");
    }
    const CovarianceMatrix minf = stationary_covariance(model);
    const CovarianceMatrix w{minf.gamma - m0.gamma, minf.alpha - m0.alpha,
                             minf.beta - m0.beta};
    return {model, u, m0, w};
}

// Covariance of the Gaussian distribution of member means, M_inf - M0(u).
// Must be positive semidefinite for a realizable ensemble; violations
// beyond tolerance are rejected.
inline CovarianceMatrix weight_covariance(const EnsembleDescriptor& e) {
    const double scale = 1.0 + e.weight_cov.norm();
    if (e.weight_cov.min_eigenvalue() < -1e-8 * scale) {
        throw std::invalid_argument(
            "weight_covariance: mean-spread matrix is not positive "
            "semidefinite");
    }
    return e.weight_cov;
}

// A sampled point of a region boundary in the (beta, gamma) plane.
struct BoundaryPoint {
    double beta = 0.0;
    double gamma = 0.0;
};

// Closed curve traced by the stationary covariance M0(u) as u sweeps the
// unit circle u = exp(i theta), sampled at n equally spaced angles.
// theta = pi (u = -1) lies on the grid whenever n is even.
inline std::vector<BoundaryPoint> realizable_region_boundary(
    const OpoModel& model, std::size_t n) {
    if (n < 8) {
        throw std::invalid_argument(
            "realizable_region_boundary: need at least 8 samples");
    }
    std::vector<BoundaryPoint> pts;
    pts.reserve(n);
    const double pi = std::acos(-1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = 2.0 * pi * static_cast<double>(k) /
                             static_cast<double>(n);
        const UnravelingParam u{std::cos(theta), std::sin(theta)};
        const CovarianceMatrix m = stationary_covariance_for_unraveling(u, model);
        pts.push_back({m.beta, m.gamma});
    }
    return pts;
}

namespace detail {

// det(M_inf - M) with alpha eliminated through purity, as a function of
// beta at fixed gamma. Strictly decreasing in beta^2, so the positive root
// (the upper half of the outer boundary) brackets cleanly.
inline double outer_boundary_gap(double gamma, double beta,
                                 const OpoModel& model) {
    const CovarianceMatrix minf = stationary_covariance(model);
    const double alpha = (1.0 + beta * beta) / gamma;
    return (minf.gamma - gamma) * (minf.alpha - alpha) - beta * beta;
}

}  // namespace detail

// Boundary of the larger, purity-only region: all pure covariances M with
// M_inf - M positive semidefinite, i.e. the curve det(M_inf - M) = 0 with
// alpha = (1 + beta^2)/gamma. Sampled on a uniform gamma grid between the
// beta = 0 intercepts gamma = 1 - chi and gamma = 1/(1 + chi), solving for
// beta >= 0 by bisection at each gamma; returned as a closed polyline
// (upper branch, then the mirrored lower branch).
inline std::vector<BoundaryPoint> unconstrained_region_boundary(
    const OpoModel& model, std::size_t n) {
    if (n < 8) {
        throw std::invalid_argument(
            "unconstrained_region_boundary: need at least 8 samples");
    }
    const double chi = model.chi;
    const double g_lo = std::min(1.0 - chi, 1.0 / (1.0 + chi));
    const double g_hi = std::max(1.0 - chi, 1.0 / (1.0 + chi));

    std::vector<BoundaryPoint> upper;
    upper.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double frac =
            (n == 1) ? 0.0
                     : static_cast<double>(k) / static_cast<double>(n - 1);
        const double gamma = g_lo + (g_hi - g_lo) * frac;
        double lo = 0.0;
        double hi = 0.5;
        if (detail::outer_boundary_gap(gamma, lo, model) <= 0.0) {
            upper.push_back({0.0, gamma});
            continue;
        }
        int expand = 0;
        while (detail::outer_boundary_gap(gamma, hi, model) > 0.0) {
            hi *= 2.0;
            if (++expand > 60) {
                throw std::runtime_error(
                    "unconstrained_region_boundary: root bracket failed");
            }
        }
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            (detail::outer_boundary_gap(gamma, mid, model) > 0.0 ? lo : hi) =
                mid;
        }
        upper.push_back({0.5 * (lo + hi), gamma});
    }

    std::vector<BoundaryPoint> curve = upper;
    for (std::size_t k = n - 1; k-- > 1;) {
        curve.push_back({-upper[k].beta, upper[k].gamma});
    }
    return curve;
}

}  // namespace unravel
