#pragma once

// Exact Gaussian-state arithmetic for a damped optical cavity with a
// below-threshold parametric pump: stationary moments, purity, largest
// stationary eigenvalue, state overlaps, and covariance validity checks.
//
// Conventions used throughout the library:
//   * quadratures x = a + a^dag, y = -i a + i a^dag, so [x, y] = 2i and the
//     vacuum has unit variance in both;
//   * time is measured in cavity lifetimes;
//   * a Gaussian state is (mean vector, symmetrized covariance matrix)
//     with covariance entries gamma = <x^2>_c, alpha = <y^2>_c,
//     beta = <(xy + yx)/2>_c.

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unravel {

// Default tolerance when checking det(M) >= 1 for a quantum covariance.
inline constexpr double kCovarianceTol = 1e-9;

// Damped cavity mode with a parametric pump of dimensionless strength chi.
// Stable (below threshold) only for |chi| < 1; construction enforces that.
struct OpoModel {
    double chi;

    explicit OpoModel(double chi_) : chi(chi_) {
        if (!(std::abs(chi_) < 1.0)) {
            throw std::invalid_argument(
                "OpoModel: pump parameter must satisfy |chi| < 1");
        }
    }
};

// First-order quadrature moments (<x>, <y>).
struct MeanVector {
    double x_bar = 0.0;
    double y_bar = 0.0;
};

// Symmetrized second-order central moments of (x, y).
// A valid quantum covariance has gamma, alpha > 0 and
// det = gamma*alpha - beta^2 >= 1, with equality exactly for pure states.
struct CovarianceMatrix {
    double gamma = 1.0;  // <x^2> - <x>^2
    double alpha = 1.0;  // <y^2> - <y>^2
    double beta = 0.0;   // <(xy+yx)/2> - <x><y>

    double det() const { return gamma * alpha - beta * beta; }

    // Frobenius norm of the 2x2 matrix [[gamma, beta], [beta, alpha]].
    double norm() const {
        return std::sqrt(gamma * gamma + alpha * alpha + 2.0 * beta * beta);
    }

    // Smallest eigenvalue of the symmetric 2x2 matrix.
    double min_eigenvalue() const {
        const double tr = gamma + alpha;
        const double gap = std::sqrt((gamma - alpha) * (gamma - alpha) +
                                     4.0 * beta * beta);
        return 0.5 * (tr - gap);
    }
};

struct GaussianState {
    MeanVector mean;
    CovarianceMatrix cov;
};

// True iff cov could be the covariance of a quantum state: positive
// diagonal and det >= 1 - tol (the uncertainty bound in this convention).
inline bool is_valid_quantum_covariance(const CovarianceMatrix& cov,
                                        double tol = kCovarianceTol) {
    return cov.gamma > 0.0 && cov.alpha > 0.0 && cov.det() >= 1.0 - tol;
}

// Covariance of the unique stationary state: diag(1/(1+chi), 1/(1-chi)).
// The pump squeezes x and stretches y; the stationary mean is zero.
inline CovarianceMatrix stationary_covariance(const OpoModel& model) {
    return {1.0 / (1.0 + model.chi), 1.0 / (1.0 - model.chi), 0.0};
}

// Tr[rho^2] = det(M)^(-1/2) for a Gaussian state. Clamped to 1 so that
// integrator-level noise in det cannot report a purity above one.
inline double purity(const CovarianceMatrix& cov,
                     double tol = kCovarianceTol) {
    const double d = cov.det();
    if (!(cov.gamma > 0.0) || !(cov.alpha > 0.0) || d < 1.0 - tol) {
        throw std::invalid_argument(
            "purity: covariance violates the uncertainty bound det(M) >= 1");
    }
    return std::min(1.0, 1.0 / std::sqrt(d));
}

// Largest eigenvalue of the stationary state:
// Lambda = 2 / (1 + (1 - chi^2)^(-1/2)).
inline double largest_eigenvalue(const OpoModel& model) {
    const double s = std::sqrt(1.0 - model.chi * model.chi);
    return 2.0 / (1.0 + 1.0 / s);
}

// Exponent prefactor of the Gaussian overlap below. The value 1/2 is fixed
// by this library's quadrature convention; it was calibrated against a
// truncated-Fock-basis computation of Tr[rho1 rho2] for displaced squeezed
// states (agreement at machine precision) and is regression-tested.
inline constexpr double kOverlapExponentPrefactor = 0.5;

// Overlap Tr[rho1 rho2] of two Gaussian states:
//   2 * det(M1 + M2)^(-1/2) * exp(-1/2 dmu^T (M1 + M2)^(-1) dmu).
// Symmetric in its arguments; equals purity when the states coincide.
inline double gaussian_overlap(const GaussianState& s1,
                               const GaussianState& s2) {
    if (!is_valid_quantum_covariance(s1.cov) ||
        !is_valid_quantum_covariance(s2.cov)) {
        throw std::invalid_argument(
            "gaussian_overlap: invalid covariance matrix");
    }
    const double sxx = s1.cov.gamma + s2.cov.gamma;
    const double syy = s1.cov.alpha + s2.cov.alpha;
    const double sxy = s1.cov.beta + s2.cov.beta;
    const double det = sxx * syy - sxy * sxy;

    const double dx = s1.mean.x_bar - s2.mean.x_bar;
    const double dy = s1.mean.y_bar - s2.mean.y_bar;
    // dmu^T (M1+M2)^(-1) dmu via the 2x2 adjugate.
    const double quad = (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det;

    return 2.0 / std::sqrt(det) * std::exp(-kOverlapExponentPrefactor * quad);
}

}  // namespace unravel
