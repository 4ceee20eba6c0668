#pragma once

// Brute-force oracle in a truncated number-state basis: generic Lindblad
// evolution, steady states, exact survival probabilities, and stochastic
// pure-state trajectories driven by correlated complex Wiener noise. The
// Gaussian modules are validated against this one; nothing here assumes
// Gaussianity.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "unravel/dynamics.hpp"
#include "unravel/gaussian.hpp"

namespace unravel {

using Complex = std::complex<double>;

// Truncated oscillator basis |0> ... |N-1>.
struct FockSpace {
    int dim;

    explicit FockSpace(int n) : dim(n) {
        if (n < 2) {
            throw std::invalid_argument("FockSpace: need dimension >= 2");
        }
    }
};

// a|n> = sqrt(n)|n-1>.
inline Eigen::MatrixXcd annihilation_operator(const FockSpace& space) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(space.dim, space.dim);
    for (int n = 1; n < space.dim; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

// Quadrature operators x = a + a^dag and y = -i a + i a^dag.
inline Eigen::MatrixXcd x_operator(const FockSpace& space) {
    const Eigen::MatrixXcd a = annihilation_operator(space);
    return a + a.adjoint();
}

inline Eigen::MatrixXcd y_operator(const FockSpace& space) {
    const Eigen::MatrixXcd a = annihilation_operator(space);
    return Complex(0.0, 1.0) * (a.adjoint() - a);
}

// Hamiltonian + collapse operators; the generic generator is
//   L rho = -i[H, rho] + sum_k (c_k rho c_k^dag - 1/2 {c_k^dag c_k, rho}).
struct LindbladModel {
    Eigen::MatrixXcd hamiltonian;
    std::vector<Eigen::MatrixXcd> collapse_ops;

    LindbladModel(Eigen::MatrixXcd h, std::vector<Eigen::MatrixXcd> cs)
        : hamiltonian(std::move(h)), collapse_ops(std::move(cs)) {
        const auto herm_gap =
            (hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff();
        if (herm_gap > 1e-12) {
            throw std::invalid_argument(
                "LindbladModel: Hamiltonian must be Hermitian");
        }
        for (const auto& c : collapse_ops) {
            if (c.rows() != hamiltonian.rows() ||
                c.cols() != hamiltonian.cols()) {
                throw std::invalid_argument(
                    "LindbladModel: operator dimensions disagree");
            }
        }
    }

    int dim() const { return static_cast<int>(hamiltonian.rows()); }
};

// The pumped cavity in the truncated basis: H = i (chi/4)(a^2 - a^dag^2)
// (the sign that squeezes x, matching the Gaussian modules' stationary
// covariance diag(1/(1+chi), 1/(1-chi))) and a single collapse operator a.
inline LindbladModel opo_model(const OpoModel& model, const FockSpace& space) {
    const Eigen::MatrixXcd a = annihilation_operator(space);
    const Eigen::MatrixXcd h =
        Complex(0.0, model.chi / 4.0) * (a * a - (a * a).adjoint());
    return LindbladModel(h, {a});
}

// Right-hand side of the master equation.
inline Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho,
                                     const LindbladModel& model) {
    const Complex i(0.0, 1.0);
    Eigen::MatrixXcd out = -i * (model.hamiltonian * rho - rho * model.hamiltonian);
    for (const auto& c : model.collapse_ops) {
        const Eigen::MatrixXcd cdc = c.adjoint() * c;
        out += c * rho * c.adjoint() -
               0.5 * (cdc * rho + rho * cdc);
    }
    return out;
}

// Fixed-step classical 4th-order integration of the master equation.
// When dt <= 0 a stability-safe default of 1/dim is used (the generator's
// spectral radius grows like the truncation dimension).
inline Eigen::MatrixXcd evolve_density(Eigen::MatrixXcd rho,
                                       const LindbladModel& model, double t,
                                       double dt = 0.0) {
    if (t < 0.0) {
        throw std::invalid_argument("evolve_density: negative time");
    }
    if (dt <= 0.0) {
        dt = 1.0 / static_cast<double>(model.dim());
    }
    double remaining = t;
    while (remaining > 0.0) {
        const double s = std::min(dt, remaining);
        const Eigen::MatrixXcd k1 = lindblad_rhs(rho, model);
        const Eigen::MatrixXcd k2 = lindblad_rhs(rho + 0.5 * s * k1, model);
        const Eigen::MatrixXcd k3 = lindblad_rhs(rho + 0.5 * s * k2, model);
        const Eigen::MatrixXcd k4 = lindblad_rhs(rho + s * k3, model);
        rho += s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        remaining -= s;
    }
    return rho;
}

struct SteadyStateResult {
    Eigen::MatrixXcd rho;
    double lindblad_residual = 0.0;  // Frobenius norm of L(rho)
    double tail = 0.0;               // occupation of the top basis state
    bool truncation_warning = false;
    double time_integrated = 0.0;
};

// Steady state by long-time integration from the vacuum with convergence
// detection: stop when ||L rho|| < 1e-10 (Frobenius), fail past the cap.
// A top-state occupation above 1e-10 raises the truncation flag (the
// basis is too small for this model).
inline SteadyStateResult steady_state(const LindbladModel& model,
                                      double t_cap = 2000.0) {
    constexpr double kResidualTol = 1e-10;
    constexpr double kTailTol = 1e-10;
    const int n = model.dim();
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    rho(0, 0) = 1.0;

    const double chunk = 5.0;
    for (double t = 0.0; t <= t_cap; t += chunk) {
        const double residual = lindblad_rhs(rho, model).norm();
        if (residual < kResidualTol) {
            SteadyStateResult out{std::move(rho), residual, 0.0, false, t};
            out.tail = std::abs(out.rho(n - 1, n - 1));
            out.truncation_warning = out.tail > kTailTol;
            return out;
        }
        rho = evolve_density(std::move(rho), model, chunk);
    }
    throw std::runtime_error(
        "steady_state: no convergence before the time cap");
}

// Probability that a system prepared in |psi>, left unmonitored for time
// t, would pass a projective check onto |psi>: <psi| exp(Lt)[P] |psi>.
// If tail_out is given it receives the top-state occupation of the
// evolved density matrix (a truncation diagnostic).
inline double survival_fock(const Eigen::VectorXcd& psi,
                            const LindbladModel& model, double t,
                            double* tail_out = nullptr) {
    if (std::abs(psi.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("survival_fock: state must be normalized");
    }
    Eigen::MatrixXcd rho = psi * psi.adjoint();
    rho = evolve_density(std::move(rho), model, t);
    if (tail_out != nullptr) {
        *tail_out = std::abs(rho(model.dim() - 1, model.dim() - 1));
    }
    return std::real(psi.dot(rho * psi));
}

// Pure Gaussian state with zero mean and covariance cov, built by
// diagonalizing the quadrature combination it is annihilated by: with
// M = R diag(m1, m2) R^T (m1 m2 = 1 for a pure state), the state is the
// kernel of b = (x'/sqrt(m1) + i y'/sqrt(m2))/2 in the rotated frame,
// found as the lowest eigenvector of b^dag b. Construction by numerical
// diagonalization sidesteps squeeze-operator sign conventions; the
// returned state's computed moments are the ground truth.
inline Eigen::VectorXcd gaussian_member_state(const CovarianceMatrix& cov,
                                              const FockSpace& space) {
    if (std::abs(cov.det() - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "gaussian_member_state: covariance must be pure (det = 1)");
    }
    Eigen::Matrix2d m;
    m << cov.gamma, cov.beta, cov.beta, cov.alpha;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    const Eigen::Vector2d w = es.eigenvalues();
    const Eigen::Matrix2d rot = es.eigenvectors();

    const Eigen::MatrixXcd x = x_operator(space);
    const Eigen::MatrixXcd y = y_operator(space);
    const Eigen::MatrixXcd xp = rot(0, 0) * x + rot(1, 0) * y;
    const Eigen::MatrixXcd yp = rot(0, 1) * x + rot(1, 1) * y;
    const Eigen::MatrixXcd b =
        0.5 * (xp / std::sqrt(w(0)) + Complex(0.0, 1.0) * yp / std::sqrt(w(1)));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ground(b.adjoint() * b);
    Eigen::VectorXcd psi = ground.eigenvectors().col(0);
    return psi / psi.norm();
}

// Applies the displacement that shifts the quadrature means by mu,
// exp(lambda a^dag - conj(lambda) a) with lambda = (x_bar + i y_bar)/2,
// evaluated exactly through the eigendecomposition of its (Hermitian)
// generator divided by i.
inline Eigen::VectorXcd displace_state(const Eigen::VectorXcd& psi,
                                       const MeanVector& mu) {
    const FockSpace space{static_cast<int>(psi.size())};
    const Eigen::MatrixXcd a = annihilation_operator(space);
    const Complex lambda(mu.x_bar / 2.0, mu.y_bar / 2.0);
    const Eigen::MatrixXcd gen = lambda * a.adjoint() - std::conj(lambda) * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Complex(0.0, 1.0) * gen);
    const Eigen::VectorXcd phases =
        (Complex(0.0, -1.0) * es.eigenvalues().cast<Complex>()).array().exp();
    Eigen::VectorXcd out = es.eigenvectors() *
                           phases.asDiagonal() *
                           (es.eigenvectors().adjoint() * psi);
    return out / out.norm();
}

// First and symmetrized second quadrature moments of a pure state.
struct QuadratureMoments {
    double x_bar = 0.0;
    double y_bar = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};

inline QuadratureMoments quadrature_moments(const Eigen::VectorXcd& psi) {
    const FockSpace space{static_cast<int>(psi.size())};
    const Eigen::VectorXcd xpsi = x_operator(space) * psi;
    const Eigen::VectorXcd ypsi = y_operator(space) * psi;
    QuadratureMoments m;
    m.x_bar = std::real(psi.dot(xpsi));
    m.y_bar = std::real(psi.dot(ypsi));
    m.gamma = std::real(xpsi.dot(xpsi)) - m.x_bar * m.x_bar;
    m.alpha = std::real(ypsi.dot(ypsi)) - m.y_bar * m.y_bar;
    m.beta = std::real(xpsi.dot(ypsi)) - m.x_bar * m.y_bar;
    return m;
}

// Correlation matrix of a K-channel complex Wiener process:
//   dW_j dW_k^* = dt delta_jk,   dW_j dW_k = dt u_jk,
// with u symmetric and the induced joint covariance of (Re dW, Im dW)
// positive semidefinite (for K = 1 this is |u| <= 1). A matrix square
// root of the joint covariance is prepared at construction for sampling.
class NoiseCorrelation {
  public:
    explicit NoiseCorrelation(Eigen::MatrixXcd u) : u_(std::move(u)) {
        const auto k = u_.rows();
        if (k < 1 || u_.cols() != k) {
            throw std::invalid_argument("NoiseCorrelation: u must be square");
        }
        if ((u_ - u_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw std::invalid_argument(
                "NoiseCorrelation: u must be symmetric (u_jk = u_kj)");
        }
        if (u_.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
            throw std::invalid_argument("NoiseCorrelation: need |u_jk| <= 1");
        }
        // Joint covariance of (Re dW, Im dW) per unit dt.
        Eigen::MatrixXd joint(2 * k, 2 * k);
        const Eigen::MatrixXd re = u_.real();
        const Eigen::MatrixXd im = u_.imag();
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
        joint.topLeftCorner(k, k) = 0.5 * (eye + re);
        joint.topRightCorner(k, k) = 0.5 * im;
        joint.bottomLeftCorner(k, k) = 0.5 * im;
        joint.bottomRightCorner(k, k) = 0.5 * (eye - re);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(joint);
        if (es.eigenvalues().minCoeff() < -1e-9) {
            throw std::invalid_argument(
                "NoiseCorrelation: joint quadrature covariance is not PSD");
        }
        root_ = es.eigenvectors() *
                es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                es.eigenvectors().transpose();
    }

    // Single-channel case, u = r + ih on the closed disk.
    explicit NoiseCorrelation(const UnravelingParam& u)
        : NoiseCorrelation(single(u)) {}

    int channels() const { return static_cast<int>(u_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return u_; }

    // K = 1 fast path keeps structural zeros exact: at u = -1 the real
    // part of dW vanishes identically (not merely to roundoff), which in
    // turn preserves the simulator's exact symmetry sectors.
    bool is_single() const { return u_.rows() == 1; }
    double r1() const { return u_(0, 0).real(); }
    double h1() const { return u_(0, 0).imag(); }
    const Eigen::MatrixXd& joint_root() const { return root_; }

  private:
    static Eigen::MatrixXcd single(const UnravelingParam& u) {
        Eigen::MatrixXcd m(1, 1);
        m(0, 0) = Complex(u.r, u.h);
        return m;
    }

    Eigen::MatrixXcd u_;
    Eigen::MatrixXd root_;  // sqrt of the joint (Re, Im) covariance
};

using Rng = std::mt19937_64;

// Deterministic per-trajectory generator derived from (seed, index), so
// trajectory i is reproducible regardless of scheduling or batch size.
inline Rng trajectory_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

// One batch of correlated complex increments over a step dt.
inline std::vector<Complex> sample_noise(const NoiseCorrelation& corr,
                                         double dt, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int k = corr.channels();
    if (corr.is_single()) {
        const double r = corr.r1();
        const double h = corr.h1();
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        const double c11 = 0.5 * (1.0 + r) * dt;
        const double c22 = 0.5 * (1.0 - r) * dt;
        if (c11 <= 0.0) {
            return {Complex(0.0, std::sqrt(c22) * z2)};
        }
        const double l11 = std::sqrt(c11);
        const double l21 = 0.5 * h * dt / l11;
        const double l22 = std::sqrt(std::max(c22 - l21 * l21, 0.0));
        return {Complex(l11 * z1, l21 * z1 + l22 * z2)};
    }
    Eigen::VectorXd z(2 * k);
    for (int i = 0; i < 2 * k; ++i) {
        z(i) = normal(rng);
    }
    const Eigen::VectorXd g = std::sqrt(dt) * (corr.joint_root() * z);
    std::vector<Complex> out(k);
    for (int i = 0; i < k; ++i) {
        out[i] = Complex(g(i), g(k + i));
    }
    return out;
}

namespace detail {

// Core Euler-Maruyama update, shared between the one-step API (dense
// operators) and the trajectory loop (sparse operators):
//   dpsi = [A + sum_k (<c_k^dag> c_k - 1/2 |<c_k>|^2)] psi dt
//          + sum_k dW_k (c_k - <c_k>) psi,
// with A = -iH - 1/2 sum_k c_k^dag c_k precomputed by the caller. The
// update is norm-preserving on average; the explicit renormalization
// only removes the O(dt) fluctuation of a single step.
template <typename MatA, typename MatC>
Eigen::VectorXcd em_step(const Eigen::VectorXcd& psi, const MatA& drift_op,
                         const std::vector<MatC>& collapse,
                         const std::vector<Complex>& dw, double dt) {
    Eigen::VectorXcd next = psi + dt * (drift_op * psi);
    for (std::size_t k = 0; k < collapse.size(); ++k) {
        const Eigen::VectorXcd cpsi = collapse[k] * psi;
        const Complex c_exp = psi.dot(cpsi);  // <c_k>
        next += dt * (std::conj(c_exp) * cpsi - 0.5 * std::norm(c_exp) * psi);
        next += dw[k] * (cpsi - c_exp * psi);
    }
    const double norm = next.norm();
    if (norm < 1e-6) {
        throw std::runtime_error(
            "em_step: state norm collapsed (step size too large)");
    }
    return next / norm;
}

inline Eigen::MatrixXcd dense_drift_op(const LindbladModel& model) {
    Eigen::MatrixXcd a = Complex(0.0, -1.0) * model.hamiltonian;
    for (const auto& c : model.collapse_ops) {
        a -= 0.5 * (c.adjoint() * c);
    }
    return a;
}

}  // namespace detail

// One Euler-Maruyama step with explicitly supplied noise increments
// (one per collapse operator), followed by renormalization. Useful for
// deterministic checks with forced noise.
inline Eigen::VectorXcd sse_step(const Eigen::VectorXcd& psi,
                                 const LindbladModel& model,
                                 const std::vector<Complex>& dw, double dt) {
    if (dw.size() != model.collapse_ops.size()) {
        throw std::invalid_argument(
            "sse_step: one noise increment per collapse operator required");
    }
    return detail::em_step(psi, detail::dense_drift_op(model),
                           model.collapse_ops, dw, dt);
}

// One Euler-Maruyama step of the pure-state trajectory with freshly
// sampled noise, followed by renormalization.
inline Eigen::VectorXcd sse_step(const Eigen::VectorXcd& psi,
                                 const LindbladModel& model,
                                 const NoiseCorrelation& corr, double dt,
                                 Rng& rng) {
    if (corr.channels() != static_cast<int>(model.collapse_ops.size())) {
        throw std::invalid_argument(
            "sse_step: one noise channel per collapse operator required");
    }
    const std::vector<Complex> dw = sample_noise(corr, dt, rng);
    return detail::em_step(psi, detail::dense_drift_op(model),
                           model.collapse_ops, dw, dt);
}

// Reusable trajectory stepper with sparse operators (the cavity operators
// are banded, so sparse matvecs dominate dense ones at any useful
// truncation).
class TrajectoryStepper {
  public:
    TrajectoryStepper(const LindbladModel& model, NoiseCorrelation corr,
                      double dt)
        : corr_(std::move(corr)), dt_(dt) {
        if (dt <= 0.0) {
            throw std::invalid_argument("TrajectoryStepper: need dt > 0");
        }
        if (corr_.channels() != static_cast<int>(model.collapse_ops.size())) {
            throw std::invalid_argument(
                "TrajectoryStepper: one noise channel per collapse operator "
                "required");
        }
        drift_ = detail::dense_drift_op(model).sparseView(1.0, 1e-300);
        for (const auto& c : model.collapse_ops) {
            collapse_.push_back(c.sparseView(1.0, 1e-300));
        }
    }

    Eigen::VectorXcd step(const Eigen::VectorXcd& psi, Rng& rng) const {
        const std::vector<Complex> dw = sample_noise(corr_, dt_, rng);
        return detail::em_step(psi, drift_, collapse_, dw, dt_);
    }

    double dt() const { return dt_; }

  private:
    NoiseCorrelation corr_;
    double dt_;
    Eigen::SparseMatrix<Complex> drift_;
    std::vector<Eigen::SparseMatrix<Complex>> collapse_;
};

struct EnsembleStats {
    std::vector<QuadratureMoments> trajectories;  // final-time moments
    std::vector<Eigen::VectorXcd> final_states;
    Eigen::MatrixXcd mean_density;  // average of the final projectors
};

// Runs n_traj independent pure-state trajectories from the vacuum for
// t_relax and reports their final quadrature moments, the final states,
// and the ensemble-average density matrix. Trajectory i draws from the
// generator derived from (seed, i), so results do not depend on batching.
inline EnsembleStats simulate_ensemble(const LindbladModel& model,
                                       const NoiseCorrelation& corr,
                                       std::size_t n_traj, double t_relax,
                                       double dt, std::uint64_t seed) {
    if (n_traj == 0 || t_relax <= 0.0 || dt <= 0.0) {
        throw std::invalid_argument(
            "simulate_ensemble: need n_traj >= 1, t_relax > 0, dt > 0");
    }
    const TrajectoryStepper stepper(model, corr, dt);
    const auto n_steps =
        static_cast<std::size_t>(std::llround(t_relax / dt));
    const int n = model.dim();

    EnsembleStats stats;
    stats.trajectories.reserve(n_traj);
    stats.final_states.reserve(n_traj);
    stats.mean_density = Eigen::MatrixXcd::Zero(n, n);

    for (std::size_t i = 0; i < n_traj; ++i) {
        Rng rng = trajectory_rng(seed, i);
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n);
        psi(0) = 1.0;
        for (std::size_t s = 0; s < n_steps; ++s) {
            psi = stepper.step(psi, rng);
        }
        stats.trajectories.push_back(quadrature_moments(psi));
        stats.mean_density.noalias() += psi * psi.adjoint();
        stats.final_states.push_back(std::move(psi));
    }
    stats.mean_density /= static_cast<double>(n_traj);
    return stats;
}

}  // namespace unravel
