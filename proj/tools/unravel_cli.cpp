// Command-line front end for the unraveling-robustness library: region
// boundaries, survival curves, survival-time optimization, the summary
// sweep table, a closed-form vs number-basis cross check, and stochastic
// trajectory ensembles. All CSV output uses LF line endings and a fixed
// short-float format so runs are byte-for-byte reproducible.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unravel/csv.hpp"
#include "unravel/dynamics.hpp"
#include "unravel/fock.hpp"
#include "unravel/gaussian.hpp"
#include "unravel/robustness.hpp"

namespace {

using unravel::csv_number;
using unravel::write_csv_row;

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Applies a flat "key = value" config file to a subcommand. Options
// already given on the command line keep their values; unknown keys are
// usage errors. Comments start with '#' or ';'.
void apply_config(CLI::App* cmd, const std::string& path) {
    if (path.empty()) {
        return;
    }
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot read config file: " + path);
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) {
            line.erase(comment);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" +
                                        std::to_string(lineno) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        if (key.empty() || key == "config") {
            throw std::invalid_argument(path + ":" +
                                        std::to_string(lineno) +
                                        ": invalid config key");
        }
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
        if (opt->count() > 0) {
            continue;  // the command line wins
        }
        opt->add_result(value);
        opt->run_callback();
    }
}

// ---------------------------------------------------------------- region

struct RegionOpts {
    std::string config;
    double chi = 0.5;
    std::size_t n = 64;
    std::string out;
};

int run_region(const RegionOpts& o) {
    if (o.out.empty()) {
        throw std::invalid_argument("region: --out is required");
    }
    const unravel::OpoModel model{o.chi};
    const auto inner = unravel::realizable_region_boundary(model, o.n);
    const auto outer = unravel::unconstrained_region_boundary(model, o.n);

    std::ofstream out = open_output(o.out);
    write_csv_row(out, {"curve", "beta", "gamma"});
    for (const auto& p : inner) {
        write_csv_row(out, {"realizable", csv_number(p.beta),
                            csv_number(p.gamma)});
    }
    for (const auto& p : outer) {
        write_csv_row(out, {"unconstrained", csv_number(p.beta),
                            csv_number(p.gamma)});
    }
    write_csv_row(out, {"star", csv_number(0.0),
                        csv_number(1.0 / (1.0 + o.chi))});
    out.close();

    // The realizable curve must sit inside the unconstrained region.
    for (const auto& p : inner) {
        if (unravel::detail::outer_boundary_gap(p.gamma, p.beta, model) <
            -1e-8) {
            std::cerr << "region: realizable point (beta=" << p.beta
                      << ", gamma=" << p.gamma
                      << ") escapes the unconstrained region\n";
            return 3;
        }
    }
    return 0;
}

// ----------------------------------------------------------------- fig2

struct Fig2Opts {
    std::string config;
    double chi_min = 0.005;
    double chi_max = 0.995;
    double chi_step = 0.005;
    std::string out;
};

int run_fig2(const Fig2Opts& o) {
    if (o.out.empty()) {
        throw std::invalid_argument("fig2: --out is required");
    }
    if (o.chi_step <= 0.0 || o.chi_min < 0.0 || o.chi_max < o.chi_min) {
        throw std::invalid_argument(
            "fig2: need 0 <= chi-min <= chi-max and chi-step > 0");
    }
    std::vector<double> grid;
    for (std::size_t k = 0;; ++k) {
        const double chi = o.chi_min + static_cast<double>(k) * o.chi_step;
        if (chi > o.chi_max + 1e-12) {
            break;
        }
        grid.push_back(chi);
    }
    const auto rows = unravel::figure2_table(grid);

    std::ofstream out = open_output(o.out);
    write_csv_row(out, {"chi", "tau_R", "alpha_inf", "alpha0_R", "Lambda",
                        "S_inf"});
    for (const auto& row : rows) {
        write_csv_row(out, {csv_number(row.chi), csv_number(row.tau_R),
                            csv_number(row.alpha_inf),
                            csv_number(row.alpha0_R), csv_number(row.lambda),
                            csv_number(row.s_inf)});
    }
    return 0;
}

// -------------------------------------------------------------- survival

struct SurvivalOpts {
    std::string config;
    double chi = 0.5;
    double r = -1.0;
    double h = 0.0;
    double dt = 0.05;
    double t_max = 10.0;
    std::string out;
};

int run_survival(const SurvivalOpts& o) {
    if (o.out.empty()) {
        throw std::invalid_argument("survival: --out is required");
    }
    if (o.dt <= 0.0 || o.t_max < 0.0) {
        throw std::invalid_argument("survival: need dt > 0 and t-max >= 0");
    }
    const unravel::OpoModel model{o.chi};
    const unravel::UnravelingParam u{o.r, o.h};
    const unravel::CovarianceMatrix m0 =
        unravel::stationary_covariance_for_unraveling(u, model);
    const double lambda = unravel::largest_eigenvalue(model);

    std::ofstream out = open_output(o.out);
    write_csv_row(out, {"t", "S_integral", "S_scalar", "Lambda"});
    double worst = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * o.dt;
        if (t > o.t_max + 1e-12) {
            break;
        }
        const double s_int =
            unravel::survival_probability_integral(m0, model, t);
        const double s_sc =
            unravel::survival_probability(m0.gamma, m0.beta, model, t);
        worst = std::max(worst, std::abs(s_int - s_sc));
        write_csv_row(out, {csv_number(t), csv_number(s_int),
                            csv_number(s_sc), csv_number(lambda)});
    }
    if (worst > 1e-10) {
        std::cerr << "survival: integral and scalar forms disagree by "
                  << worst << "\n";
        return 3;
    }
    return 0;
}

// ------------------------------------------------------------------- tau

struct TauOpts {
    std::string config;
    double chi = 0.5;
    double r = -1.0;
    double h = 0.0;
    std::string out;
};

int run_tau(const TauOpts& o) {
    const unravel::OpoModel model{o.chi};
    const unravel::SurvivalTime tau =
        unravel::survival_time({o.r, o.h}, model);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!o.out.empty()) {
        file = open_output(o.out);
        out = &file;
    }
    write_csv_row(*out, {"chi", "r", "h", "tau", "tau_R", "Lambda"});
    write_csv_row(*out,
                  {csv_number(o.chi), csv_number(o.r), csv_number(o.h),
                   csv_number(tau.tau),
                   csv_number(unravel::robust_survival_time(model)),
                   csv_number(unravel::largest_eigenvalue(model))});
    return 0;
}

// -------------------------------------------------------------- optimize

struct OptimizeOpts {
    std::string config;
    double chi = 0.5;
    std::size_t n_radii = 21;
    std::size_t n_angles = 32;
    std::string out;
};

int run_optimize(const OptimizeOpts& o) {
    const unravel::OpoModel model{o.chi};
    const unravel::OptimizationResult res =
        unravel::optimal_unraveling(model, o.n_radii, o.n_angles);
    const double tau_ref = unravel::robust_survival_time(model);

    std::cout << "most robust scheme at chi = " << csv_number(o.chi) << "\n"
              << "  r = " << csv_number(res.u.r) << "\n"
              << "  h = " << csv_number(res.u.h) << "\n"
              << "  survival time  tau   = " << csv_number(res.tau.tau)
              << "\n"
              << "  closed-form    tau_R = " << csv_number(tau_ref) << "\n"
              << "  |tau - tau_R|        = "
              << csv_number(std::abs(res.tau.tau - tau_ref)) << "\n"
              << "  landscape points: " << res.landscape.size() << " ("
              << res.failed_points << " failed)\n";

    if (!o.out.empty()) {
        std::ofstream file = open_output(o.out);
        write_csv_row(file, {"r", "h", "tau"});
        for (const auto& s : res.landscape) {
            if (s.ok) {
                write_csv_row(file, {csv_number(s.r), csv_number(s.h),
                                     csv_number(s.tau)});
            }
        }
    }

    if (20 * res.failed_points > res.landscape.size()) {
        std::cerr << "optimize: more than 5% of landscape points failed\n";
        return 2;
    }
    if (std::abs(res.tau.tau - tau_ref) > 1e-6) {
        std::cerr << "optimize: best survival time disagrees with the "
                     "closed form\n";
        return 3;
    }
    return 0;
}

// -------------------------------------------------------- oracle-compare

struct OracleOpts {
    std::string config;
    double chi = 0.5;
    int fock_dim = 40;
};

int run_oracle_compare(const OracleOpts& o) {
    const unravel::OpoModel model{o.chi};
    const unravel::FockSpace space{o.fock_dim};
    const unravel::LindbladModel fock = unravel::opo_model(model, space);

    struct Row {
        std::string name;
        double closed;
        double numeric;
    };
    std::vector<Row> rows;

    // Stationary moments and the survival threshold.
    const unravel::SteadyStateResult steady = unravel::steady_state(fock);
    const Eigen::MatrixXcd x = unravel::x_operator(space);
    const Eigen::MatrixXcd y = unravel::y_operator(space);
    const double xbar = (x * steady.rho).trace().real();
    const double ybar = (y * steady.rho).trace().real();
    const unravel::CovarianceMatrix minf = unravel::stationary_covariance(model);
    rows.push_back({"gamma_inf", minf.gamma,
                    (x * x * steady.rho).trace().real() - xbar * xbar});
    rows.push_back({"alpha_inf", minf.alpha,
                    (y * y * steady.rho).trace().real() - ybar * ybar});
    rows.push_back({"beta_inf", minf.beta,
                    0.5 * ((x * y + y * x) * steady.rho).trace().real() -
                        xbar * ybar});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(steady.rho);
    rows.push_back({"Lambda", unravel::largest_eigenvalue(model),
                    es.eigenvalues().maxCoeff()});

    // Survival of the most robust scheme's member state.
    const unravel::CovarianceMatrix m0 =
        unravel::stationary_covariance_for_unraveling({-1.0, 0.0}, model);
    const Eigen::VectorXcd member = unravel::gaussian_member_state(m0, space);
    for (const double t : {0.5, 1.0, 2.0}) {
        const auto [v, mt] = unravel::evolved_moments(m0, model, t);
        rows.push_back(
            {"S(" + csv_number(t) + ")",
             unravel::gaussian_overlap({{0.0, 0.0}, m0}, {{0.0, 0.0}, mt}),
             unravel::survival_fock(member, fock, t)});
    }

    std::cout << "closed form vs number basis at chi = " << csv_number(o.chi)
              << " (dimension " << o.fock_dim << ")\n\n";
    std::printf("%-12s %18s %18s %12s\n", "quantity", "closed-form",
                "number-basis", "|diff|");
    double worst = 0.0;
    for (const auto& row : rows) {
        const double diff = std::abs(row.closed - row.numeric);
        worst = std::max(worst, diff);
        std::printf("%-12s %18.12f %18.12f %12.3e\n", row.name.c_str(),
                    row.closed, row.numeric, diff);
    }
    std::printf("\nsteady-state residual: %.3e\n", steady.lindblad_residual);
    std::printf("truncation tail:       %.3e\n", steady.tail);

    if (steady.tail > 1e-8) {
        std::cerr << "oracle-compare: truncation tail exceeds 1e-8; raise "
                     "--fock-dim\n";
        return 3;
    }
    if (worst > 1e-4) {
        std::cerr << "oracle-compare: worst deviation " << worst
                  << " exceeds 1e-4\n";
        return 3;
    }
    std::cout << "\nall checks passed (worst deviation "
              << csv_number(worst) << ")\n";
    return 0;
}

// -------------------------------------------------------------- simulate

struct SimulateOpts {
    std::string config;
    double chi = 0.5;
    double r = -1.0;
    double h = 0.0;
    std::size_t n_traj = 100;
    double dt = 1e-3;
    double t_max = 10.0;
    std::uint64_t seed = 0;
    int fock_dim = 40;
    std::string out;
};

int run_simulate(const SimulateOpts& o) {
    if (o.out.empty()) {
        throw std::invalid_argument("simulate: --out is required");
    }
    const unravel::OpoModel model{o.chi};
    const unravel::UnravelingParam u{o.r, o.h};
    const unravel::LindbladModel fock =
        unravel::opo_model(model, unravel::FockSpace{o.fock_dim});
    const unravel::EnsembleStats stats = unravel::simulate_ensemble(
        fock, unravel::NoiseCorrelation(u), o.n_traj, o.t_max, o.dt, o.seed);

    std::ofstream out = open_output(o.out);
    write_csv_row(out, {"traj", "x_bar", "y_bar", "gamma", "alpha", "beta"});
    for (std::size_t i = 0; i < stats.trajectories.size(); ++i) {
        const auto& m = stats.trajectories[i];
        write_csv_row(out, {std::to_string(i), csv_number(m.x_bar),
                            csv_number(m.y_bar), csv_number(m.gamma),
                            csv_number(m.alpha), csv_number(m.beta)});
    }
    if (o.n_traj < 2) {
        return 0;
    }

    // Sample covariance of the trajectory means against the mean-spread
    // matrix of the stationary ensemble.
    const std::size_t n = o.n_traj;
    double mx = 0.0, my = 0.0;
    for (const auto& m : stats.trajectories) {
        mx += m.x_bar;
        my += m.y_bar;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (const auto& m : stats.trajectories) {
        cxx += (m.x_bar - mx) * (m.x_bar - mx);
        cxy += (m.x_bar - mx) * (m.y_bar - my);
        cyy += (m.y_bar - my) * (m.y_bar - my);
    }
    cxx /= static_cast<double>(n - 1);
    cxy /= static_cast<double>(n - 1);
    cyy /= static_cast<double>(n - 1);

    const unravel::CovarianceMatrix w =
        unravel::weight_covariance(unravel::stationary_ensemble(u, model));
    // Standard errors of Gaussian sample covariances:
    // Var(C_jk) = (W_jj W_kk + W_jk^2) / (n - 1).
    const struct {
        double sample;
        double theory;
        double se;
    } entries[3] = {
        {cxx, w.gamma, std::sqrt((w.gamma * w.gamma + w.gamma * w.gamma) /
                                 static_cast<double>(n - 1))},
        {cxy, w.beta, std::sqrt((w.gamma * w.alpha + w.beta * w.beta) /
                                static_cast<double>(n - 1))},
        {cyy, w.alpha, std::sqrt((w.alpha * w.alpha + w.alpha * w.alpha) /
                                 static_cast<double>(n - 1))},
    };
    double worst_dev = 0.0;
    double worst_allowed = 0.0;
    bool violated = false;
    double worst_ratio = -1.0;
    for (const auto& e : entries) {
        const double dev = std::abs(e.sample - e.theory);
        // The absolute floor keeps entries whose theoretical spread is
        // zero (known only to solver precision) from failing on roundoff.
        const double allowed = std::max(3.0 * e.se, 1e-10);
        if (dev > allowed) {
            violated = true;
        }
        const double ratio = dev / allowed;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_dev = dev;
            worst_allowed = allowed;
        }
    }
    write_csv_row(out, {"summary", csv_number(cxx), csv_number(cxy),
                        csv_number(cyy), csv_number(worst_dev),
                        csv_number(worst_allowed)});
    out.close();

    if (violated) {
        std::cerr << "simulate: trajectory mean spread deviates from the "
                     "stationary ensemble beyond 3 standard errors\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Robust-unraveling toolkit for the damped parametric cavity below "
        "threshold"};
    app.require_subcommand(1);
    int rc = 0;

    RegionOpts region;
    auto* region_cmd = app.add_subcommand(
        "region", "Boundary curves of the stationary-covariance regions");
    region_cmd->set_help_flag("--help", "Print help and exit");
    region_cmd->add_option("--chi", region.chi, "Pump strength, |chi| < 1");
    region_cmd->add_option("--n", region.n, "Boundary samples (>= 8)");
    region_cmd->add_option("--out", region.out, "Output CSV path");
    region_cmd->add_option("--config", region.config,
                   "Flat key = value config file");
    region_cmd->callback([&] {
        apply_config(region_cmd, region.config);
        rc = run_region(region);
    });

    Fig2Opts fig2;
    auto* fig2_cmd = app.add_subcommand(
        "fig2", "Survival-time summary table over a pump sweep");
    fig2_cmd->set_help_flag("--help", "Print help and exit");
    fig2_cmd->add_option("--chi-min", fig2.chi_min, "First pump value");
    fig2_cmd->add_option("--chi-max", fig2.chi_max, "Last pump value");
    fig2_cmd->add_option("--chi-step", fig2.chi_step, "Grid spacing");
    fig2_cmd->add_option("--out", fig2.out, "Output CSV path");
    fig2_cmd->add_option("--config", fig2.config,
                   "Flat key = value config file");
    fig2_cmd->callback([&] {
        apply_config(fig2_cmd, fig2.config);
        rc = run_fig2(fig2);
    });

    SurvivalOpts survival;
    auto* survival_cmd = app.add_subcommand(
        "survival", "Survival probability curve for one scheme");
    survival_cmd->set_help_flag("--help", "Print help and exit");
    survival_cmd->add_option("--chi", survival.chi, "Pump strength");
    survival_cmd->add_option("--r", survival.r, "Re u of the scheme");
    survival_cmd->add_option("--h", survival.h, "Im u of the scheme");
    survival_cmd->add_option("--dt", survival.dt, "Time-grid spacing");
    survival_cmd->add_option("--t-max", survival.t_max, "Last grid time");
    survival_cmd->add_option("--out", survival.out, "Output CSV path");
    survival_cmd->add_option("--config", survival.config,
                   "Flat key = value config file");
    survival_cmd->callback([&] {
        apply_config(survival_cmd, survival.config);
        rc = run_survival(survival);
    });

    TauOpts tau;
    auto* tau_cmd = app.add_subcommand(
        "tau", "Survival time of one scheme (CSV row to stdout)");
    tau_cmd->set_help_flag("--help", "Print help and exit");
    tau_cmd->add_option("--chi", tau.chi, "Pump strength");
    tau_cmd->add_option("--r", tau.r, "Re u of the scheme");
    tau_cmd->add_option("--h", tau.h, "Im u of the scheme");
    tau_cmd->add_option("--out", tau.out, "Optional output CSV path");
    tau_cmd->add_option("--config", tau.config,
                   "Flat key = value config file");
    tau_cmd->callback([&] {
        apply_config(tau_cmd, tau.config);
        rc = run_tau(tau);
    });

    OptimizeOpts optimize;
    auto* optimize_cmd = app.add_subcommand(
        "optimize", "Search the scheme disk for the longest survival time");
    optimize_cmd->set_help_flag("--help", "Print help and exit");
    optimize_cmd->add_option("--chi", optimize.chi, "Pump strength");
    optimize_cmd->add_option("--n-radii", optimize.n_radii,
                             "Radial grid points");
    optimize_cmd->add_option("--n-angles", optimize.n_angles,
                             "Angular grid points");
    optimize_cmd->add_option("--out", optimize.out,
                             "Optional landscape CSV path");
    optimize_cmd->add_option("--config", optimize.config,
                   "Flat key = value config file");
    optimize_cmd->callback([&] {
        apply_config(optimize_cmd, optimize.config);
        rc = run_optimize(optimize);
    });

    OracleOpts oracle;
    auto* oracle_cmd = app.add_subcommand(
        "oracle-compare",
        "Cross-check closed forms against the truncated number basis");
    oracle_cmd->set_help_flag("--help", "Print help and exit");
    oracle_cmd->add_option("--chi", oracle.chi, "Pump strength");
    oracle_cmd->add_option("--fock-dim", oracle.fock_dim,
                           "Number-basis dimension");
    oracle_cmd->add_option("--config", oracle.config,
                   "Flat key = value config file");
    oracle_cmd->callback([&] {
        apply_config(oracle_cmd, oracle.config);
        rc = run_oracle_compare(oracle);
    });

    SimulateOpts simulate;
    auto* simulate_cmd = app.add_subcommand(
        "simulate", "Stochastic trajectory ensemble of one scheme");
    simulate_cmd->set_help_flag("--help", "Print help and exit");
    simulate_cmd->add_option("--chi", simulate.chi, "Pump strength");
    simulate_cmd->add_option("--r", simulate.r, "Re u of the scheme");
    simulate_cmd->add_option("--h", simulate.h, "Im u of the scheme");
    simulate_cmd->add_option("--n-traj", simulate.n_traj, "Trajectories");
    simulate_cmd->add_option("--dt", simulate.dt, "Integration step");
    simulate_cmd->add_option("--t-max", simulate.t_max, "Relaxation time");
    simulate_cmd->add_option("--seed", simulate.seed, "Base RNG seed");
    simulate_cmd->add_option("--fock-dim", simulate.fock_dim,
                             "Number-basis dimension");
    simulate_cmd->add_option("--out", simulate.out, "Output CSV path");
    simulate_cmd->add_option("--config", simulate.config,
                   "Flat key = value config file");
    simulate_cmd->callback([&] {
        apply_config(simulate_cmd, simulate.config);
        rc = run_simulate(simulate);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
