// Compares survival probabilities of several monitoring schemes for one
// pump strength: a table of S(t), the threshold Lambda, and each scheme's
// survival time against the closed form for the most robust scheme.

#include <cstdio>
#include <vector>

#include "unravel/dynamics.hpp"
#include "unravel/gaussian.hpp"
#include "unravel/robustness.hpp"

using namespace unravel;

int main() {
    const double chi = 0.5;
    const OpoModel model{chi};
    const double lambda = largest_eigenvalue(model);

    const std::vector<std::pair<const char*, UnravelingParam>> schemes = {
        {"u = -1", {-1.0, 0.0}},
        {"u = +1", {1.0, 0.0}},
        {"u =  0", {0.0, 0.0}},
        {"u = +i", {0.0, 1.0}},
    };

    std::printf("Survival of monitored stationary states, pump chi = %.2f\n",
                chi);
    std::printf("threshold Lambda = %.9f\n\n", lambda);

    std::printf("%6s", "t");
    for (const auto& [name, u] : schemes) {
        std::printf("  %10s", name);
    }
    std::printf("\n");

    std::vector<CovarianceMatrix> starts;
    starts.reserve(schemes.size());
    for (const auto& [name, u] : schemes) {
        starts.push_back(stationary_covariance_for_unraveling(u, model));
    }

    for (int k = 0; k <= 12; ++k) {
        const double t = 0.5 * k;
        std::printf("%6.2f", t);
        for (const auto& m0 : starts) {
            std::printf("  %10.6f",
                        survival_probability_integral(m0, model, t));
        }
        std::printf("\n");
    }

    std::printf("\nsurvival times (first crossing of Lambda):\n");
    for (const auto& [name, u] : schemes) {
        const SurvivalTime st = survival_time(u, model);
        std::printf("  %-6s  tau = %.9f\n", name, st.tau);
    }
    std::printf("  closed form for u = -1: tau_R = %.9f\n",
                robust_survival_time(model));
    return 0;
}
