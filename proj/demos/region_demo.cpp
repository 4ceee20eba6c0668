// Prints the stationary-covariance region for a set of pump strengths:
// the boundary traced by the physically realizable monitoring schemes,
// the larger unconstrained boundary, and the most robust point on each.

#include <cstdio>

#include "unravel/dynamics.hpp"
#include "unravel/gaussian.hpp"

using namespace unravel;

namespace {

void print_region(double chi) {
    const OpoModel model{chi};
    const CovarianceMatrix minf = stationary_covariance(model);
    const auto realizable = realizable_region_boundary(model, 32);
    const auto unconstrained = unconstrained_region_boundary(model, 32);

    std::printf("pump chi = %.2f  (unmonitored gamma = %.6f, alpha = %.6f)\n",
                chi, minf.gamma, minf.alpha);

    double gamma_min = realizable.front().gamma;
    double gamma_max = gamma_min;
    double beta_max = 0.0;
    for (const auto& p : realizable) {
        gamma_min = std::min(gamma_min, p.gamma);
        gamma_max = std::max(gamma_max, p.gamma);
        beta_max = std::max(beta_max, std::abs(p.beta));
    }
    std::printf("  realizable boundary: gamma in [%.6f, %.6f], "
                "|beta| <= %.6f\n",
                gamma_min, gamma_max, beta_max);

    gamma_min = unconstrained.front().gamma;
    gamma_max = gamma_min;
    beta_max = 0.0;
    for (const auto& p : unconstrained) {
        gamma_min = std::min(gamma_min, p.gamma);
        gamma_max = std::max(gamma_max, p.gamma);
        beta_max = std::max(beta_max, std::abs(p.beta));
    }
    std::printf("  unconstrained boundary: gamma in [%.6f, %.6f], "
                "|beta| <= %.6f\n",
                gamma_min, gamma_max, beta_max);

    const CovarianceMatrix best =
        stationary_covariance_for_unraveling({-1.0, 0.0}, model);
    std::printf("  most robust scheme u = -1: gamma = %.6f, alpha = %.6f "
                "(pure: det = %.2e from 1)\n\n",
                best.gamma, best.alpha, std::abs(best.det() - 1.0));
}

}  // namespace

int main() {
    std::printf("Stationary covariance regions of the monitored cavity\n");
    std::printf("=====================================================\n\n");
    for (const double chi : {0.1, 0.5, 0.9}) {
        print_region(chi);
    }
    std::printf("The realizable curve always sits inside the unconstrained "
                "region;\nthe gap widens as the pump approaches threshold.\n");
    return 0;
}
