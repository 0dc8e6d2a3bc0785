#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "oaflow/sphere_geometry.hpp"

namespace oaflow::testing {

/// Seeded random origin-symmetric strictly convex body:
/// h = r0 (1 + sum_k a_k cos 2k(theta - phase_k)), with sum (4k^2 - 1)|a_k| <= 0.8
/// so that h'' + h stays positive.
inline SupportField random_even_body(const AngularGrid& grid, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int modes = 3;
    std::vector<double> amp(modes), phase(modes);
    double budget = 0.0;
    for (int k = 0; k < modes; ++k) {
        amp[k] = u(rng);
        phase[k] = 2.0 * std::numbers::pi * u(rng);
        budget += (4.0 * (k + 1) * (k + 1) - 1.0) * amp[k];
    }
    const double limit = 0.8 * u(rng);
    const double r0 = 0.5 + 1.5 * u(rng);
    std::vector<double> h(static_cast<std::size_t>(grid.size()));
    for (std::size_t i = 0; i < h.size(); ++i) {
        double s = 1.0;
        for (int k = 0; k < modes; ++k)
            s += amp[k] * limit / budget * std::cos(2.0 * (k + 1) * (grid.theta(i) - phase[k]));
        h[i] = r0 * s;
    }
    return SupportField(grid, std::move(h));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace oaflow::testing
