#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

namespace oaflow::quad {

/// Pairwise sum in a fixed recursion order; the result depends only on the
/// input values, never on threading or call site.
inline double pairwise_sum(std::span<const double> v) {
    constexpr std::size_t block = 8;
    if (v.size() <= block) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Tanh-sinh (double exponential) rule on [a, b].
///
/// Abscissas near the left endpoint are formed as a + (b - a)*sigma with sigma
/// computed in relative precision, so an integrable singularity placed at
/// a = 0 is resolved down to the underflow threshold. Levels halve the step
/// until two successive estimates differ by at most `tol` (absolute) or by
/// `rel_tol` relative to the estimate. Non-finite integrand values are
/// treated as zero-weight points.
template <class F>
Result tanh_sinh(F&& f, double a, double b, double tol = 1e-10, double rel_tol = 0.0, int max_level = 12) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    constexpr double t_max = 6.5;
    const double width = b - a;

    Result r;
    auto node = [&](double t) -> double {
        const double u = half_pi * std::sinh(t);
        // sigma_left = 1/(1+exp(-2u)) is the fractional distance from a.
        const double e = std::exp(-2.0 * std::abs(u));
        const double small = e / (1.0 + e);
        const double large = 1.0 / (1.0 + e);
        double x;
        if (u < 0.0) {
            if (small == 0.0) return 0.0;
            x = a + width * small;
            if (x == a) return 0.0;
        } else {
            if (small == 0.0) return 0.0;
            x = b - width * small;
            if (x == b) return 0.0;
        }
        const double weight = width * 2.0 * small * large * half_pi * std::cosh(t);
        const double fx = f(x);
        ++r.evaluations;
        if (!std::isfinite(fx)) return 0.0;
        return weight * fx;
    };

    double h = 1.0;
    double sum = node(0.0);
    for (int k = 1; k * h <= t_max; ++k) sum += node(k * h) + node(-k * h);
    double estimate = h * sum;

    for (int level = 1; level <= max_level; ++level) {
        h /= 2.0;
        double added = 0.0;
        for (int k = 1; k * h <= t_max; k += 2) added += node(k * h) + node(-k * h);
        sum += added;
        const double next = h * sum;
        r.error = std::abs(next - estimate);
        estimate = next;
        if (level >= 3 && (r.error <= tol || r.error <= rel_tol * std::abs(estimate))) {
            r.converged = true;
            break;
        }
    }
    r.value = estimate;
    return r;
}

enum class Integrability { convergent, divergent, indeterminate };

/// Ratio probe for an improper endpoint. `partial(k)` returns the partial
/// integral with the cutoff halved k times (k = 0..3). The integral is
/// divergent when each of the three halvings changes the partial value by
/// more than `threshold` relative, convergent when none does.
template <class Partial>
Integrability probe_endpoint(Partial&& partial, double threshold = 0.01) {
    double prev = partial(0);
    int big = 0;
    for (int k = 1; k <= 3; ++k) {
        const double next = partial(k);
        const double scale = std::max(std::abs(next), 1e-300);
        if (!std::isfinite(next) || std::abs(next - prev) / scale > threshold) ++big;
        prev = next;
    }
    if (big == 3) return Integrability::divergent;
    if (big == 0) return Integrability::convergent;
    return Integrability::indeterminate;
}

} // namespace oaflow::quad
