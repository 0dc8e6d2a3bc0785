#pragma once

// Support-function representation of planar origin-symmetric convex bodies
// on a uniform grid of the unit circle.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "oaflow/errors.hpp"
#include "oaflow/quadrature.hpp"

namespace oaflow {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Relative floor on the principal radius: min w must exceed this fraction
/// of max w for a body to count as strictly convex.
inline constexpr double convexity_tolerance = 1e-10;

enum class Scheme { spectral, central };

inline const char* to_string(Scheme s) { return s == Scheme::spectral ? "spectral" : "central"; }

/// Uniform periodic grid theta_i = 2*pi*i/N on [0, 2*pi).
class AngularGrid {
public:
    explicit AngularGrid(int n) : n_(n) {
        if (n < 16 || n % 2 != 0)
            throw InvalidGrid("grid.N must be even >= 16 (got " + std::to_string(n) + ")");
        dtheta_ = two_pi / n;
        theta_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) theta_[static_cast<std::size_t>(i)] = two_pi * i / n;
    }

    int size() const noexcept { return n_; }
    double dtheta() const noexcept { return dtheta_; }
    std::span<const double> theta() const noexcept { return theta_; }
    double theta(std::size_t i) const noexcept { return theta_[i]; }

    friend bool operator==(const AngularGrid& a, const AngularGrid& b) { return a.n_ == b.n_; }

private:
    int n_;
    double dtheta_;
    std::vector<double> theta_;
};

inline AngularGrid make_grid(int n) { return AngularGrid(n); }

/// Support function samples on a grid. Positivity and symmetry are checked
/// where they matter (geometry construction, flow start-up), so invalid data
/// stays representable for error reporting.
struct SupportField {
    AngularGrid grid;
    std::vector<double> h;
    int dimension_n = 2;

    SupportField(AngularGrid g, std::vector<double> values) : grid(std::move(g)), h(std::move(values)) {
        if (h.size() != static_cast<std::size_t>(grid.size()))
            throw ShapeMismatch("support samples do not match grid size");
    }

    std::size_t size() const noexcept { return h.size(); }
};

struct BodyGeometry {
    AngularGrid grid;
    std::vector<double> h, h1, h2;
    std::vector<double> w;      // principal radius h'' + h
    std::vector<double> kappa;  // 1 / w
    std::vector<double> rho;    // radial function at the boundary point with normal theta
    std::vector<double> alpha;  // direction angle of that boundary point
    std::vector<double> J;      // du/dtheta = h w / rho^2
};

/// Positive even density, kept with its cosine coefficients so it can be
/// evaluated off-grid (needed by the singular hypothesis integrals).
struct DensityField {
    std::vector<double> f;
    std::vector<double> coeffs;  // f(theta) = sum_k coeffs[k] cos(2 k theta)
    std::string description;

    double operator()(double theta) const {
        double s = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k)
            s += coeffs[k] * std::cos(2.0 * static_cast<double>(k) * theta);
        return s;
    }
};

inline DensityField make_density(const AngularGrid& grid, std::vector<double> cos2k_coeffs,
                                 std::string description = "cosine-series") {
    if (cos2k_coeffs.empty()) throw Error("density needs at least one coefficient");
    DensityField d{{}, std::move(cos2k_coeffs), std::move(description)};
    const std::size_t n = static_cast<std::size_t>(grid.size()), half = n / 2;
    d.f.resize(n);
    for (std::size_t i = 0; i < half; ++i) {
        d.f[i] = d.f[i + half] = d(grid.theta(i));
        if (!(d.f[i] > 0.0))
            throw Error("density must be positive; f(theta_" + std::to_string(i) + ") = " + std::to_string(d.f[i]));
    }
    return d;
}

inline DensityField constant_density(const AngularGrid& grid, double c) {
    return make_density(grid, {c}, "constant");
}

// ---------------------------------------------------------------------------
// Differentiation

namespace detail {

struct FftwDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

struct FftPlan {
    int n = 0;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~FftPlan() {
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

// Planning is not thread-safe in FFTW; execution of a finished plan on
// fftw_malloc'd arrays is.
inline const FftPlan& fft_plan(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<FftPlan>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<FftPlan>();
        slot->n = n;
        std::unique_ptr<double, FftwDeleter> re(fftw_alloc_real(static_cast<std::size_t>(n)));
        std::unique_ptr<fftw_complex, FftwDeleter> sp(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1)));
        slot->forward = fftw_plan_dft_r2c_1d(n, re.get(), sp.get(), FFTW_ESTIMATE);
        slot->backward = fftw_plan_dft_c2r_1d(n, sp.get(), re.get(), FFTW_ESTIMATE);
    }
    return *slot;
}

struct FftBuffers {
    int n = 0;
    std::unique_ptr<double, FftwDeleter> real;
    std::unique_ptr<fftw_complex, FftwDeleter> spectrum;
    std::unique_ptr<fftw_complex, FftwDeleter> scratch;
};

inline FftBuffers& fft_buffers(int n) {
    thread_local std::map<int, FftBuffers> buffers;
    auto& b = buffers[n];
    if (b.n != n) {
        b.n = n;
        b.real.reset(fftw_alloc_real(static_cast<std::size_t>(n)));
        b.spectrum.reset(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1)));
        b.scratch.reset(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1)));
    }
    return b;
}

} // namespace detail

/// First and second derivatives of one periodic sample set, sharing a
/// single forward transform in the spectral case.
struct DerivativePair {
    std::vector<double> d1, d2;
};

inline DerivativePair derivatives(std::span<const double> v, Scheme scheme) {
    const std::size_t n = v.size();
    if (n < 2 || n % 2 != 0) throw ShapeMismatch("derivative needs an even number of periodic samples");
    const double dtheta = two_pi / static_cast<double>(n);
    DerivativePair out{std::vector<double>(n), std::vector<double>(n)};

    if (scheme == Scheme::central) {
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = v[(i + n - 1) % n];
            const double hi = v[(i + 1) % n];
            out.d1[i] = (hi - lo) / (2.0 * dtheta);
            out.d2[i] = (hi - 2.0 * v[i] + lo) / (dtheta * dtheta);
        }
        return out;
    }

    const int ni = static_cast<int>(n);
    const auto& plan = detail::fft_plan(ni);
    auto& buf = detail::fft_buffers(ni);
    double* re = buf.real.get();
    fftw_complex* sp = buf.spectrum.get();
    fftw_complex* sc = buf.scratch.get();

    // Shifting by v[0] leaves derivatives unchanged and makes constants exact.
    const double shift = v[0];
    for (std::size_t i = 0; i < n; ++i) re[i] = v[i] - shift;
    fftw_execute_dft_r2c(plan.forward, re, sp);

    const std::size_t half = n / 2;
    const double inv_n = 1.0 / static_cast<double>(n);
    // order 1: multiply by i k, Nyquist dropped.
    for (std::size_t k = 0; k <= half; ++k) {
        const double kk = static_cast<double>(k);
        if (k == half) {
            sc[k][0] = 0.0;
            sc[k][1] = 0.0;
        } else {
            sc[k][0] = -kk * sp[k][1] * inv_n;
            sc[k][1] = kk * sp[k][0] * inv_n;
        }
    }
    fftw_execute_dft_c2r(plan.backward, sc, re);
    std::copy(re, re + n, out.d1.begin());

    // order 2: multiply by -k^2, Nyquist kept.
    for (std::size_t k = 0; k <= half; ++k) {
        const double k2 = static_cast<double>(k * k);
        sc[k][0] = -k2 * sp[k][0] * inv_n;
        sc[k][1] = -k2 * sp[k][1] * inv_n;
    }
    fftw_execute_dft_c2r(plan.backward, sc, re);
    std::copy(re, re + n, out.d2.begin());
    return out;
}

inline std::vector<double> derivative(std::span<const double> v, int order, Scheme scheme) {
    if (order != 1 && order != 2) throw Error("derivative order must be 1 or 2");
    auto d = derivatives(v, scheme);
    return order == 1 ? std::move(d.d1) : std::move(d.d2);
}

// ---------------------------------------------------------------------------
// Symmetry

/// Projects onto origin-symmetric data: h(theta) <- mean of h(theta), h(theta + pi).
inline SupportField enforce_even(SupportField field) {
    const std::size_t n = field.h.size();
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double m = 0.5 * (field.h[i] + field.h[i + half]);
        field.h[i] = m;
        field.h[i + half] = m;
    }
    return field;
}

/// Largest relative antipodal mismatch |h(theta) - h(theta + pi)| / max|h|.
inline double evenness_defect(std::span<const double> v) {
    const std::size_t half = v.size() / 2;
    double scale = 0.0, worst = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < half; ++i) worst = std::max(worst, std::abs(v[i] - v[i + half]));
    return scale > 0.0 ? worst / scale : worst;
}

// ---------------------------------------------------------------------------
// Geometry and integration

inline BodyGeometry support_to_geometry(const SupportField& field, Scheme scheme = Scheme::spectral) {
    const std::size_t n = field.h.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(field.h[i] > 0.0))
            throw NonpositiveSupport(i, field.h[i],
                                     "support function not positive at node " + std::to_string(i) +
                                         " (h = " + std::to_string(field.h[i]) + ")");
    }

    BodyGeometry g{field.grid, field.h, {}, {}, {}, {}, {}, {}, {}};
    auto d = derivatives(field.h, scheme);
    g.h1 = std::move(d.d1);
    g.h2 = std::move(d.d2);
    g.w.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.w[i] = g.h2[i] + g.h[i];

    const auto [wmin_it, wmax_it] = std::minmax_element(g.w.begin(), g.w.end());
    if (!(*wmin_it > convexity_tolerance * *wmax_it) || !(*wmax_it > 0.0)) {
        const auto node = static_cast<std::size_t>(wmin_it - g.w.begin());
        throw NonConvex(node, *wmin_it,
                        "body not strictly convex: principal radius w = " + std::to_string(*wmin_it) +
                            " at node " + std::to_string(node));
    }

    g.kappa.resize(n);
    g.rho.resize(n);
    g.alpha.resize(n);
    g.J.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double rho2 = g.h[i] * g.h[i] + g.h1[i] * g.h1[i];
        g.kappa[i] = 1.0 / g.w[i];
        g.rho[i] = std::sqrt(rho2);
        g.alpha[i] = field.grid.theta(i) + std::atan2(g.h1[i], g.h[i]);
        g.J[i] = g.h[i] * g.w[i] / rho2;
    }
    return g;
}

/// Integral over the x-circle: sum of samples times dtheta, pairwise order.
inline double integrate_x(std::span<const double> samples, const AngularGrid& grid) {
    if (samples.size() != static_cast<std::size_t>(grid.size()))
        throw ShapeMismatch("integrand does not match grid size");
    return quad::pairwise_sum(samples) * grid.dtheta();
}

/// Integral over the u-circle of a field sampled at the x-nodes, by pushing
/// the measure forward through du = J dtheta.
inline double integrate_u(std::span<const double> samples, const BodyGeometry& geometry) {
    if (samples.size() != geometry.J.size()) throw ShapeMismatch("integrand does not match grid size");
    std::vector<double> weighted(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) weighted[i] = samples[i] * geometry.J[i];
    return quad::pairwise_sum(weighted) * geometry.grid.dtheta();
}

// ---------------------------------------------------------------------------
// Named bodies

inline SupportField circle(const AngularGrid& grid, double r) {
    return SupportField(grid, std::vector<double>(static_cast<std::size_t>(grid.size()), r));
}

// Samples the first half-turn and mirrors it, so antipodal nodes agree bitwise.
template <class F>
SupportField sample_even(const AngularGrid& grid, F&& h_of_theta) {
    const std::size_t n = static_cast<std::size_t>(grid.size()), half = n / 2;
    std::vector<double> h(n);
    for (std::size_t i = 0; i < half; ++i) h[i] = h[i + half] = h_of_theta(grid.theta(i));
    return SupportField(grid, std::move(h));
}

/// Ellipse with semi-axes a (along theta = 0) and b.
inline SupportField ellipse(const AngularGrid& grid, double a, double b) {
    return sample_even(grid, [=](double t) {
        const double c = std::cos(t), s = std::sin(t);
        return std::sqrt(a * a * c * c + b * b * s * s);
    });
}

/// h(theta) = sum_k coeffs[k] cos(2 k theta).
inline SupportField cosine_body(const AngularGrid& grid, std::span<const double> coeffs) {
    return sample_even(grid, [&](double t) {
        double s = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * std::cos(2.0 * static_cast<double>(k) * t);
        return s;
    });
}

inline SupportField scaled(SupportField field, double lambda) {
    for (double& x : field.h) x *= lambda;
    return field;
}

} // namespace oaflow
