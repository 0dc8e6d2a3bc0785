#pragma once

// Orlicz functions phi, the antiderivative Phi of 1/(t phi(t)) and the
// existence hypotheses that decide whether a flow run is admissible.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "oaflow/errors.hpp"
#include "oaflow/quadrature.hpp"
#include "oaflow/sphere_geometry.hpp"

namespace oaflow {

enum class Family { power, power_log, custom };

/// case_i: Phi(s) = int_0^s dt/(t phi(t)), increasing from 0 to infinity.
/// case_ii: Phi(s) = int_s^inf dt/(t phi(t)), decreasing from infinity to 0.
enum class CaseTag { case_i, case_ii, neither };

inline const char* to_string(CaseTag t) {
    switch (t) {
    case CaseTag::case_i: return "case-i";
    case CaseTag::case_ii: return "case-ii";
    default: return "neither";
    }
}

inline const char* to_string(Family f) {
    switch (f) {
    case Family::power: return "power";
    case Family::power_log: return "power-log";
    default: return "custom";
    }
}

struct OrliczFunction {
    Family family = Family::custom;
    double p = 0.0;
    std::string name;
    std::function<double(double)> phi;
    std::function<double(double)> dphi;        // empty: finite differences
    std::function<double(double)> closed_Phi;  // empty: quadrature only
    CaseTag closed_case = CaseTag::neither;
    std::optional<CaseTag> known_case;         // set by families whose class follows from p

    double operator()(double s) const { return phi(s); }

    double derivative(double s) const {
        if (dphi) return dphi(s);
        const double step = 1e-6 * s;
        return (phi(s + step) - phi(s - step)) / (2.0 * step);
    }
};

inline OrliczFunction make_power(double p) {
    if (p == 0.0)
        throw DegenerateFamily("phi(s) = s^0 gives a Phi integral that diverges at both ends");
    OrliczFunction f;
    f.family = Family::power;
    f.p = p;
    f.name = "power(p=" + std::to_string(p) + ")";
    f.phi = [p](double s) { return std::pow(s, p); };
    f.dphi = [p](double s) { return p * std::pow(s, p - 1.0); };
    f.known_case = p < 0.0 ? CaseTag::case_i : CaseTag::case_ii;
    if (p < 0.0) {
        f.closed_case = CaseTag::case_i;
        f.closed_Phi = [p](double s) { return std::pow(s, -p) / (-p); };
    } else {
        f.closed_case = CaseTag::case_ii;
        f.closed_Phi = [p](double s) { return std::pow(s, -p) / p; };
    }
    return f;
}

/// phi(s) = s^p ln(e + s).
inline OrliczFunction make_power_log(double p) {
    OrliczFunction f;
    f.family = Family::power_log;
    f.p = p;
    f.name = "power-log(p=" + std::to_string(p) + ")";
    f.phi = [p](double s) { return std::pow(s, p) * std::log(std::numbers::e + s); };
    f.dphi = [p](double s) {
        const double l = std::log(std::numbers::e + s);
        return p * std::pow(s, p - 1.0) * l + std::pow(s, p) / (std::numbers::e + s);
    };
    // p = 0: int dt / (t ln(e + t)) diverges at both ends, the tail only like ln ln t.
    f.known_case = p < 0.0 ? CaseTag::case_i : p > 0.0 ? CaseTag::case_ii : CaseTag::neither;
    return f;
}

inline OrliczFunction make_custom(std::string name, std::function<double(double)> phi,
                                  std::function<double(double)> dphi = {}) {
    OrliczFunction f;
    f.family = Family::custom;
    f.name = std::move(name);
    f.phi = std::move(phi);
    f.dphi = std::move(dphi);
    return f;
}

struct OrliczCase {
    CaseTag tag = CaseTag::neither;
    OrliczFunction phi;
    bool closed_form = false;
};

namespace detail {

// Cutoffs for the improper-endpoint probes: 2^-40 at the origin and 2^40 at
// infinity, halved (resp. doubled) three times.
inline constexpr int probe_exponent = 40;

inline double require(const quad::Result& r, const char* what) {
    if (!r.converged)
        throw QuadratureError(r.error, std::string(what) + ": quadrature did not reach tolerance (error estimate " +
                                           std::to_string(r.error) + ")");
    return r.value;
}

// Partial integral of 1/(t phi(t)) over [1, 2^(40+k)] (tail) or
// [2^-(40+k), 1] (origin), written in v = |ln t| so each piece is smooth.
inline quad::Integrability probe_phi_integral(const OrliczFunction& phi, bool tail) {
    const double ln2 = std::numbers::ln2;
    auto integrand = [&](double v) { return 1.0 / phi(tail ? std::exp(v) : std::exp(-v)); };
    double acc = 0.0;
    double lower = 0.0;
    auto partial = [&](int k) {
        const double upper = (probe_exponent + k) * ln2;
        const auto r = quad::tanh_sinh(integrand, lower, upper, 0.0, 1e-12);
        if (!r.converged)
            throw IndeterminateClass(std::string("quadrature failed while probing the ") +
                                     (tail ? "tail" : "origin") + " integral (error estimate " +
                                     std::to_string(r.error) + ")");
        acc += r.value;
        lower = upper;
        return acc;
    };
    return quad::probe_endpoint(partial);
}

} // namespace detail

/// Decides the case by probing both improper ends of int dt/(t phi(t)) at s = 1.
/// Families with a known class skip the probes unless `force_quadrature`.
inline OrliczCase classify(const OrliczFunction& phi, bool force_quadrature = false) {
    if (phi.known_case && !force_quadrature) {
        OrliczCase c;
        c.phi = phi;
        c.tag = *phi.known_case;
        c.closed_form = phi.closed_Phi && phi.closed_case == c.tag;
        return c;
    }
    for (double s : {1e-8, 1e-4, 1.0, 1e4, 1e8}) {
        const double v = phi(s);
        if (!(v > 0.0) || !std::isfinite(v))
            throw IndeterminateClass("phi must be positive and finite on the sampled range; phi(" +
                                     std::to_string(s) + ") = " + std::to_string(v));
    }
    const auto origin = detail::probe_phi_integral(phi, false);
    const auto tail = detail::probe_phi_integral(phi, true);
    using quad::Integrability;
    if (origin == Integrability::indeterminate || tail == Integrability::indeterminate)
        throw IndeterminateClass(std::string("endpoint probe inconclusive (origin: ") +
                                 (origin == Integrability::indeterminate ? "indeterminate" : "decided") +
                                 ", tail: " + (tail == Integrability::indeterminate ? "indeterminate" : "decided") +
                                 ")");

    OrliczCase c;
    c.phi = phi;
    if (origin == Integrability::convergent && tail == Integrability::divergent)
        c.tag = CaseTag::case_i;
    else if (origin == Integrability::divergent && tail == Integrability::convergent)
        c.tag = CaseTag::case_ii;
    else
        c.tag = CaseTag::neither;
    c.closed_form = !force_quadrature && phi.closed_Phi && phi.closed_case == c.tag;
    return c;
}

inline double eval_Phi(const OrliczCase& c, double s) {
    if (!(s > 0.0)) throw Error("Phi is defined for s > 0 only");
    if (c.tag == CaseTag::neither) throw Error("Phi is undefined for an unclassified phi");
    if (c.closed_form) return c.phi.closed_Phi(s);

    const auto& phi = c.phi;
    if (c.tag == CaseTag::case_i) {
        // t = s e^{-v}, v = y / (1 - y): int_0^1 dy / ((1-y)^2 phi(s e^{-v}))
        auto g = [&](double y) {
            const double one_minus = 1.0 - y;
            const double v = y / one_minus;
            return 1.0 / (phi(s * std::exp(-v)) * one_minus * one_minus);
        };
        return detail::require(quad::tanh_sinh(g, 0.0, 1.0, 1e-10, 1e-14), "Phi (origin case)");
    }
    // t = s / u: int_0^1 du / (u phi(s/u))
    auto g = [&](double u) { return 1.0 / (u * phi(s / u)); };
    return detail::require(quad::tanh_sinh(g, 0.0, 1.0, 1e-10, 1e-14), "Phi (tail case)");
}

/// P = int Phi(1/h) f dx.
inline double functional_P(const SupportField& h, const DensityField& f, const OrliczCase& c) {
    if (f.f.size() != h.size()) throw ShapeMismatch("density does not match grid size");
    std::vector<double> v(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h.h[i] > 0.0))
            throw NonpositiveSupport(i, h.h[i], "functional_P needs a positive support function");
        v[i] = eval_Phi(c, 1.0 / h.h[i]) * f.f[i];
    }
    return integrate_x(v, h.grid);
}

struct HypothesisReport {
    CaseTag tag = CaseTag::neither;
    std::optional<double> C_hat;
    double P0 = 0.0;
    bool satisfied = false;
    std::optional<double> suggested_scale;
};

/// int_0^{2pi} f(x) Phi(1/|cos(x - theta)|) dx, folded onto the singular
/// point: with x = theta + pi/2 +- delta, |cos| = sin(delta) and evenness of f
/// pairs the two singular lines, giving
/// 2 int_0^{pi/2} Phi(1/sin d) [f(theta+pi/2+d) + f(theta+pi/2-d)] dd.
inline double hypothesis_integral(const DensityField& f, const OrliczCase& c, double theta) {
    const double base = theta + std::numbers::pi / 2.0;
    auto g = [&](double d) { return eval_Phi(c, 1.0 / std::sin(d)) * (f(base + d) + f(base - d)); };
    return 2.0 * detail::require(quad::tanh_sinh(g, 0.0, std::numbers::pi / 2.0, 1e-10, 1e-14), "C_hat integral");
}

namespace detail {

inline quad::Integrability probe_hypothesis_integral(const DensityField& f, const OrliczCase& c) {
    const double base = std::numbers::pi / 2.0;
    auto g = [&](double d) { return eval_Phi(c, 1.0 / std::sin(d)) * (f(base + d) + f(base - d)); };
    double acc = 0.0;
    double upper = std::numbers::pi / 2.0;
    auto partial = [&](int k) {
        const double lower = std::ldexp(1.0, -(probe_exponent + k));
        const auto r = quad::tanh_sinh(g, lower, upper, 0.0, 1e-12);
        if (!r.converged) throw HypothesisViolated("C_hat probe: quadrature failed near the singular set");
        acc += r.value;
        upper = lower;
        return acc;
    };
    return quad::probe_endpoint(partial);
}

} // namespace detail

/// Existence pre-flight. Case ii is admissible unconditionally. Case i needs
/// C_hat = max over grid directions of int f Phi(1/|x.theta|) dx to be finite
/// and P(h0) > C_hat; when it is not, a shrink factor is bisected.
inline HypothesisReport hypothesis_check(const DensityField& f, const OrliczCase& c, const SupportField& h0) {
    HypothesisReport rep;
    rep.tag = c.tag;
    if (c.tag == CaseTag::neither) throw IndeterminateClass("phi belongs to neither admissible class");
    rep.P0 = functional_P(h0, f, c);
    if (c.tag == CaseTag::case_ii) {
        rep.satisfied = true;
        return rep;
    }

    if (detail::probe_hypothesis_integral(f, c) != quad::Integrability::convergent)
        throw HypothesisViolated("int f(x) Phi(1/|x.theta|) dx is not finite for this phi and f");

    // |x.theta| is invariant under theta -> theta + pi.
    double c_hat = 0.0;
    const std::size_t half = h0.size() / 2;
    for (std::size_t j = 0; j < half; ++j) c_hat = std::max(c_hat, hypothesis_integral(f, c, h0.grid.theta(j)));
    rep.C_hat = c_hat;
    rep.satisfied = rep.P0 > c_hat;
    if (rep.satisfied) return rep;

    // Phi increasing: P(lambda h0) grows as lambda shrinks.
    auto P = [&](double lambda) { return functional_P(scaled(h0, lambda), f, c); };
    double hi = 1.0, lo = 0.5;
    int guard = 0;
    while (!(P(lo) > c_hat)) {
        hi = lo;
        lo *= 0.5;
        if (++guard > 200) throw HypothesisViolated("no shrink factor raises P above C_hat");
    }
    for (int it = 0; it < 100 && (hi - lo) > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (P(mid) > c_hat ? lo : hi) = mid;
    }
    rep.suggested_scale = lo;
    return rep;
}

} // namespace oaflow
