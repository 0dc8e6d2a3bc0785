#pragma once

// Normalized Gauss-curvature flow of the support function:
//   dh/dt = -f rho^2 kappa eta / phi(1/h) + h,
//   eta   = int du / int f / phi(1/h) dx,
// integrated with classical RK4 under a diffusive step restriction.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oaflow/errors.hpp"
#include "oaflow/orlicz.hpp"
#include "oaflow/sphere_geometry.hpp"

namespace oaflow {

/// Initial-body descriptor.
struct BodySpec {
    enum class Kind { circle, ellipse, cosine };
    Kind kind = Kind::circle;
    double r = 1.0;
    double a = 1.0, b = 1.0;
    std::vector<double> coeffs;  // cos(2k theta)
    double scale = 1.0;

    SupportField sample(const AngularGrid& grid) const {
        switch (kind) {
        case Kind::circle: return scaled(circle(grid, r), scale);
        case Kind::ellipse: return scaled(ellipse(grid, a, b), scale);
        default: return scaled(cosine_body(grid, coeffs), scale);
        }
    }

    static BodySpec make_circle(double r) {
        BodySpec s;
        s.r = r;
        return s;
    }
    static BodySpec make_ellipse(double a, double b) {
        BodySpec s;
        s.kind = Kind::ellipse;
        s.a = a;
        s.b = b;
        return s;
    }
    static BodySpec make_cosine(std::vector<double> c) {
        BodySpec s;
        s.kind = Kind::cosine;
        s.coeffs = std::move(c);
        return s;
    }
};

/// Density descriptor: f(theta) = sum_k coeffs[k] cos(2k theta).
struct DensitySpec {
    std::vector<double> coeffs{1.0};
    std::string kind = "constant";

    DensityField sample(const AngularGrid& grid) const { return make_density(grid, coeffs, kind); }

    static DensitySpec constant(double c) { return {{c}, "constant"}; }
    static DensitySpec cosine(std::vector<double> c) { return {std::move(c), "cosine-series"}; }
};

struct FlowConfig {
    int N = 256;
    Scheme scheme = Scheme::spectral;
    OrliczFunction phi = make_power(2.0);
    DensitySpec density;
    BodySpec init;
    double dt_safety = 0.2;
    double t_max = 50.0;
    double rhs_tol = 1e-8;
    double gamma_cv_tol = 1e-6;
    int record_every = 10;
    long max_steps = -1;  // negative: unlimited
    double monotonicity_tol = 1e-9;
    bool skip_hypothesis_check = false;

    void validate() const {
        (void)make_grid(N);
        if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw ConfigError("time.dt_safety must lie in (0, 1]");
        if (!(t_max > 0.0)) throw ConfigError("time.t_max must be positive");
        if (!(rhs_tol > 0.0)) throw ConfigError("stop.rhs_tol must be positive");
        if (!(gamma_cv_tol > 0.0)) throw ConfigError("stop.gamma_cv_tol must be positive");
        if (record_every < 1) throw ConfigError("output.every must be >= 1");
        if (!phi.phi) throw ConfigError("phi is not set");
    }
};

struct FlowState {
    double t = 0.0;
    long step_index = 0;
    SupportField field;
    double eta = 1.0;
    double last_dt = 0.0;
};

struct DiagnosticsRecord {
    long step = 0;
    double t = 0.0, dt = 0.0, eta = 0.0;
    double P = 0.0;
    double L = 0.0;  // int log rho du
    double h_min = 0.0, h_max = 0.0;
    double kappa_min = 0.0, kappa_max = 0.0;
    double rhs_sup = 0.0;
    double gamma_mean = 0.0, gamma_cv = 0.0;
};

class FlowBreakdown : public Error {
public:
    FlowBreakdown(FlowState last, const std::string& msg) : Error(msg), last_(std::move(last)) {}
    const FlowState& last_state() const noexcept { return last_; }
    std::vector<DiagnosticsRecord> history;

private:
    FlowState last_;
};

// ---------------------------------------------------------------------------

inline double compute_eta(const SupportField& field, const DensityField& f, const OrliczFunction& phi) {
    std::vector<double> v(field.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.f[i] / phi(1.0 / field.h[i]);
    const double denom = integrate_x(v, field.grid);
    if (!std::isfinite(denom) || !(denom > 0.0)) throw Error("eta: int f / phi(1/h) dx is not a positive number");
    return two_pi / denom;
}

/// Everything the right-hand side needs at one field, computed once.
struct FlowEvaluation {
    BodyGeometry geometry;
    double eta = 0.0;
    std::vector<double> rhs;
    std::vector<double> gamma;  // f rho^2 kappa / (h phi(1/h))
};

inline FlowEvaluation evaluate(const SupportField& field, const DensityField& f, const OrliczFunction& phi,
                               Scheme scheme) {
    FlowEvaluation e{support_to_geometry(field, scheme), compute_eta(field, f, phi), {}, {}};
    const auto& g = e.geometry;
    const std::size_t n = field.size();
    e.rhs.resize(n);
    e.gamma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double speed = f.f[i] * g.rho[i] * g.rho[i] * g.kappa[i] / phi(1.0 / g.h[i]);
        e.rhs[i] = -speed * e.eta + g.h[i];
        e.gamma[i] = speed / g.h[i];
    }
    return e;
}

inline std::vector<double> flow_rhs(const SupportField& field, const DensityField& f, const OrliczFunction& phi,
                                    double eta, Scheme scheme = Scheme::spectral) {
    const auto g = support_to_geometry(field, scheme);
    std::vector<double> out(field.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = -f.f[i] * g.rho[i] * g.rho[i] * g.kappa[i] * eta / phi(1.0 / g.h[i]) + g.h[i];
    return out;
}

/// dt = safety * dtheta^2 / max D with D = f rho^2 eta / (phi(1/h) w^2), the
/// coefficient of h'' in the linearized right-hand side. Clamped to [1e-12, 0.1].
inline double adaptive_dt(const BodyGeometry& g, const DensityField& f, const OrliczFunction& phi, double eta,
                          double dt_safety) {
    double dmax = 0.0;
    for (std::size_t i = 0; i < g.h.size(); ++i) {
        const double d = f.f[i] * g.rho[i] * g.rho[i] * eta / (phi(1.0 / g.h[i]) * g.w[i] * g.w[i]);
        dmax = std::max(dmax, d);
    }
    const double dth = g.grid.dtheta();
    const double dt = dmax > 0.0 ? dt_safety * dth * dth / dmax : 0.1;
    return std::clamp(dt, 1e-12, 0.1);
}

inline double adaptive_dt(const FlowState& state, const DensityField& f, const OrliczFunction& phi,
                          const FlowConfig& config) {
    const auto g = support_to_geometry(state.field, config.scheme);
    return adaptive_dt(g, f, phi, compute_eta(state.field, f, phi), config.dt_safety);
}

namespace detail {

inline bool admissible(const SupportField& field, Scheme scheme) {
    if (*std::min_element(field.h.begin(), field.h.end()) <= 0.0) return false;
    try {
        (void)support_to_geometry(field, scheme);
    } catch (const NonConvex&) {
        return false;
    }
    return true;
}

inline SupportField axpy(const SupportField& x, double a, const std::vector<double>& k) {
    SupportField y = x;
    for (std::size_t i = 0; i < y.h.size(); ++i) y.h[i] += a * k[i];
    return y;
}

} // namespace detail

/// One RK4 step of size `dt` with eta recomputed at every stage. `k1` may
/// carry the right-hand side already evaluated at `state`. Steps that leave
/// the positive strictly convex class are retried with half the step, up to
/// 20 times.
inline FlowState step(const FlowState& state, const DensityField& f, const OrliczFunction& phi,
                      const FlowConfig& config, double dt, const std::vector<double>* k1 = nullptr) {
    std::vector<double> first;
    if (!k1) {
        first = evaluate(state.field, f, phi, config.scheme).rhs;
        k1 = &first;
    }
    auto stage = [&](const SupportField& x) -> std::optional<std::vector<double>> {
        if (*std::min_element(x.h.begin(), x.h.end()) <= 0.0) return std::nullopt;
        try {
            return evaluate(x, f, phi, config.scheme).rhs;
        } catch (const NonConvex&) {
            return std::nullopt;
        }
    };

    for (int attempt = 0; attempt <= 20; ++attempt, dt *= 0.5) {
        const auto k2 = stage(detail::axpy(state.field, 0.5 * dt, *k1));
        if (!k2) continue;
        const auto k3 = stage(detail::axpy(state.field, 0.5 * dt, *k2));
        if (!k3) continue;
        const auto k4 = stage(detail::axpy(state.field, dt, *k3));
        if (!k4) continue;

        SupportField next = state.field;
        for (std::size_t i = 0; i < next.h.size(); ++i)
            next.h[i] += dt / 6.0 * ((*k1)[i] + 2.0 * (*k2)[i] + 2.0 * (*k3)[i] + (*k4)[i]);
        next = enforce_even(std::move(next));
        if (!detail::admissible(next, config.scheme)) continue;

        FlowState out{state.t + dt, state.step_index + 1, std::move(next), 0.0, dt};
        out.eta = compute_eta(out.field, f, phi);
        return out;
    }
    throw FlowBreakdown(state, "flow breakdown: step rejected 20 times at t = " + std::to_string(state.t) +
                                   " (step " + std::to_string(state.step_index) + ")");
}

inline FlowState step(const FlowState& state, const DensityField& f, const OrliczFunction& phi,
                      const FlowConfig& config) {
    return step(state, f, phi, config, adaptive_dt(state, f, phi, config));
}

// ---------------------------------------------------------------------------

enum class Termination { converged_rhs, converged_gamma, t_max, step_limit };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::converged_rhs: return "converged-rhs";
    case Termination::converged_gamma: return "converged-gamma";
    case Termination::t_max: return "t-max";
    default: return "step-limit";
    }
}

inline bool converged(Termination t) {
    return t == Termination::converged_rhs || t == Termination::converged_gamma;
}

struct FlowResult {
    FlowState final_state;
    std::vector<DiagnosticsRecord> history;
    Termination reason = Termination::t_max;
    std::vector<std::string> warnings;
    bool stalled = false;
    OrliczCase orlicz;
    DensityField density;
};

using RecordSink = std::function<void(const DiagnosticsRecord&, const FlowState&)>;

/// J-weighted mean and coefficient of variation.
inline std::pair<double, double> weighted_mean_cv(std::span<const double> v, std::span<const double> J) {
    std::vector<double> a(v.size()), b(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) a[i] = v[i] * J[i];
    const double mass = quad::pairwise_sum(J);
    const double mean = quad::pairwise_sum(a) / mass;
    for (std::size_t i = 0; i < v.size(); ++i) b[i] = (v[i] - mean) * (v[i] - mean) * J[i];
    const double var = quad::pairwise_sum(b) / mass;
    return {mean, std::sqrt(var) / mean};
}

inline DiagnosticsRecord make_record(const FlowState& state, const FlowEvaluation& e, const DensityField& f,
                                     const OrliczCase& c) {
    const auto& g = e.geometry;
    DiagnosticsRecord r;
    r.step = state.step_index;
    r.t = state.t;
    r.dt = state.last_dt;
    r.eta = e.eta;
    r.P = functional_P(state.field, f, c);
    std::vector<double> log_rho(g.rho.size());
    for (std::size_t i = 0; i < log_rho.size(); ++i) log_rho[i] = std::log(g.rho[i]);
    r.L = integrate_u(log_rho, g);
    const auto [hmin, hmax] = std::minmax_element(g.h.begin(), g.h.end());
    const auto [kmin, kmax] = std::minmax_element(g.kappa.begin(), g.kappa.end());
    r.h_min = *hmin;
    r.h_max = *hmax;
    r.kappa_min = *kmin;
    r.kappa_max = *kmax;
    r.rhs_sup = 0.0;
    for (double x : e.rhs) r.rhs_sup = std::max(r.rhs_sup, std::abs(x));
    std::tie(r.gamma_mean, r.gamma_cv) = weighted_mean_cv(e.gamma, g.J);
    return r;
}

/// Rejects initial data the flow is not defined for. Never repairs it.
inline void validate_initial(const SupportField& field, Scheme scheme) {
    if (evenness_defect(field.h) > 1e-12) throw NotEven("initial body is not origin-symmetric");
    (void)support_to_geometry(field, scheme);
}

/// Evolves until rhs_sup < rhs_tol, gamma_cv < gamma_cv_tol, t >= t_max or
/// the step limit, recording diagnostics every `record_every` steps and at
/// the final state. `resume_from` continues an earlier trajectory.
inline FlowResult run(const FlowConfig& config, const RecordSink& sink = {},
                      std::optional<FlowState> resume_from = std::nullopt) {
    config.validate();
    const AngularGrid grid = make_grid(config.N);
    struct {
        std::vector<DiagnosticsRecord> history;
        std::vector<std::string> warnings;
        bool stalled = false;
        OrliczCase orlicz;
        DensityField density;
        Termination reason = Termination::t_max;
    } res;
    res.density = config.density.sample(grid);
    res.orlicz = classify(config.phi);
    if (res.orlicz.tag == CaseTag::neither)
        throw IndeterminateClass("phi belongs to neither admissible class; the flow has no monotone functional");
    const auto& f = res.density;
    const auto& phi = config.phi;

    FlowState state{0.0, 0, config.init.sample(grid), 0.0, 0.0};
    if (resume_from) {
        if (resume_from->field.grid.size() != config.N) throw ConfigError("resume snapshot grid differs from grid.N");
        state = *resume_from;
    }
    validate_initial(state.field, config.scheme);
    state.eta = compute_eta(state.field, f, phi);

    if (!resume_from && !config.skip_hypothesis_check) {
        const auto rep = hypothesis_check(f, res.orlicz, state.field);
        if (!rep.satisfied)
            throw HypothesisViolated("existence hypothesis fails: P(0) = " + std::to_string(rep.P0) +
                                     " <= C_hat = " + std::to_string(rep.C_hat.value_or(0.0)));
    }

    const long first_step = state.step_index;
    long last_recorded = -1;
    std::optional<double> last_P;
    double best_rhs = std::numeric_limits<double>::infinity();
    long since_best = 0;

    auto record = [&](const FlowEvaluation& e) {
        auto r = make_record(state, e, f, res.orlicz);
        if (last_P) {
            const double change = r.P - *last_P;
            const bool bad = res.orlicz.tag == CaseTag::case_i ? change < -config.monotonicity_tol
                                                                  : change > config.monotonicity_tol;
            if (bad)
                res.warnings.push_back("P monotonicity violated at step " + std::to_string(r.step) +
                                       " by " + std::to_string(std::abs(change)));
        }
        last_P = r.P;
        last_recorded = state.step_index;
        res.history.push_back(r);
        if (sink) sink(r, state);
    };

    try {
        for (;;) {
            const auto e = evaluate(state.field, f, phi, config.scheme);
            if (state.step_index % config.record_every == 0) record(e);

            double rhs_sup = 0.0;
            for (double x : e.rhs) rhs_sup = std::max(rhs_sup, std::abs(x));
            const double gamma_cv = weighted_mean_cv(e.gamma, e.geometry.J).second;

            std::optional<Termination> stop;
            if (rhs_sup < config.rhs_tol)
                stop = Termination::converged_rhs;
            else if (gamma_cv < config.gamma_cv_tol)
                stop = Termination::converged_gamma;
            else if (state.t >= config.t_max)
                stop = Termination::t_max;
            else if (config.max_steps >= 0 && state.step_index - first_step >= config.max_steps)
                stop = Termination::step_limit;
            if (stop) {
                if (last_recorded != state.step_index) record(e);
                res.reason = *stop;
                break;
            }

            if (rhs_sup < best_rhs) {
                best_rhs = rhs_sup;
                since_best = 0;
            } else if (++since_best == 10000) {
                res.stalled = true;
                res.warnings.push_back("rhs_sup has not decreased for 10000 steps (step " +
                                       std::to_string(state.step_index) + ")");
            }

            double dt = adaptive_dt(e.geometry, f, phi, e.eta, config.dt_safety);
            dt = std::min(dt, config.t_max - state.t);
            state = step(state, f, phi, config, dt, &e.rhs);
        }
    } catch (FlowBreakdown& b) {
        b.history = res.history;
        throw;
    }
    return FlowResult{std::move(state), std::move(res.history), res.reason, std::move(res.warnings),
                      res.stalled, std::move(res.orlicz), std::move(res.density)};
}

} // namespace oaflow
