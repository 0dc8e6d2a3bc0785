#pragma once

// Post-hoc checks on flow output: stationary-equation residual, extraction
// of the constant gamma, history audits and the uniqueness experiment.

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "oaflow/errors.hpp"
#include "oaflow/flow.hpp"

namespace oaflow {

/// gamma_i = f rho^2 kappa / (h phi(1/h)); constant exactly at a solution.
inline std::vector<double> gamma_pointwise(const SupportField& field, const DensityField& f,
                                           const OrliczFunction& phi, Scheme scheme = Scheme::spectral) {
    const auto g = support_to_geometry(field, scheme);
    std::vector<double> out(field.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = f.f[i] * g.rho[i] * g.rho[i] * g.kappa[i] / (g.h[i] * phi(1.0 / g.h[i]));
    return out;
}

struct ResidualReport {
    double gamma = 0.0;
    double residual_sup = 0.0;
    double residual_l2 = 0.0;
    std::vector<double> residual;
    std::vector<double> gamma_pointwise;
    double gamma_cv = 0.0;
};

/// gamma phi(1/h) h rho^-2 w - f at every node. Without an explicit gamma the
/// J-weighted mean of gamma_pointwise is used.
inline ResidualReport residual(const SupportField& field, const DensityField& f, const OrliczFunction& phi,
                               std::optional<double> gamma = std::nullopt, Scheme scheme = Scheme::spectral) {
    const auto g = support_to_geometry(field, scheme);
    ResidualReport rep;
    rep.gamma_pointwise = gamma_pointwise(field, f, phi, scheme);
    const auto [mean, cv] = weighted_mean_cv(rep.gamma_pointwise, g.J);
    rep.gamma_cv = cv;
    rep.gamma = gamma.value_or(mean);
    if (!(rep.gamma > 0.0)) throw Error("residual: gamma must be positive");

    const std::size_t n = field.size();
    rep.residual.resize(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lhs = rep.gamma * phi(1.0 / g.h[i]) * g.h[i] * g.w[i] / (g.rho[i] * g.rho[i]);
        rep.residual[i] = lhs - f.f[i];
        rep.residual_sup = std::max(rep.residual_sup, std::abs(rep.residual[i]));
        sq[i] = rep.residual[i] * rep.residual[i];
    }
    rep.residual_l2 = std::sqrt(integrate_x(sq, field.grid));
    return rep;
}

struct AuditReport {
    double L0 = 0.0;
    double L_drift = 0.0;      // max |L - L0|
    double L_rel_drift = 0.0;  // max |L - L0| / |L0 + 1|
    int P_violations = 0;
    double P_max_violation = 0.0;
    double h_min = 0.0, h_max = 0.0;
    double kappa_min = 0.0, kappa_max = 0.0;
};

/// Conservation of int log rho du, monotonicity of P in the direction fixed
/// by the case, and the extremal bands of h and kappa.
inline AuditReport audit_history(std::span<const DiagnosticsRecord> history, CaseTag tag, double tol = 1e-9) {
    if (history.empty()) throw UsageError("audit_history needs a nonempty history");
    AuditReport a;
    a.L0 = history.front().L;
    a.h_min = history.front().h_min;
    a.h_max = history.front().h_max;
    a.kappa_min = history.front().kappa_min;
    a.kappa_max = history.front().kappa_max;
    for (std::size_t k = 0; k < history.size(); ++k) {
        const auto& r = history[k];
        a.L_drift = std::max(a.L_drift, std::abs(r.L - a.L0));
        a.h_min = std::min(a.h_min, r.h_min);
        a.h_max = std::max(a.h_max, r.h_max);
        a.kappa_min = std::min(a.kappa_min, r.kappa_min);
        a.kappa_max = std::max(a.kappa_max, r.kappa_max);
        if (k == 0) continue;
        const double change = r.P - history[k - 1].P;
        const double wrong = tag == CaseTag::case_i ? -change : change;
        if (wrong > 0.0) a.P_max_violation = std::max(a.P_max_violation, wrong);
        if (wrong > tol) ++a.P_violations;
    }
    a.L_rel_drift = a.L_drift / std::abs(a.L0 + 1.0);
    return a;
}

/// max |(rho/h) dh/dt - (-f rho^3 kappa eta / (phi(1/h) h) + rho)|.
inline double radial_flow_consistency(const FlowState& state, const DensityField& f, const OrliczFunction& phi,
                                      Scheme scheme = Scheme::spectral) {
    const auto g = support_to_geometry(state.field, scheme);
    const double eta = compute_eta(state.field, f, phi);
    const auto rhs = flow_rhs(state.field, f, phi, eta, scheme);
    double worst = 0.0;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        const double lhs = g.rho[i] / g.h[i] * rhs[i];
        const double rho_flow =
            -f.f[i] * g.rho[i] * g.rho[i] * g.rho[i] * g.kappa[i] * eta / (phi(1.0 / g.h[i]) * g.h[i]) + g.rho[i];
        worst = std::max(worst, std::abs(lhs - rho_flow));
    }
    return worst;
}

/// int (dh/dt / h) du: zero at every state because eta normalizes it away.
inline double log_volume_balance(const SupportField& field, const DensityField& f, const OrliczFunction& phi,
                                 Scheme scheme = Scheme::spectral) {
    const auto e = evaluate(field, f, phi, scheme);
    std::vector<double> v(field.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = e.rhs[i] / field.h[i];
    return integrate_u(v, e.geometry);
}

// ---------------------------------------------------------------------------

struct RunSummary {
    Termination reason = Termination::t_max;
    long steps = 0;
    double t = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
    double gamma_cv = 0.0;
    double residual_sup = 0.0;
    std::vector<double> h;
};

struct UniquenessReport {
    RunSummary first, second;
    std::vector<double> rescaled_first, rescaled_second;
    double rescaled_sup_distance = 0.0;
    bool pass = false;
};

class ExperimentInconclusive : public Error {
public:
    ExperimentInconclusive(std::vector<RunSummary> partial, const std::string& msg)
        : Error(msg), partial_(std::move(partial)) {}
    const std::vector<RunSummary>& partial() const noexcept { return partial_; }

private:
    std::vector<RunSummary> partial_;
};

inline RunSummary summarize(const FlowResult& r, Scheme scheme) {
    RunSummary s;
    s.reason = r.reason;
    s.steps = r.final_state.step_index;
    s.t = r.final_state.t;
    s.eta = r.final_state.eta;
    const auto rep = residual(r.final_state.field, r.density, r.orlicz.phi, std::nullopt, scheme);
    s.gamma = rep.gamma;
    s.gamma_cv = rep.gamma_cv;
    s.residual_sup = rep.residual_sup;
    s.h = r.final_state.field.h;
    return s;
}

/// Runs the flow from two initial bodies with phi(s) = s^p, p > 0, and
/// compares the solutions after moving both to gamma = 1 via
/// h -> gamma^(-1/p) h (the operator scales as lambda^-p under h -> lambda h).
inline UniquenessReport uniqueness_experiment(const FlowConfig& base, double p, const BodySpec& init1,
                                              const BodySpec& init2, double tolerance = 1e-4) {
    if (!(p > 0.0))
        throw UsageError("uniqueness needs phi increasing on (0, inf), i.e. p > 0 (got p = " + std::to_string(p) + ")");
    FlowConfig c1 = base, c2 = base;
    c1.phi = c2.phi = make_power(p);
    c1.init = init1;
    c2.init = init2;

    auto launch = [](FlowConfig c) { return run(c); };
    auto fut = std::async(std::launch::async, launch, c2);
    const FlowResult r1 = run(c1);
    const FlowResult r2 = fut.get();

    UniquenessReport rep;
    rep.first = summarize(r1, base.scheme);
    rep.second = summarize(r2, base.scheme);
    if (!converged(r1.reason) || !converged(r2.reason))
        throw ExperimentInconclusive({rep.first, rep.second}, "uniqueness experiment: a run did not converge");

    // gamma_pointwise scales as lambda^p, so lambda = gamma^(-1/p) sends gamma to 1.
    auto rescale = [p](const RunSummary& s) {
        std::vector<double> h = s.h;
        const double lambda = std::pow(s.gamma, -1.0 / p);
        for (double& x : h) x *= lambda;
        return h;
    };
    rep.rescaled_first = rescale(rep.first);
    rep.rescaled_second = rescale(rep.second);
    for (std::size_t i = 0; i < rep.rescaled_first.size(); ++i)
        rep.rescaled_sup_distance =
            std::max(rep.rescaled_sup_distance, std::abs(rep.rescaled_first[i] - rep.rescaled_second[i]));
    rep.pass = rep.rescaled_sup_distance < tolerance;
    return rep;
}

} // namespace oaflow
