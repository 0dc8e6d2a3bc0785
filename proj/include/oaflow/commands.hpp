#pragma once

// Subcommand bodies behind the oaflow executable. Each returns the process
// exit code and writes human-readable key=value output to `out`.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>

#include "oaflow/analysis.hpp"
#include "oaflow/flow.hpp"
#include "oaflow/io.hpp"
#include "oaflow/orlicz.hpp"

namespace oaflow::cli {

enum ExitCode : int {
    ok = 0,
    usage_or_io = 1,
    hypothesis_fail = 2,
    classification_fail = 3,
    timeout = 4,
    breakdown = 5,
};

inline void print_report(std::ostream& out, const HypothesisReport& rep) {
    out << "case=" << to_string(rep.tag) << "\n";
    if (rep.C_hat) out << "C_hat=" << io::fmt(*rep.C_hat) << "\n";
    out << "P0=" << io::fmt(rep.P0) << "\n";
    out << "verdict=" << (rep.satisfied ? "satisfied" : "unsatisfied") << "\n";
    if (rep.suggested_scale) out << "suggested_scale=" << io::fmt(*rep.suggested_scale) << "\n";
}

inline int cmd_check(const io::RunConfig& cfg, std::ostream& out) {
    const auto grid = make_grid(cfg.flow.N);
    const auto c = classify(cfg.flow.phi);
    if (c.tag == CaseTag::neither) {
        out << "case=neither\n"
            << "explanation=int dt/(t phi(t)) converges at neither or both ends; phi is in no admissible class\n";
        return classification_fail;
    }
    const auto f = cfg.flow.density.sample(grid);
    const auto h0 = cfg.flow.init.sample(grid);
    try {
        const auto rep = hypothesis_check(f, c, h0);
        if (rep.tag == CaseTag::case_ii) out << "case-ii: hypothesis automatic\n";
        print_report(out, rep);
        return rep.satisfied ? ok : hypothesis_fail;
    } catch (const HypothesisViolated& e) {
        out << "case=" << to_string(c.tag) << "\nverdict=violated\nexplanation=" << e.what() << "\n";
        return hypothesis_fail;
    }
}

namespace detail {

inline io::Summary audit_summary(const FlowResult& r, Scheme scheme) {
    io::Summary s;
    const auto& st = r.final_state;
    const auto rep = residual(st.field, r.density, r.orlicz.phi, 1.0 / st.eta, scheme);
    const auto mean_rep = residual(st.field, r.density, r.orlicz.phi, std::nullopt, scheme);
    const auto audit = audit_history(r.history, r.orlicz.tag);
    double mean_h = 0.0;
    for (double x : st.field.h) mean_h += x;
    mean_h /= static_cast<double>(st.field.size());
    const auto [hmin, hmax] = std::minmax_element(st.field.h.begin(), st.field.h.end());

    s.emplace_back("termination", to_string(r.reason));
    s.emplace_back("converged", converged(r.reason) ? "true" : "false");
    s.emplace_back("case", to_string(r.orlicz.tag));
    s.emplace_back("steps", std::to_string(st.step_index));
    s.emplace_back("t", io::fmt(st.t));
    s.emplace_back("eta", io::fmt(st.eta));
    s.emplace_back("gamma", io::fmt(mean_rep.gamma));
    s.emplace_back("gamma_cv", io::fmt(mean_rep.gamma_cv));
    s.emplace_back("gamma_eta_product", io::fmt(mean_rep.gamma * st.eta));
    s.emplace_back("residual_sup", io::fmt(mean_rep.residual_sup));
    s.emplace_back("residual_l2", io::fmt(mean_rep.residual_l2));
    s.emplace_back("residual_sup_inv_eta", io::fmt(rep.residual_sup));
    s.emplace_back("final_h_mean", io::fmt(mean_h));
    s.emplace_back("final_h_min", io::fmt(*hmin));
    s.emplace_back("final_h_max", io::fmt(*hmax));
    s.emplace_back("L_initial", io::fmt(audit.L0));
    s.emplace_back("L_drift", io::fmt(audit.L_drift));
    s.emplace_back("L_rel_drift", io::fmt(audit.L_rel_drift));
    s.emplace_back("P_violations", std::to_string(audit.P_violations));
    s.emplace_back("P_max_violation", io::fmt(audit.P_max_violation));
    s.emplace_back("band_h_min", io::fmt(audit.h_min));
    s.emplace_back("band_h_max", io::fmt(audit.h_max));
    s.emplace_back("band_kappa_min", io::fmt(audit.kappa_min));
    s.emplace_back("band_kappa_max", io::fmt(audit.kappa_max));
    s.emplace_back("stalled", r.stalled ? "true" : "false");
    s.emplace_back("warnings", std::to_string(r.warnings.size()));
    return s;
}

inline std::string snapshot_name(long step) { return "snapshot_" + std::to_string(step) + ".txt"; }

} // namespace detail

inline int cmd_run(const io::RunConfig& cfg, std::ostream& out,
                   const std::optional<std::filesystem::path>& resume = std::nullopt) {
    namespace fs = std::filesystem;
    const fs::path dir = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

    const auto grid = make_grid(cfg.flow.N);
    const auto c = classify(cfg.flow.phi);
    if (c.tag == CaseTag::neither) {
        out << "case=neither\nexplanation=phi is in no admissible class\n";
        return classification_fail;
    }

    std::optional<FlowState> start;
    if (resume) {
        const auto snap = io::load_snapshot(*resume);
        if (snap.N != cfg.flow.N) throw ConfigError("snapshot N differs from grid.N");
        start = snap.to_state();
    } else if (!cfg.flow.skip_hypothesis_check) {
        try {
            const auto rep = hypothesis_check(cfg.flow.density.sample(grid), c, cfg.flow.init.sample(grid));
            if (!rep.satisfied) {
                print_report(out, rep);
                return hypothesis_fail;
            }
        } catch (const HypothesisViolated& e) {
            out << "verdict=violated\nexplanation=" << e.what() << "\n";
            return hypothesis_fail;
        }
    }
    FlowConfig flow = cfg.flow;
    flow.skip_hypothesis_check = true;  // checked above

    const fs::path diag_path = dir / "diagnostics.csv";
    const bool append = resume && fs::exists(diag_path);
    std::ofstream diag(diag_path, append ? std::ios::app : std::ios::trunc);
    if (!diag) throw IoError("cannot write '" + diag_path.string() + "'");
    if (!append) diag << io::diagnostics_header << "\n";
    if (resume) diag << "# resume step=" << start->step_index << " t=" << io::fmt(start->t) << "\n";

    long rows = 0;
    auto sink = [&](const DiagnosticsRecord& r, const FlowState& s) {
        diag << io::diagnostics_row(r) << "\n";
        if (++rows % 64 == 0) diag.flush();
        if (cfg.snapshot_every > 0 && s.step_index % cfg.snapshot_every == 0)
            io::save_snapshot(s, dir / detail::snapshot_name(s.step_index), cfg.echo);
    };

    try {
        const FlowResult r = run(flow, sink, start);
        diag.flush();
        if (!diag) throw IoError("write failed for '" + diag_path.string() + "'");
        io::write_text(dir / "shape_final.csv",
                       io::shape_csv(r.final_state.field, r.density, r.orlicz.phi, flow.scheme));
        io::save_snapshot(r.final_state, dir / detail::snapshot_name(r.final_state.step_index), cfg.echo);
        const auto summary = detail::audit_summary(r, flow.scheme);
        io::write_text(dir / "summary", io::summary_text(summary));
        for (const auto& w : r.warnings) out << "warning=" << w << "\n";
        out << io::summary_text(summary);
        return converged(r.reason) ? ok : timeout;
    } catch (const FlowBreakdown& b) {
        diag.flush();
        io::save_snapshot(b.last_state(), dir / detail::snapshot_name(b.last_state().step_index), cfg.echo);
        io::Summary s{{"termination", "breakdown"},
                      {"converged", "false"},
                      {"steps", std::to_string(b.last_state().step_index)},
                      {"t", io::fmt(b.last_state().t)},
                      {"records", std::to_string(b.history.size())},
                      {"error", b.what()}};
        io::write_text(dir / "summary", io::summary_text(s));
        out << io::summary_text(s);
        return breakdown;
    }
}

inline int cmd_residual(const io::RunConfig& cfg, const std::filesystem::path& shape, std::optional<double> gamma,
                        std::ostream& out) {
    const auto field = io::read_shape_csv(shape);
    const auto f = cfg.flow.density.sample(field.grid);
    const auto rep = residual(field, f, cfg.flow.phi, gamma, cfg.flow.scheme);
    out << "N=" << field.size() << "\n";
    out << "gamma=" << io::fmt(rep.gamma) << "\n";
    out << "gamma_cv=" << io::fmt(rep.gamma_cv) << "\n";
    out << "residual_sup=" << io::fmt(rep.residual_sup) << "\n";
    out << "residual_l2=" << io::fmt(rep.residual_l2) << "\n";
    return ok;
}

inline int cmd_uniqueness(const io::RunConfig& cfg, std::ostream& out) {
    if (cfg.phi_family != "power")
        throw UsageError("uniqueness requires phi.family = power (only there can gamma be absorbed by rescaling)");
    if (!(cfg.flow.phi.p > 0.0))
        throw UsageError("uniqueness requires phi increasing on (0, inf): phi.p must be > 0");
    if (!cfg.init2) throw UsageError("uniqueness requires a second initial body (init2.kind, ...)");
    try {
        const auto rep = uniqueness_experiment(cfg.flow, cfg.flow.phi.p, cfg.flow.init, *cfg.init2);
        out << "run1_termination=" << to_string(rep.first.reason) << "\n";
        out << "run1_gamma=" << io::fmt(rep.first.gamma) << "\n";
        out << "run2_termination=" << to_string(rep.second.reason) << "\n";
        out << "run2_gamma=" << io::fmt(rep.second.gamma) << "\n";
        out << "rescaled_sup_distance=" << io::fmt(rep.rescaled_sup_distance) << "\n";
        out << "result=" << (rep.pass ? "pass" : "fail") << "\n";
        return rep.pass ? ok : hypothesis_fail;
    } catch (const ExperimentInconclusive& e) {
        out << "result=inconclusive\nexplanation=" << e.what() << "\n";
        return hypothesis_fail;
    }
}

} // namespace oaflow::cli
