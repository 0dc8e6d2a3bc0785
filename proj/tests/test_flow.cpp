#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oaflow/analysis.hpp"
#include "oaflow/flow.hpp"
#include "test_support.hpp"

using namespace oaflow;
using std::numbers::pi;

namespace {

double sup(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double conserved_L(const SupportField& h) {
    const auto g = support_to_geometry(h);
    std::vector<double> v(h.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::log(g.rho[i]);
    return integrate_u(v, g);
}

FlowConfig ellipse_config(int n = 128) {
    FlowConfig c;
    c.N = n;
    c.init = BodySpec::make_ellipse(1.2, 5.0 / 6.0);
    return c;
}

}  // namespace

TEST(ComputeEta, Constants) {
    const auto g = make_grid(64);
    const auto f = constant_density(g, 1.0);
    const auto phi = make_power(2.0);
    EXPECT_NEAR(compute_eta(circle(g, 1.0), f, phi), 1.0, 1e-15);
    EXPECT_NEAR(compute_eta(circle(g, 2.0), f, phi), 0.25, 1e-15);
    EXPECT_NEAR(compute_eta(circle(g, 1.0), make_density(g, {1.0, 0.3}), phi), 1.0, 1e-14);
}

TEST(FlowRhs, SpheresAreFixedPoints) {
    const auto g = make_grid(256);
    for (double r : {0.5, 1.0, 2.0})
        for (double c : {0.5, 1.0, 2.0})
            for (double p : {-0.5, 1.0, 2.0}) {
                const auto h = circle(g, r);
                const auto f = constant_density(g, c);
                const auto phi = make_power(p);
                EXPECT_LT(sup(flow_rhs(h, f, phi, compute_eta(h, f, phi))), 1e-12) << r << " " << c << " " << p;
            }
}

TEST(FlowRhs, CosineDensityOnUnitCircle) {
    const auto g = make_grid(128);
    const auto f = make_density(g, {1.0, 0.3});
    const auto phi = make_power(2.0);
    const auto h = circle(g, 1.0);
    const auto rhs = flow_rhs(h, f, phi, compute_eta(h, f, phi));
    for (std::size_t i = 0; i < rhs.size(); ++i) EXPECT_NEAR(rhs[i], -0.3 * std::cos(2 * g.theta(i)), 1e-13);
    const auto central = flow_rhs(h, f, phi, compute_eta(h, f, phi), Scheme::central);
    EXPECT_LT(oaflow::testing::max_abs_diff(rhs, central), 1e-13);
}

TEST(FlowRhs, LogVolumeBalanceVanishes) {
    const auto g = make_grid(256);
    const auto f = make_density(g, {1.0, 0.3, 0.1});
    for (double p : {-0.5, 1.0, 2.0})
        for (unsigned seed = 0; seed < 10; ++seed)
            EXPECT_LT(std::abs(log_volume_balance(oaflow::testing::random_even_body(g, seed), f, make_power(p))), 1e-8);
}

TEST(AdaptiveDt, UnitCircle) {
    FlowConfig c;
    const auto g = make_grid(256);
    const auto f = constant_density(g, 1.0);
    const FlowState s{0.0, 0, circle(g, 1.0), 1.0, 0.0};
    const double dt = adaptive_dt(s, f, c.phi, c);
    EXPECT_NEAR(dt, 0.2 * g.dtheta() * g.dtheta(), 1e-18);
    EXPECT_NEAR(dt, 1.2e-4, 1e-5);

    c.N = 512;
    const auto g2 = make_grid(512);
    const FlowState s2{0.0, 0, circle(g2, 1.0), 1.0, 0.0};
    EXPECT_NEAR(adaptive_dt(s2, constant_density(g2, 1.0), c.phi, c), dt / 4, 1e-15);
}

TEST(AdaptiveDt, ClampedAtOneTenth) {
    const auto g = make_grid(16);
    const auto geom = support_to_geometry(circle(g, 1.0));
    EXPECT_EQ(adaptive_dt(geom, constant_density(g, 1e-12), make_power(2.0), 1.0, 1.0), 0.1);
    EXPECT_EQ(adaptive_dt(geom, constant_density(g, 1e30), make_power(2.0), 1.0, 1.0), 1e-12);
}

TEST(Step, SphereUnchanged) {
    FlowConfig c;
    const auto g = make_grid(256);
    const auto f = constant_density(g, 2.0);
    for (double r : {0.5, 1.0, 2.0}) {
        const FlowState s{0.0, 0, circle(g, r), compute_eta(circle(g, r), f, c.phi), 0.0};
        const auto next = step(s, f, c.phi, c);
        EXPECT_LT(oaflow::testing::max_abs_diff(next.field.h, s.field.h), 1e-13);
        EXPECT_EQ(next.step_index, 1);
        EXPECT_GT(next.t, 0.0);
    }
}

TEST(Step, EllipseConservesL) {
    FlowConfig c = ellipse_config(256);
    const auto g = make_grid(256);
    const auto f = constant_density(g, 1.0);
    const auto h = ellipse(g, 1.2, 5.0 / 6.0);
    const FlowState s{0.0, 0, h, compute_eta(h, f, c.phi), 0.0};
    const auto next = step(s, f, c.phi, c);
    EXPECT_LT(std::abs(conserved_L(next.field) - conserved_L(h)), 1e-10);
    EXPECT_LT(evenness_defect(next.field.h), 1e-15);
}

TEST(Step, RejectsOversizedStepsByHalving) {
    FlowConfig c = ellipse_config(128);
    const auto g = make_grid(128);
    const auto f = constant_density(g, 1.0);
    const auto h = ellipse(g, 2.0, 0.5);
    const FlowState s{0.0, 0, h, compute_eta(h, f, c.phi), 0.0};
    const auto next = step(s, f, c.phi, c, 0.1);
    EXPECT_LT(next.last_dt, 0.1);
    EXPECT_NO_THROW(support_to_geometry(next.field));
}

TEST(Run, NonConvexInitialDataRejected) {
    FlowConfig c;
    c.N = 64;
    c.init = BodySpec::make_cosine({1.0, 0.0, 0.2});  // w = 1 - 3.0 cos 4 theta
    EXPECT_THROW(run(c), NonConvex);
    c.init = BodySpec::make_cosine({0.1, 0.5});
    EXPECT_THROW(run(c), NonpositiveSupport);
}

TEST(Run, UnitCircleStopsImmediately) {
    FlowConfig c;
    c.N = 128;
    const auto r = run(c);
    EXPECT_TRUE(converged(r.reason));
    EXPECT_LE(r.final_state.step_index, 1);
    for (double x : r.final_state.field.h) EXPECT_NEAR(x, 1.0, 1e-10);
    ASSERT_FALSE(r.history.empty());
}

TEST(Run, EllipseConvergesToHarmonicMeanCircle) {
    FlowConfig c = ellipse_config(128);
    c.gamma_cv_tol = 1e-10;
    const auto r = run(c);
    ASSERT_TRUE(converged(r.reason)) << to_string(r.reason);
    const double radius = 2 * 1.2 * (5.0 / 6.0) / (1.2 + 5.0 / 6.0);
    for (double x : r.final_state.field.h) EXPECT_NEAR(x, radius, 1e-4);
    const auto a = audit_history(r.history, r.orlicz.tag);
    EXPECT_LT(a.L_rel_drift, 1e-6);
    EXPECT_EQ(a.P_violations, 0);
    EXPECT_TRUE(r.warnings.empty());
    for (std::size_t k = 1; k < r.history.size(); ++k) EXPECT_GT(r.history[k].t, r.history[k - 1].t);
}

TEST(Run, NonconstantDensityConvergesToNoncircularBody) {
    FlowConfig c;
    c.N = 128;
    c.density = DensitySpec::cosine({1.0, 0.3});
    const auto r = run(c);
    ASSERT_TRUE(converged(r.reason));
    const auto rep = residual(r.final_state.field, r.density, c.phi);
    EXPECT_LT(rep.gamma_cv, 1e-6);
    EXPECT_LT(rep.residual_sup, 1e-5);
    const auto& h = r.final_state.field.h;
    EXPECT_GT(*std::max_element(h.begin(), h.end()) - *std::min_element(h.begin(), h.end()), 1e-2);
    EXPECT_LT(evenness_defect(h), 1e-15);
}

TEST(Run, TimeoutKeepsHistory) {
    FlowConfig c = ellipse_config(64);
    c.t_max = 1e-6;
    c.record_every = 1;
    const auto r = run(c);
    EXPECT_EQ(r.reason, Termination::t_max);
    EXPECT_FALSE(converged(r.reason));
    EXPECT_NEAR(r.final_state.t, 1e-6, 1e-18);
    EXPECT_GE(r.history.size(), 2u);
}

TEST(Run, StepLimitAndSink) {
    FlowConfig c = ellipse_config(64);
    c.max_steps = 25;
    c.record_every = 10;
    std::vector<long> seen;
    const auto r = run(c, [&](const DiagnosticsRecord& rec, const FlowState& s) {
        EXPECT_EQ(rec.step, s.step_index);
        seen.push_back(rec.step);
    });
    EXPECT_EQ(r.reason, Termination::step_limit);
    EXPECT_EQ(seen, (std::vector<long>{0, 10, 20, 25}));
}

TEST(Run, ResumeMatchesUninterrupted) {
    FlowConfig c = ellipse_config(64);
    c.max_steps = 60;
    const auto whole = run(c);
    c.max_steps = 25;
    const auto part = run(c);
    c.max_steps = 35;
    const auto rest = run(c, {}, part.final_state);
    EXPECT_EQ(rest.final_state.step_index, 60);
    EXPECT_EQ(rest.final_state.field.h, whole.final_state.field.h);
    EXPECT_EQ(rest.final_state.t, whole.final_state.t);
}

TEST(Run, HypothesisEnforcedUnlessSkipped) {
    FlowConfig c;
    c.N = 64;
    c.phi = make_power(-0.5);
    c.init = BodySpec::make_circle(10.0);
    c.max_steps = 2;
    EXPECT_THROW(run(c), HypothesisViolated);
    c.skip_hypothesis_check = true;
    EXPECT_NO_THROW(run(c));
}

TEST(Run, NeitherClassRejected) {
    FlowConfig c;
    c.N = 64;
    c.phi = make_custom("constant", [](double) { return 1.0; });
    EXPECT_THROW(run(c), IndeterminateClass);
}

TEST(Run, InvalidConfig) {
    FlowConfig c;
    c.dt_safety = 0.0;
    EXPECT_THROW(run(c), ConfigError);
    c = FlowConfig{};
    c.N = 17;
    EXPECT_THROW(run(c), InvalidGrid);
}

TEST(Run, CentralSchemeAgreesWithSpectral) {
    FlowConfig c = ellipse_config(256);
    c.gamma_cv_tol = 1e-9;
    c.scheme = Scheme::central;
    const auto r = run(c);
    ASSERT_TRUE(converged(r.reason));
    const double radius = 2 * 1.2 * (5.0 / 6.0) / (1.2 + 5.0 / 6.0);
    for (double x : r.final_state.field.h) EXPECT_NEAR(x, radius, 1e-3);
}
