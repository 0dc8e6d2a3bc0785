#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "oaflow/orlicz.hpp"

using namespace oaflow;
using std::numbers::pi;

namespace {

// Independent value of int_0^{2pi} |cos t|^{-1/2} dt, by Boost's tanh-sinh over the
// four quarter periods; the closed form is 2 B(1/4, 1/2).
double abs_cos_inverse_sqrt_integral() {
    boost::math::quadrature::tanh_sinh<double> ts;
    // cos(pi/2 - y) = sin(y) keeps the singularity at the origin.
    auto g = [](double y) { return 1.0 / std::sqrt(std::sin(y)); };
    return 4.0 * ts.integrate(g, 0.0, pi / 2, 1e-14);
}

}  // namespace

TEST(MakePower, ClosedForms) {
    const auto half = classify(make_power(-0.5));
    EXPECT_EQ(half.tag, CaseTag::case_i);
    EXPECT_DOUBLE_EQ(eval_Phi(half, 4.0), 4.0);
    EXPECT_DOUBLE_EQ(eval_Phi(half, 9.0), 6.0);
    const auto two = classify(make_power(2.0));
    EXPECT_EQ(two.tag, CaseTag::case_ii);
    EXPECT_DOUBLE_EQ(eval_Phi(two, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(eval_Phi(two, 2.0), 0.125);
    EXPECT_GT(eval_Phi(two, 1.0), eval_Phi(two, 1.5));
}

TEST(MakePower, ZeroExponentIsDegenerate) { EXPECT_THROW(make_power(0.0), DegenerateFamily); }

TEST(MakePower, LinearIsIncreasing) {
    const auto phi = make_power(1.0);
    for (double s = 0.01; s < 100; s *= 1.7) EXPECT_GT(phi(s * 1.01), phi(s));
}

TEST(Classify, PowerSigns) {
    for (double p : {0.25, 0.5, 1.0, 2.0}) {
        EXPECT_EQ(classify(make_power(p)).tag, CaseTag::case_ii) << p;
        EXPECT_EQ(classify(make_power(-p)).tag, CaseTag::case_i) << -p;
        EXPECT_EQ(classify(make_power(p), true).tag, CaseTag::case_ii) << p;
        EXPECT_EQ(classify(make_power(-p), true).tag, CaseTag::case_i) << -p;
    }
}

TEST(Classify, ConstantIsNeither) {
    const auto c = classify(make_custom("constant", [](double) { return 1.0; }));
    EXPECT_EQ(c.tag, CaseTag::neither);
    EXPECT_THROW(eval_Phi(c, 1.0), Error);
}

TEST(Classify, PowerLog) {
    EXPECT_EQ(classify(make_power_log(1.0)).tag, CaseTag::case_ii);
    EXPECT_EQ(classify(make_power_log(-0.5)).tag, CaseTag::case_i);
    EXPECT_EQ(classify(make_power_log(1.0), true).tag, CaseTag::case_ii);
    EXPECT_EQ(classify(make_power_log(-0.5), true).tag, CaseTag::case_i);
    EXPECT_EQ(classify(make_power_log(0.0)).tag, CaseTag::neither);
}

TEST(Classify, RejectsNonpositivePhi) {
    EXPECT_THROW(classify(make_custom("neg", [](double s) { return s - 1.0; })), IndeterminateClass);
}

TEST(EvalPhi, QuadraturePathMatchesClosedForm) {
    for (double p : {-0.5, -1.0, 0.5, 2.0}) {
        const auto q = classify(make_power(p), true);
        const auto c = classify(make_power(p));
        ASSERT_FALSE(q.closed_form);
        ASSERT_TRUE(c.closed_form);
        for (double s : {0.1, 1.0, 10.0}) EXPECT_NEAR(eval_Phi(q, s), eval_Phi(c, s), 1e-10) << p << " " << s;
    }
}

TEST(EvalPhi, CustomFamilyAgainstRiemannSum) {
    // phi(s) = s^2 (1 + s): tail case. Oracle: midpoint sum over u = 1/t on
    // (0, 1/s] with 1e6 nodes; the integrand u^2/(1+u) is smooth there.
    const auto c = classify(make_custom("s^2(1+s)", [](double s) { return s * s * (1.0 + s); }));
    ASSERT_EQ(c.tag, CaseTag::case_ii);
    for (double s : {0.5, 1.0, 3.0}) {
        const int n = 1000000;
        const double top = 1.0 / s, du = top / n;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = (i + 0.5) * du;
            sum += u * u / (1.0 + u);  // dt/(t phi(t)) with t = 1/u
        }
        EXPECT_NEAR(eval_Phi(c, s), sum * du, 1e-8) << s;
    }
    EXPECT_NEAR(eval_Phi(c, 1.0), 0.19314718055994531, 1e-10);  // ln 2 - 1/2
}

TEST(EvalPhi, DerivativeIdentity) {
    // s phi(s) Phi'(s) = +1 (case i) or -1 (case ii)
    for (const auto& phi : {make_power(-0.5), make_power(2.0), make_power_log(1.0), make_power_log(-0.5)}) {
        const auto c = classify(phi);
        const double sign = c.tag == CaseTag::case_i ? 1.0 : -1.0;
        for (double s = 0.05; s < 50; s *= 3.1) {
            const double h = 1e-5 * s;
            const double dPhi = (eval_Phi(c, s + h) - eval_Phi(c, s - h)) / (2 * h);
            EXPECT_NEAR(dPhi * s * phi(s), sign, 1e-6) << phi.name << " s=" << s;
        }
    }
}

TEST(OrliczFunction, DerivativeMatchesFiniteDifference) {
    for (const auto& phi : {make_power(-0.5), make_power(2.0), make_power_log(1.0)}) {
        for (double s = 1e-3; s < 1e3; s *= 4.3) {
            const double h = 1e-6 * s;
            const double fd = (phi(s + h) - phi(s - h)) / (2 * h);
            EXPECT_NEAR(phi.derivative(s), fd, 1e-4 * std::abs(fd)) << phi.name << " s=" << s;
        }
    }
    const auto custom = make_custom("s^3", [](double s) { return s * s * s; });
    EXPECT_NEAR(custom.derivative(2.0), 12.0, 1e-6);
}

TEST(FunctionalP, Constants) {
    const auto g = make_grid(64);
    const auto f = constant_density(g, 1.0);
    EXPECT_NEAR(functional_P(circle(g, 1.0), f, classify(make_power(2.0))), pi, 1e-13);
    EXPECT_NEAR(functional_P(circle(g, 2.0), f, classify(make_power(-0.5))), 2 * pi * std::sqrt(2.0), 1e-12);
}

TEST(FunctionalP, EllipseAgainstRiemannOracle) {
    const double a = 1.2, b = 5.0 / 6.0;
    const auto g = make_grid(256);
    const auto c = classify(make_power(2.0));
    // Phi(1/h) = h^2 / 2; midpoint sum with 1e6 nodes.
    const int n = 1000000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = 2 * pi * (i + 0.5) / n;
        sum += 0.5 * (a * a * std::cos(t) * std::cos(t) + b * b * std::sin(t) * std::sin(t));
    }
    const double oracle = sum * 2 * pi / n;
    EXPECT_NEAR(functional_P(ellipse(g, a, b), constant_density(g, 1.0), c), oracle, 1e-8);
    // and forced through the quadrature path
    EXPECT_NEAR(functional_P(ellipse(g, a, b), constant_density(g, 1.0), classify(make_power(2.0), true)), oracle,
                1e-8);
}

TEST(Hypothesis, CaseTwoAutomatic) {
    const auto g = make_grid(64);
    const auto rep = hypothesis_check(make_density(g, {1.0, 0.3}), classify(make_power(2.0)), ellipse(g, 1.2, 0.8));
    EXPECT_TRUE(rep.satisfied);
    EXPECT_FALSE(rep.C_hat.has_value());
}

TEST(Hypothesis, ChatMatchesIndependentQuadrature) {
    const auto g = make_grid(64);
    const auto c = classify(make_power(-0.5));
    const double oracle = 2.0 * abs_cos_inverse_sqrt_integral();  // Phi(1/|cos|) = 2 |cos|^{-1/2}
    EXPECT_NEAR(oracle, 4.0 * std::beta(0.25, 0.5), 1e-10);
    const auto rep = hypothesis_check(constant_density(g, 1.0), c, circle(g, 1.0));
    ASSERT_TRUE(rep.C_hat.has_value());
    EXPECT_NEAR(*rep.C_hat, oracle, 1e-6);
    EXPECT_NEAR(rep.P0, 4 * pi, 1e-12);
    // 4 pi < C_hat: the unit circle is not admissible; the shrink factor is
    // (4 pi / C_hat)^2 from P(lambda) = 4 pi lambda^{-1/2}.
    EXPECT_FALSE(rep.satisfied);
    ASSERT_TRUE(rep.suggested_scale.has_value());
    const double lambda_star = std::pow(4 * pi / oracle, 2);
    EXPECT_LE(*rep.suggested_scale, lambda_star);
    EXPECT_NEAR(*rep.suggested_scale, lambda_star, 1e-9);
}

TEST(Hypothesis, ChatDirectionIndependentForConstantDensity) {
    const auto c = classify(make_power(-0.5));
    const auto f = constant_density(make_grid(16), 1.0);
    const double ref = hypothesis_integral(f, c, 0.0);
    for (double theta : {0.3, 1.1, 2.0}) EXPECT_NEAR(hypothesis_integral(f, c, theta), ref, 1e-9);
}

TEST(Hypothesis, NonconstantDensityAgainstBoost) {
    const auto c = classify(make_power(-0.25));
    const auto f = make_density(make_grid(16), {1.0, 0.3});
    const double theta = 0.4;
    boost::math::quadrature::tanh_sinh<double> ts;
    // Phi(1/|cos(x - theta)|) = 4 |cos(x - theta)|^{-1/4}; split at the zeros of cos.
    auto piece = [&](double lo, double hi) {
        return ts.integrate([&](double x) { return f(x) * 4.0 * std::pow(std::abs(std::cos(x - theta)), -0.25); }, lo,
                            hi, 1e-12);
    };
    const double z = theta + pi / 2;
    const double oracle = piece(z - pi, z) + piece(z, z + pi);
    EXPECT_NEAR(hypothesis_integral(f, c, theta), oracle, 1e-7);
}

TEST(Hypothesis, DivergentChatIsViolation) {
    // p = -1: Phi(s) = s, so Phi(1/|cos|) is not integrable.
    const auto g = make_grid(32);
    EXPECT_THROW(hypothesis_check(constant_density(g, 1.0), classify(make_power(-1.0)), circle(g, 1.0)),
                 HypothesisViolated);
}

TEST(Hypothesis, MonotoneInScale) {
    const auto g = make_grid(64);
    const auto c = classify(make_power(-0.5));
    const auto f = constant_density(g, 1.0);
    const auto body = ellipse(g, 1.2, 5.0 / 6.0);
    bool seen_satisfied = false;
    for (double lambda = 1.0; lambda > 0.05; lambda *= 0.9) {
        const bool sat = hypothesis_check(f, c, scaled(body, lambda)).satisfied;
        if (seen_satisfied) {
            EXPECT_TRUE(sat) << lambda;
        }
        seen_satisfied = seen_satisfied || sat;
    }
    EXPECT_TRUE(seen_satisfied);
}
