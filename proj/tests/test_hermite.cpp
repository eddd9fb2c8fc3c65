#include <cmath>

#include <gtest/gtest.h>

#include <sojourn/hermite.hpp>

using namespace sojourn;

TEST(Coefficients, IndicatorClosedForm)
{
    EXPECT_NEAR(coeff_indicator(1.0, 0), 1.0 - gauss_cdf(1.0), 1e-15);
    EXPECT_NEAR(coeff_indicator(1.0, 1), gauss_pdf(1.0), 1e-15);
    EXPECT_NEAR(coeff_indicator(1.0, 3), 0.0, 1e-15);
    EXPECT_NEAR(coeff_indicator(1.5, 3), 0.161896994582364659, 1e-14);
    EXPECT_NEAR(coeff_indicator(0.0, 2), 0.0, 1e-15);
}

TEST(Coefficients, AbsIndicatorClosedForm)
{
    EXPECT_NEAR(coeff_abs_indicator(1.0, 0), 2.0 * (1.0 - gauss_cdf(1.0)), 1e-15);
    EXPECT_EQ(coeff_abs_indicator(1.0, 1), 0.0);
    EXPECT_EQ(coeff_abs_indicator(1.0, 3), 0.0);
    EXPECT_NEAR(coeff_abs_indicator(1.0, 2), 2.0 * gauss_pdf(1.0), 1e-15);
    EXPECT_NEAR(coeff_abs_indicator(1.0, 4), -0.9678828980765734, 1e-14);
    EXPECT_NEAR(coeff_abs_indicator(0.5, 2), 2.0 * 0.176032663382149739, 1e-14);
    EXPECT_THROW(coeff_abs_indicator(-1.0, 2), std::domain_error);
}

TEST(Coefficients, NumericMatchesClosedFormThroughJumpRule)
{
    // coefficients grow like sqrt(q!): compare on that scale
    auto tol = [](int q) { return 1e-14 * std::sqrt(factorial(q)) + 1e-14; };
    auto rule = jump_rule({-1.0, 1.0});
    auto G = [](double x) { return std::abs(x) >= 1.0 ? 1.0 : 0.0; };
    for (int q = 0; q <= 20; ++q) EXPECT_NEAR(coeff_numeric(G, q, rule), coeff_abs_indicator(1.0, q), tol(q)) << q;
    auto I = [](double x) { return x >= 0.7 ? 1.0 : 0.0; };
    auto r2 = jump_rule({0.7});
    for (int q = 0; q <= 20; ++q) EXPECT_NEAR(coeff_numeric(I, q, r2), coeff_indicator(0.7, q), tol(q)) << q;
}

TEST(Coefficients, NumericRejectsShortHermiteRule)
{
    EXPECT_THROW(coeff_numeric([](double x) { return x; }, 1, gauss_hermite_weighted(16)), std::domain_error);
    EXPECT_THROW(coeff_numeric([](double x) { return x; }, 70, gauss_hermite_weighted(64)), std::domain_error);
}

TEST(Functional, HermiteSpecIsSingleChaos)
{
    auto s = FunctionalSpec::hermite(3);
    for (int q = 0; q <= s.depth(); ++q)
        EXPECT_NEAR(s.coeff(q), q == 3 ? 6.0 : 0.0, 1e-13 * std::sqrt(factorial(q)) + 1e-13) << q;
    EXPECT_EQ(hermite_rank(s), 3);
}

TEST(Functional, Ranks)
{
    EXPECT_EQ(hermite_rank(FunctionalSpec::indicator(1.0)), 1);
    EXPECT_EQ(hermite_rank(FunctionalSpec::abs_indicator(1.0)), 2);
    // |Z| >= 0 always holds: no nonconstant chaos
    EXPECT_THROW(hermite_rank(FunctionalSpec::abs_indicator(0.0)), std::domain_error);
    auto even = FunctionalSpec::custom([](double x) { return x * x * x * x; }, "x4");
    EXPECT_EQ(hermite_rank(even), 2);
}

TEST(Functional, ParsevalApproachesVariance)
{
    // Var 1{Z >= u} = p(1-p)
    double p = 1.0 - gauss_cdf(1.0);
    auto s = FunctionalSpec::indicator(1.0, 60);
    double part = s.parseval_partial(60);
    EXPECT_LE(part, p * (1 - p) + 1e-12);
    // the jump makes G_q^2/q! decay like q^{-3/2}: the deficit shrinks like Q^{-1/2}
    EXPECT_NEAR(part, p * (1 - p), 0.1 * p * (1 - p));
    double d15 = p * (1 - p) - s.parseval_partial(15), d60 = p * (1 - p) - part;
    EXPECT_NEAR(d60 / d15, 0.5, 0.1);
    double prev = 0.0;
    for (int Q = 1; Q <= 60; ++Q) {
        double v = s.parseval_partial(Q);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Functional, EvaluationAndDepthBounds)
{
    auto s = FunctionalSpec::abs_indicator(1.0);
    EXPECT_EQ(s(1.5), 1.0);
    EXPECT_EQ(s(-1.5), 1.0);
    EXPECT_EQ(s(0.5), 0.0);
    EXPECT_THROW(FunctionalSpec::indicator(1.0, 0), std::domain_error);
    EXPECT_THROW(FunctionalSpec::indicator(1.0, 65), std::domain_error);
}

// Truncated expansion sum_q G_q/q! H_q reproduces a smooth G.
TEST(Functional, ExpansionReconstructsSmoothFunction)
{
    auto G = [](double x) { return std::exp(0.5 * x); };
    auto s = FunctionalSpec::custom(G, "exp", {}, 30);
    for (double x : {-1.0, 0.0, 0.7, 1.5}) {
        double v = 0.0;
        for (int q = 0; q <= 30; ++q) v += s.coeff(q) / factorial(q) * hermite_poly(q, x);
        EXPECT_NEAR(v, G(x), 1e-9) << x;
    }
}
