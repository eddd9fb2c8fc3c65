#include <cmath>

#include <gtest/gtest.h>

#include <sojourn/sojourn.hpp>
#include <sojourn/variance.hpp>

using namespace sojourn;

namespace {
CovarianceModel sep(double a) { return CovarianceModel::separable(SpatialCovariance::exponential(1.0), a); }

FieldSample constant_field(std::shared_ptr<const GridSpec> g, double v)
{
    FieldSample f;
    f.grid = g;
    f.values = Eigen::MatrixXd::Constant(g->n_s(), g->n_t, v);
    return f;
}
} // namespace

TEST(Functionals, ConstantField)
{
    auto g = std::make_shared<const GridSpec>(build_grid(ConvexBody::interval(1.0), 0.25, 0.5, 8));
    auto f = constant_field(g, 1.2);
    EXPECT_NEAR(minkowski1(f, 1.0), 4.0, 1e-15);
    EXPECT_NEAR(minkowski1(f, 1.5), 0.0, 1e-15);
    EXPECT_NEAR(minkowski2(constant_field(g, -1.2), 1.0), 4.0, 1e-15);
    EXPECT_NEAR(eta_n(f, 2), 4.0 * (1.44 - 1.0), 1e-14);
    EXPECT_THROW(eta_n(f, 0), std::domain_error);
    EXPECT_THROW(minkowski2(f, -0.5), std::domain_error);
}

TEST(Functionals, ReflectionSymmetry)
{
    auto g = build_grid(ConvexBody::interval(1.0), 0.125, 1.0, 64);
    auto f = simulate_cholesky(sep(0.4), g, derive_seed(1, 1));
    auto r = f;
    r.values = -f.values;
    EXPECT_DOUBLE_EQ(minkowski2(f, 0.8), minkowski2(r, 0.8));
    EXPECT_DOUBLE_EQ(eta_n(f, 1), -eta_n(r, 1));
    EXPECT_DOUBLE_EQ(eta_n(f, 2), eta_n(r, 2));
    EXPECT_DOUBLE_EQ(eta_n(f, 3), -eta_n(r, 3));
    // {Z >= u} and {-Z >= u} split {|Z| >= u} for u > 0
    EXPECT_NEAR(minkowski1(f, 0.8) + minkowski1(r, 0.8), minkowski2(f, 0.8), 1e-12);
}

TEST(GridSigma2, MatchesBruteForce)
{
    auto m = sep(0.3);
    auto g = build_grid(ConvexBody::ball(2, 1.0), 0.5, 0.5, 12);
    auto s2 = grid_sigma2(m, g, 3);
    for (int n = 1; n <= 3; ++n) {
        double b = 0.0;
        for (std::size_t i = 0; i < g.n_s(); ++i)
            for (std::size_t j = 0; j < g.n_s(); ++j)
                for (int t = 0; t < g.n_t; ++t)
                    for (int s = 0; s < g.n_t; ++s)
                        b += g.weights[i] * g.weights[j] * g.dt * g.dt *
                             std::pow(m(g.dist(i, j), std::abs(t - s) * g.dt), n);
        EXPECT_NEAR(s2[n], factorial(n) * b, 1e-11 * b) << n;
    }
}

TEST(GridSigma2, MatchesEnsembleVariance)
{
    auto m = sep(0.4);
    auto g = std::make_shared<const GridSpec>(build_grid(ConvexBody::interval(1.0), 0.25, 1.0, 64));
    auto s2 = grid_sigma2(m, *g, 2);
    CholeskySampler cs(m, g);
    const int R = 4000;
    double v1 = 0, v2 = 0;
    for (int r = 0; r < R; ++r) {
        auto f = cs.draw(derive_seed(77, r));
        double e1 = eta_n(f, 1), e2 = eta_n(f, 2);
        v1 += e1 * e1;
        v2 += e2 * e2;
    }
    // relative SE of a second moment is about sqrt(2/R) (more for the chaos-2 term)
    EXPECT_NEAR(v1 / R / s2[1], 1.0, 4 * std::sqrt(2.0 / R));
    EXPECT_NEAR(v2 / R / s2[2], 1.0, 6 * std::sqrt(2.0 / R));
}

TEST(GridSigma2, ConvergesToQuadrature)
{
    auto m = sep(0.4);
    DistanceDensity psi(ConvexBody::interval(1.0));
    double q = sigma2_nK(m, psi, 1, 64.0);
    auto g = build_grid(ConvexBody::interval(1.0), 1.0 / 64, 1.0 / 16, 1024);
    EXPECT_NEAR(grid_sigma2(m, g, 1)[1] / q, 1.0, 0.01);
}

TEST(ReductionGap, PureChaosHasNoGap)
{
    auto m = sep(0.2);
    auto g = build_grid(ConvexBody::interval(1.0), 0.25, 1.0, 64);
    auto s2 = grid_sigma2(m, g, 64);
    EXPECT_NEAR(grid_reduction_gap(FunctionalSpec::hermite(2), s2), 0.0, 1e-15);
    double gap = grid_reduction_gap(FunctionalSpec::abs_indicator(1.0), s2);
    EXPECT_GT(gap, 0.0);
    auto g2 = build_grid(ConvexBody::interval(1.0), 0.25, 1.0, 1024);
    EXPECT_LT(grid_reduction_gap(FunctionalSpec::abs_indicator(1.0), grid_sigma2(m, g2, 64)), gap);
}

TEST(Stats, NormalisationIdentities)
{
    auto m = sep(0.4);
    auto gp = std::make_shared<const GridSpec>(build_grid(ConvexBody::interval(2.0), 0.25, 1.0, 32));
    auto s2 = grid_sigma2(m, *gp, 2);
    SigmaSet sig{std::sqrt(s2[1]), std::sqrt(s2[2])};
    CholeskySampler cs(m, gp);
    auto spec = FunctionalSpec::indicator(0.7);
    for (int r = 0; r < 5; ++r) {
        auto f = cs.draw(derive_seed(5, r));
        auto st = compute_stats(f, 0.7, sig, &spec);
        double K = gp->weight_sum();
        EXPECT_NEAR(st.X1_pl, K * st.X1_tc, 1e-12);
        EXPECT_NEAR(st.X1_tc, stat_X1(f, 0.7, sig.s1), 1e-12);
        EXPECT_NEAR(st.X1_pl, stat_X1(f, 0.7, sig.s1, Normalization::paper_literal), 1e-12);
        auto xy = stat_X2_Y2(f, 0.7, sig.s2);
        EXPECT_NEAR(st.X2_tc, xy.X2, 1e-12);
        EXPECT_NEAR(st.Y2, eta_n(f, 2) / sig.s2, 1e-12);
        EXPECT_NEAR(xy.Y2, st.Y2, 1e-12);
        // X2 normalisations differ by the factor phi(u) / (2u)
        EXPECT_NEAR(st.X2_pl * gauss_pdf(0.7) / (2 * 0.7), st.X2_tc, 1e-12);
        EXPECT_NEAR(st.M1, minkowski1(f, 0.7), 1e-12);
        for (int n = 1; n <= 4; ++n) EXPECT_NEAR(st.eta[n], eta_n(f, n), 1e-10);
        // indicator: the general statistic is X1, its rank-1 term eta_1/sigma_1
        auto y = stat_Y(f, spec, 1, sig.s1);
        EXPECT_NEAR(y.Y, st.X1_tc, 1e-12);
        EXPECT_NEAR(y.Ym, st.eta[1] / sig.s1, 1e-12);
        EXPECT_NEAR(st.A, st.M1, 1e-12);
    }
}

TEST(Stats, Errors)
{
    auto g = std::make_shared<const GridSpec>(build_grid(ConvexBody::interval(1.0), 0.25, 1.0, 8));
    auto f = constant_field(g, 0.0);
    EXPECT_THROW(stat_Y(f, FunctionalSpec::indicator(1.0), 2, 1.0), std::domain_error);
    EXPECT_THROW(stat_Y(f, FunctionalSpec::indicator(1.0), 1, 0.0), std::domain_error);
    EXPECT_THROW(stat_X2_Y2(f, 0.0, 1.0), std::domain_error);
}
