#include <cmath>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <sojourn/rosenblatt.hpp>
#include <sojourn/stats.hpp>

using namespace sojourn;

TEST(Fourier, SegmentTransform)
{
    for (double x : {-3.0, -0.5, 1e-6, 0.7, 12.0}) {
        auto r = gauss_legendre(64, 0.0, 2.0);
        double re = r.integrate([x](double s) { return std::cos(x * s); });
        double im = r.integrate([x](double s) { return std::sin(x * s); });
        auto v = detail::segment_ft(x, 2.0);
        EXPECT_NEAR(v.real(), re, 1e-12) << x;
        EXPECT_NEAR(v.imag(), im, 1e-12) << x;
    }
    EXPECT_EQ(detail::sinc(0.0), 1.0);
    EXPECT_NEAR(detail::sinc(1e-5), std::sin(1e-5) / 1e-5, 1e-15);
}

TEST(Fourier, BodyCharacteristicFunction)
{
    auto box = ConvexBody::box({1.0, 2.0});
    auto v = body_char_fn(box, {0.3, -1.1});
    auto w = detail::segment_ft(0.3, 1.0) * detail::segment_ft(-1.1, 2.0);
    EXPECT_NEAR(std::abs(v - w), 0.0, 1e-14);
    auto b3 = ConvexBody::ball(3, 1.5);
    EXPECT_NEAR(body_char_fn(b3, {0.0, 0.0, 0.0}).real(), b3.volume(), 1e-12);
    // d = 3 closed form against the Bessel expression
    double k = 1.3, x = k * 1.5;
    double bes = b3.volume() * gamma_fn(2.5) * std::pow(2.0 / x, 1.5) * boost::math::cyl_bessel_j(1.5, x);
    EXPECT_NEAR(body_char_fn(b3, {1.3, 0.0, 0.0}).real(), bes, 1e-12);
    EXPECT_NEAR(body_char_fn(b3, {0.0, 0.0, 1.3}).real(), bes, 1e-12);
    // disk: radial quadrature of e^{i k x}
    auto b2 = ConvexBody::ball(2, 1.0);
    auto rr = gauss_legendre(64, 0.0, 1.0), th = gauss_legendre(64, 0.0, 2 * pi);
    double ref = 0.0;
    for (std::size_t i = 0; i < rr.size(); ++i)
        for (std::size_t j = 0; j < th.size(); ++j)
            ref += rr.weights[i] * th.weights[j] * rr.nodes[i] * std::cos(2.0 * rr.nodes[i] * std::cos(th.nodes[j]));
    EXPECT_NEAR(body_char_fn(b2, {2.0, 0.0}).real(), ref, 1e-10);
    EXPECT_THROW(body_char_fn(b2, {1.0}), std::domain_error);
}

TEST(Kernel, Symmetries)
{
    RosenblattParams p;
    for (auto [m1, m2, o1, o2] : {std::array{0.4, 1.3, -0.7, 2.0}, std::array{-2.0, 0.1, 0.0, 5.0}}) {
        auto k = rosenblatt_kernel(p, m1, m2, o1, o2);
        auto s = rosenblatt_kernel(p, m2, m1, o2, o1);
        auto c = rosenblatt_kernel(p, -m1, -m2, -o1, -o2);
        EXPECT_NEAR(std::abs(k - s), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(c - std::conj(k)), 0.0, 1e-14);
    }
    EXPECT_THROW(rosenblatt_kernel(p, 0.0, 1.0, 0.0, 0.0), std::domain_error);
}

TEST(Params, Validation)
{
    RosenblattParams p;
    EXPECT_NO_THROW(validate(p));
    p.alpha = 0.6;
    EXPECT_THROW(validate(p), std::domain_error);
    p = {};
    p.body = ConvexBody::ball(2, 1.0);
    EXPECT_THROW(validate(p), std::domain_error);
    p = {};
    p.spatial = SpatialCovariance::constant_one();
    EXPECT_THROW(validate(p), std::domain_error);
    p = {};
    p.grid.n_geometric = p.grid.n_t;
    EXPECT_THROW(validate(p), std::domain_error);
}

TEST(Cumulants, UnitVarianceAndThirdCumulant)
{
    RosenblattParams p;
    auto c = rosenblatt_cumulants(p);
    EXPECT_NEAR(c.kappa2_physical, 1.0, 1e-12);
    EXPECT_NEAR(c.kappa2, 1.0, 1e-4);
    const double T3 = 4.9325660614909578, S3 = 0.40600584970983808;
    DistanceDensity psi(p.body);
    double cK = c_K_constant(2, p.alpha, psi, p.spatial);
    EXPECT_NEAR(c.kappa3, 8.0 * T3 * S3 / std::pow(cK, 1.5), 1e-9);
    EXPECT_LT(c.kappa3_err, 1e-10);
    EXPECT_GT(c.skewness, 0.0);
}

TEST(Cumulants, IndependentOfScaleConventions)
{
    // the normalised law does not depend on the spatial range in a way that breaks unit variance
    for (double lam : {0.5, 3.0}) {
        RosenblattParams p;
        p.spatial = SpatialCovariance::exponential(lam);
        p.body = ConvexBody::interval(2.0);
        p.alpha = 0.2;
        auto c = rosenblatt_cumulants(p);
        EXPECT_NEAR(c.kappa2_physical, 1.0, 1e-12);
        EXPECT_NEAR(c.kappa2, 1.0, 1e-3) << lam;
    }
}

TEST(Discrete, Kappa2ConvergesUnderRefinement)
{
    RosenblattParams p;
    p.grid.n_t = 32;
    p.grid.n_s = 32;
    double a = discrete_kappa2(p);
    p.grid = p.grid.doubled();
    double b = discrete_kappa2(p);
    EXPECT_GT(a, 0.5);
    EXPECT_GT(b, a);
    EXPECT_LT(b, 1.0 + 1e-6);
}

TEST(Sampler, MomentsMatchDiscreteKappa2)
{
    RosenblattParams p;
    RosenblattSampler s(p);
    auto x = s.sample(3000, 2024, 1);
    auto m = moment_report(x);
    double k2 = discrete_kappa2(p);
    EXPECT_NEAR(m.mean, 0.0, 4 * m.se_mean);
    EXPECT_NEAR(m.var, k2, 4 * m.se_var);
    EXPECT_GT(m.skew, 0.0);
}

TEST(Sampler, ThreadIndependent)
{
    RosenblattParams p;
    p.grid.n_t = 24;
    p.grid.n_s = 16;
    p.grid.n_geometric = 8;
    RosenblattSampler s(p);
    EXPECT_EQ(s.sample(12, 5, 1), s.sample(12, 5, 3));
    EXPECT_NEAR(s.scale(), rosenblatt_scale(p), 0.0);
}
