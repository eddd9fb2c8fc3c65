#include <cmath>

#include <gtest/gtest.h>

#include <sojourn/rng.hpp>
#include <sojourn/stats.hpp>

using namespace sojourn;

namespace {
std::vector<double> normals(std::size_t n, std::uint64_t seed, double shift = 0.0)
{
    Philox g(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = g.normal() + shift;
    return x;
}
} // namespace

TEST(Kolmogorov, CriticalValues)
{
    EXPECT_NEAR(kolmogorov_sf(ks_lambda_05), 0.05, 2e-4);
    EXPECT_NEAR(kolmogorov_sf(ks_lambda_01), 0.01, 2e-4);
    EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
    EXPECT_LT(kolmogorov_sf(3.0), 1e-7);
}

TEST(Ks, NullAndPower)
{
    auto x = normals(2000, 1);
    auto r = ks_test(x);
    EXPECT_TRUE(r.passes());
    EXPECT_GT(r.p_value, 0.01);
    auto y = normals(2000, 2, 0.3);
    auto s = ks_test(y);
    EXPECT_FALSE(s.passes());
    EXPECT_LT(s.p_value, 1e-6);
    EXPECT_THROW(ks_test({1.0, 2.0}), std::domain_error);
}

TEST(Ks, TwoSample)
{
    EXPECT_TRUE(ks_test_two_sample(normals(1500, 3), normals(1000, 4)).passes());
    EXPECT_FALSE(ks_test_two_sample(normals(1500, 3), normals(1000, 4, 0.4)).passes());
    // ties are stepped over together
    std::vector<double> a(50, 1.0), b(50, 1.0);
    EXPECT_EQ(ks_test_two_sample(a, b).statistic, 0.0);
}

TEST(Moments, NormalSample)
{
    auto x = normals(20000, 5);
    auto m = moment_report(x);
    EXPECT_NEAR(m.mean, 0.0, 4 * m.se_mean);
    EXPECT_NEAR(m.var, 1.0, 4 * m.se_var);
    EXPECT_NEAR(m.skew, 0.0, 4 * m.se_skew);
    EXPECT_NEAR(m.kurt, 0.0, 4 * m.se_kurt);
    // the jackknife standard error of a mean is the textbook one
    EXPECT_NEAR(m.se_mean, std::sqrt(m.var / x.size()), 1e-12);
}

TEST(Moments, SkewedSample)
{
    Philox g(6);
    std::vector<double> x(20000);
    for (auto& v : x) v = -std::log(g.uniform());
    auto m = moment_report(x);
    EXPECT_NEAR(m.skew, 2.0, 4 * m.se_skew);
    EXPECT_NEAR(m.kurt, 6.0, 4 * m.se_kurt);
}

TEST(Moments, ShiftInvariance)
{
    auto x = normals(500, 8);
    auto y = x;
    for (auto& v : y) v += 1e6;
    auto a = moment_report(x), b = moment_report(y);
    EXPECT_NEAR(b.mean - 1e6, a.mean, 1e-8);
    EXPECT_NEAR(b.var, a.var, 1e-8);
    EXPECT_NEAR(b.skew, a.skew, 1e-6);
}

TEST(Moments, Degenerate)
{
    std::vector<double> c(100, 3.5);
    auto m = moment_report(c);
    EXPECT_TRUE(m.degenerate);
    EXPECT_EQ(m.mean, 3.5);
    EXPECT_EQ(m.var, 0.0);
    EXPECT_TRUE(std::isnan(m.skew));
    EXPECT_THROW(moment_report({1.0, 2.0}), std::domain_error);
}

TEST(Correlation, Basic)
{
    auto x = normals(100, 9);
    std::vector<double> y(x.size()), z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = 3 * x[i] - 1;
        z[i] = -x[i];
    }
    EXPECT_NEAR(correlation(x, y), 1.0, 1e-14);
    EXPECT_NEAR(correlation(x, z), -1.0, 1e-14);
    EXPECT_THROW(correlation(x, {1.0}), std::domain_error);
}
