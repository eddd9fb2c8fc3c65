#include <cmath>

#include <gtest/gtest.h>

#include <sojourn/geometry.hpp>

using namespace sojourn;

namespace {
// pair-distance densities of the unit disk and unit 3-ball in elementary form
double disk_ref(double z) { return 4 * z / pi * (std::acos(z / 2) - z / 2 * std::sqrt(1 - z * z / 4)); }
double ball3_ref(double z) { return 3 * z * z / 16 * (2 - z) * (2 - z) * (z + 4); }
} // namespace

TEST(Descriptors, Balls)
{
    auto d2 = ConvexBody::ball(2, 1.0).descriptors();
    EXPECT_NEAR(d2.diameter, 2.0, 1e-15);
    EXPECT_NEAR(d2.volume, pi, 1e-14);
    EXPECT_NEAR(d2.surface_area, 2 * pi, 1e-14);
    auto d3 = ConvexBody::ball(3, 1.0).descriptors();
    EXPECT_NEAR(d3.volume, 4 * pi / 3, 1e-14);
    EXPECT_NEAR(d3.surface_area, 4 * pi, 1e-13);
    auto s = ConvexBody::ball(3, 2.0).descriptors();
    EXPECT_NEAR(s.diameter, 4.0, 1e-15);
    EXPECT_NEAR(s.volume, 8 * 4 * pi / 3, 1e-12);
    EXPECT_NEAR(s.surface_area, 4 * 4 * pi, 1e-12);
}

TEST(Descriptors, IntervalAndBox)
{
    auto i = ConvexBody::interval(2.0).descriptors();
    EXPECT_EQ(i.diameter, 2.0);
    EXPECT_EQ(i.volume, 2.0);
    EXPECT_EQ(i.surface_area, 0.0);
    auto b = ConvexBody::box({3.0, 4.0}).descriptors();
    EXPECT_NEAR(b.diameter, 5.0, 1e-15);
    EXPECT_NEAR(b.volume, 12.0, 1e-15);
    EXPECT_NEAR(b.surface_area, 14.0, 1e-15);
    EXPECT_THROW(ConvexBody::interval(0.0), std::domain_error);
    EXPECT_THROW(ConvexBody::ball(2, -1.0), std::domain_error);
}

TEST(ChordCdf, Branches)
{
    EXPECT_EQ(chord_length_cdf_ball(3, 2.0), 1.0);
    EXPECT_EQ(chord_length_cdf_ball(3, 5.0), 1.0);
    EXPECT_EQ(chord_length_cdf_ball(2, 0.0), 0.0);
    EXPECT_NEAR(chord_length_cdf_ball(3, std::sqrt(2.0)), 0.5, 1e-15);
}

TEST(Density, Interval)
{
    auto b = ConvexBody::interval(2.0);
    EXPECT_NEAR(distance_density(b, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(distance_density(b, 0.0), 1.0, 1e-15);
    EXPECT_THROW(distance_density(b, 2.5), std::domain_error);
    EXPECT_THROW(distance_density(b, -0.1), std::domain_error);
}

TEST(Density, BallAgainstElementaryForms)
{
    for (double z = 0.0; z <= 2.0; z += 0.01) {
        EXPECT_NEAR(distance_density(ConvexBody::ball(2, 1.0), z), disk_ref(z), 1e-12) << z;
        EXPECT_NEAR(distance_density(ConvexBody::ball(3, 1.0), z), ball3_ref(z), 1e-12) << z;
    }
    EXPECT_NEAR(ball_density_beta(3, 1.0), 0.9375, 1e-14);
    EXPECT_NEAR(ball_density_beta(2, 1.0), 0.78200443791154128, 1e-13);
    EXPECT_EQ(distance_density(ConvexBody::ball(2, 1.0), 0.0), 0.0);
}

TEST(Density, IntegralFormMatchesBetaForm)
{
    for (int d : {2, 3, 4}) {
        double sup = 0.0;
        for (int i = 0; i < 1000; ++i) {
            double z = 2.0 * (i + 0.5) / 1000;
            sup = std::max(sup, std::abs(ball_density_beta(d, z) - ball_density_integral(d, z)));
        }
        EXPECT_LE(sup, 1e-8) << d;
    }
}

TEST(Density, ChordCdfRoute)
{
    for (int d : {2, 3, 4}) {
        auto b = ConvexBody::ball(d, 1.0);
        auto F = [d](double v) { return chord_length_cdf_ball(d, v); };
        for (double z : {0.1, 0.5, 1.0, 1.5, 1.9})
            EXPECT_NEAR(distance_density_from_chord_cdf(b, F, z), ball_density_beta(d, z), 1e-8) << d << " " << z;
        EXPECT_NEAR(distance_density_from_chord_cdf(b, F, 0.0), 0.0, 1e-15);
    }
    auto b3 = ConvexBody::ball(3, 1.0);
    EXPECT_NEAR(distance_density_from_chord_cdf(b3, [](double v) { return chord_length_cdf_ball(3, v); }, 2.0), 0.0,
                1e-8);
    EXPECT_THROW(distance_density_from_chord_cdf(ConvexBody::interval(1.0), [](double) { return 0.0; }, 0.5),
                 std::domain_error);
}

TEST(Density, RadiusScaling)
{
    for (double z = 0.05; z < 3.0; z += 0.1)
        EXPECT_NEAR(distance_density(ConvexBody::ball(3, 1.5), z), ball3_ref(z / 1.5) / 1.5, 1e-12);
}

TEST(Density, ClosedFormsIntegrateToOne)
{
    for (const auto& b : {ConvexBody::interval(2.0), ConvexBody::ball(2, 1.0), ConvexBody::ball(3, 0.7),
                          ConvexBody::ball(4, 2.0), ConvexBody::ball(5, 1.0)}) {
        DistanceDensity psi(b);
        EXPECT_NEAR(psi.weighted_rule(32).integrate([](double) { return 1.0; }), 1.0, 1e-6) << b.describe();
        auto r = gauss_legendre(256, 0.0, b.diameter());
        EXPECT_NEAR(r.integrate(psi), 1.0, 1e-6) << b.describe();
    }
}

TEST(Density, SphereBound)
{
    for (int d : {2, 3, 4}) {
        auto b = ConvexBody::ball(d, 1.0);
        for (double z = 0.01; z <= 2.0; z += 0.01)
            EXPECT_LE(distance_density(b, z), std::pow(z, d - 1) * sphere_area(d - 1) / b.volume() * (1 + 1e-12));
    }
}

TEST(MonteCarlo, MatchesClosedForms)
{
    for (const auto& b : {ConvexBody::interval(2.0), ConvexBody::ball(2, 1.0), ConvexBody::ball(3, 1.0)}) {
        auto t = distance_density_mc(b, 1000000, 50, 99, 1);
        DistanceDensity psi(b);
        double mass = 0.0, err = 0.0;
        for (int i = 0; i < 50; ++i) {
            double a = t.edges[i], c = t.edges[i + 1];
            mass += t.density[i] * (c - a);
            double mean = gauss_legendre(32, a, c).integrate(psi) / (c - a);
            err = std::max(err, std::abs(mean - t.density[i]));
        }
        EXPECT_NEAR(mass, 1.0, 1e-12);
        EXPECT_LT(err, 0.02) << b.describe();
    }
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts)
{
    auto b = ConvexBody::ball(2, 1.0);
    auto a = distance_density_mc(b, 300000, 20, 5, 1);
    auto c = distance_density_mc(b, 300000, 20, 5, 3);
    EXPECT_EQ(a.density, c.density);
    EXPECT_THROW(distance_density_mc(b, 100, 20, 5), std::domain_error);
}

TEST(MonteCarlo, BoxTableIntegratesToOne)
{
    auto b = ConvexBody::box({1.0, 2.0});
    DistanceDensity psi(b, distance_density_mc(b, 200000, 40, 3, 1));
    EXPECT_EQ(psi.method(), DensityMethod::mc_table);
    EXPECT_NEAR(psi.weighted_rule(8).integrate([](double) { return 1.0; }), 1.0, 1e-10);
    DistanceDensity bare(b);
    EXPECT_THROW(bare(0.5), std::domain_error);
}

TEST(Body, Containment)
{
    auto b = ConvexBody::ball(2, 1.0);
    double in[2] = {0.5, 0.5}, out[2] = {0.8, 0.8};
    EXPECT_TRUE(b.contains(in));
    EXPECT_FALSE(b.contains(out));
}
