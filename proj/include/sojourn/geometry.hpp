#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "rng.hpp"
#include "specfun.hpp"

namespace sojourn {

enum class BodyKind { interval, box, ball };

struct Descriptors {
    double diameter, volume, surface_area;
};

// Area of the unit sphere S_k in R^{k+1}; S_0 is the two-point set.
inline double sphere_area(int k)
{
    if (k < 0) throw std::domain_error("sphere_area: k < 0");
    double h = 0.5 * (k + 1);
    return 2.0 * std::pow(pi, h) / gamma_fn(h);
}

inline double unit_ball_volume(int d) { return std::pow(pi, 0.5 * d) / gamma_fn(0.5 * d + 1.0); }

class ConvexBody {
public:
    static ConvexBody interval(double L)
    {
        if (!(L > 0.0)) throw std::domain_error("interval: length must be positive");
        ConvexBody b;
        b.kind_ = BodyKind::interval;
        b.d_ = 1;
        b.sides_ = {L};
        return b;
    }
    static ConvexBody box(std::vector<double> sides)
    {
        if (sides.empty()) throw std::domain_error("box: need at least one side");
        for (double s : sides)
            if (!(s > 0.0)) throw std::domain_error("box: sides must be positive");
        ConvexBody b;
        b.kind_ = BodyKind::box;
        b.d_ = static_cast<int>(sides.size());
        b.sides_ = std::move(sides);
        return b;
    }
    static ConvexBody ball(int d, double r)
    {
        if (d < 1) throw std::domain_error("ball: dimension must be >= 1");
        if (!(r > 0.0)) throw std::domain_error("ball: radius must be positive");
        ConvexBody b;
        b.kind_ = BodyKind::ball;
        b.d_ = d;
        b.r_ = r;
        return b;
    }

    BodyKind kind() const { return kind_; }
    int dim() const { return d_; }
    double radius() const { return r_; }
    const std::vector<double>& sides() const { return sides_; }

    Descriptors descriptors() const
    {
        switch (kind_) {
        case BodyKind::interval: return {sides_[0], sides_[0], 0.0};
        case BodyKind::box: {
            double d2 = 0.0, v = 1.0;
            for (double s : sides_) {
                d2 += s * s;
                v *= s;
            }
            double u = 0.0;
            if (d_ >= 2)
                for (double s : sides_) u += 2.0 * v / s;
            return {std::sqrt(d2), v, u};
        }
        case BodyKind::ball: {
            double v = unit_ball_volume(d_) * std::pow(r_, d_);
            double u = d_ >= 2 ? sphere_area(d_ - 1) * std::pow(r_, d_ - 1) : 0.0;
            return {2.0 * r_, v, u};
        }
        }
        return {};
    }

    double diameter() const { return descriptors().diameter; }
    double volume() const { return descriptors().volume; }
    double surface_area() const { return descriptors().surface_area; }

    bool contains(const double* x) const
    {
        switch (kind_) {
        case BodyKind::interval:
        case BodyKind::box:
            for (int j = 0; j < d_; ++j)
                if (x[j] < 0.0 || x[j] > sides_[j]) return false;
            return true;
        case BodyKind::ball: {
            double s = 0.0;
            for (int j = 0; j < d_; ++j) s += x[j] * x[j];
            return s <= r_ * r_;
        }
        }
        return false;
    }

    // axis-aligned bounding box [lo_j, hi_j]
    double lower(int) const { return kind_ == BodyKind::ball ? -r_ : 0.0; }
    double upper(int j) const { return kind_ == BodyKind::ball ? r_ : sides_[j]; }

    std::string describe() const
    {
        switch (kind_) {
        case BodyKind::interval: return "interval(L=" + std::to_string(sides_[0]) + ")";
        case BodyKind::box: return "box(d=" + std::to_string(d_) + ")";
        case BodyKind::ball:
            return "ball(d=" + std::to_string(d_) + ", r=" + std::to_string(r_) + ")";
        }
        return {};
    }

private:
    BodyKind kind_ = BodyKind::interval;
    int d_ = 1;
    std::vector<double> sides_;
    double r_ = 0.0;
};

inline Descriptors body_descriptors(const ConvexBody& b) { return b.descriptors(); }

// Chord-length CDF of the unit ball in R^d.
inline double chord_length_cdf_ball(int d, double v)
{
    if (d < 2) throw std::domain_error("chord_length_cdf_ball: d must be >= 2");
    if (v <= 0.0) return 0.0;
    if (v >= 2.0) return 1.0;
    double s = 1.0 - 0.25 * v * v;
    return 1.0 - std::pow(s, 0.5 * (d - 1));
}

// Pair-distance density of the unit ball via the regularized incomplete beta.
inline double ball_density_beta(int d, double z)
{
    if (z < 0.0 || z > 2.0) throw std::domain_error("ball density: z outside [0, 2]");
    if (d >= 2 && z == 0.0) return 0.0;
    double mu = std::max(0.0, 1.0 - 0.25 * z * z);
    return d * std::pow(z, d - 1) * incomplete_beta(mu, 0.5 * (d + 1), 0.5);
}

// Same density written through the integral of the chord survival function.
inline double ball_density_integral(int d, double z)
{
    if (z < 0.0 || z > 2.0) throw std::domain_error("ball density: z outside [0, 2]");
    // int_0^z (1 - u^2/4)^{(d-1)/2} du with u = 2 sin(t)
    double tmax = std::asin(std::min(1.0, 0.5 * z));
    double J = 0.0;
    if (tmax > 0.0) {
        auto r = gauss_legendre(64, 0.0, tmax);
        J = r.integrate([d](double t) { return 2.0 * std::pow(std::cos(t), d); });
    }
    double c = d * gamma_fn(0.5 * d + 1.0) / (std::sqrt(pi) * gamma_fn(0.5 * (d + 1)));
    return std::pow(z, d - 1) * (d - c * J);
}

// General density from a chord-length CDF of K (d >= 2).
inline double distance_density_from_chord_cdf(const ConvexBody& body,
                                              const std::function<double(double)>& F, double z)
{
    int d = body.dim();
    if (d < 2) throw std::domain_error("distance_density_from_chord_cdf: needs d >= 2");
    auto D = body.descriptors();
    if (z < 0.0 || z > D.diameter * (1 + 1e-12))
        throw std::domain_error("distance_density_from_chord_cdf: z outside [0, D(K)]");
    if (z == 0.0) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double surv = GK::integrate([&](double v) { return 1.0 - F(v); }, 0.0, z, 15, 1e-14);
    double zd = std::pow(z, d - 1);
    double val = zd * sphere_area(d - 1) * D.volume -
                 zd * sphere_area(d - 2) * D.surface_area * surv / (d - 1);
    return val / (D.volume * D.volume);
}

// Histogram estimate of the pair-distance density.
struct DistanceTable {
    std::vector<double> edges;
    std::vector<double> density;
    std::vector<double> stderr_;
    std::uint64_t n_pairs = 0;
    std::uint64_t seed = 0;

    double operator()(double z) const
    {
        if (z < edges.front() || z > edges.back())
            throw std::domain_error("distance table: z outside support");
        double w = edges[1] - edges[0];
        std::size_t k = std::min<std::size_t>(density.size() - 1,
                                              static_cast<std::size_t>((z - edges.front()) / w));
        return density[k];
    }
};

namespace detail {
inline void uniform_point(const ConvexBody& b, Philox& g, double* x)
{
    int d = b.dim();
    if (b.kind() != BodyKind::ball) {
        for (int j = 0; j < d; ++j) x[j] = g.uniform() * b.sides()[j];
        return;
    }
    double r = b.radius();
    for (;;) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            x[j] = (2.0 * g.uniform() - 1.0) * r;
            s += x[j] * x[j];
        }
        if (s <= r * r) return;
    }
}
} // namespace detail

inline DistanceTable distance_density_mc(const ConvexBody& body, std::uint64_t n_pairs, int n_bins,
                                         std::uint64_t seed, unsigned threads = 0)
{
    if (n_pairs < 10000) throw std::domain_error("distance_density_mc: need at least 1e4 pairs");
    if (n_bins < 1) throw std::domain_error("distance_density_mc: need n_bins >= 1");
    const double D = body.diameter();
    const std::uint64_t batch = 1u << 16;
    const std::size_t nb = static_cast<std::size_t>((n_pairs + batch - 1) / batch);
    std::vector<std::vector<std::uint64_t>> counts(nb, std::vector<std::uint64_t>(n_bins, 0));
    parallel_for(nb, threads, [&](std::size_t k) {
        Philox g = make_rng(derive_seed(seed, k));
        std::uint64_t m = std::min<std::uint64_t>(batch, n_pairs - k * batch);
        int d = body.dim();
        std::vector<double> p(d), q(d);
        auto& c = counts[k];
        for (std::uint64_t i = 0; i < m; ++i) {
            detail::uniform_point(body, g, p.data());
            detail::uniform_point(body, g, q.data());
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += (p[j] - q[j]) * (p[j] - q[j]);
            int bin = static_cast<int>(std::sqrt(s) / D * n_bins);
            c[std::min(bin, n_bins - 1)]++;
        }
    });
    DistanceTable t;
    t.n_pairs = n_pairs;
    t.seed = seed;
    double w = D / n_bins;
    t.edges.resize(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i) t.edges[i] = i * w;
    t.density.resize(n_bins);
    t.stderr_.resize(n_bins);
    for (int i = 0; i < n_bins; ++i) {
        std::uint64_t c = 0;
        for (auto& v : counts) c += v[i];
        double p = double(c) / double(n_pairs);
        t.density[i] = p / w;
        t.stderr_[i] = std::sqrt(p * (1 - p) / double(n_pairs)) / w;
    }
    return t;
}

enum class DensityMethod { closed_form, chord_cdf, mc_table };

// psi for a body: closed forms for interval and ball, chord CDF or MC table otherwise.
class DistanceDensity {
public:
    explicit DistanceDensity(ConvexBody b) : body_(std::move(b))
    {
        if (body_.kind() == BodyKind::box && body_.dim() > 1) method_ = DensityMethod::mc_table;
    }
    DistanceDensity(ConvexBody b, std::function<double(double)> chord_cdf)
        : body_(std::move(b)), F_(std::move(chord_cdf)), method_(DensityMethod::chord_cdf)
    {
    }
    DistanceDensity(ConvexBody b, DistanceTable t)
        : body_(std::move(b)), table_(std::make_shared<DistanceTable>(std::move(t))),
          method_(DensityMethod::mc_table)
    {
    }

    const ConvexBody& body() const { return body_; }
    DensityMethod method() const { return method_; }
    const DistanceTable* table() const { return table_.get(); }

    double operator()(double z) const
    {
        double D = body_.diameter();
        if (z < 0.0 || z > D * (1 + 1e-12))
            throw std::domain_error("distance_density: z outside [0, D(K)]");
        z = std::min(z, D);
        if (method_ == DensityMethod::chord_cdf) return distance_density_from_chord_cdf(body_, F_, z);
        if (method_ == DensityMethod::mc_table) {
            if (!table_) throw std::domain_error("distance_density: box needs a chord CDF or an MC table");
            return (*table_)(z);
        }
        switch (body_.kind()) {
        case BodyKind::interval:
        case BodyKind::box: {
            double L = body_.sides()[0];
            return 2.0 / L * (1.0 - z / L);
        }
        case BodyKind::ball: {
            double r = body_.radius();
            return ball_density_beta(body_.dim(), z / r) / r;
        }
        }
        return 0.0;
    }

    // Quadrature for int_0^D psi(z) g(z) dz: graded panels at both ends.
    QuadratureRule weighted_rule(int n_per_panel = 24) const
    {
        double D = body_.diameter();
        std::vector<double> br{0.0};
        if (method_ == DensityMethod::mc_table) {
            br = table_->edges;
        } else {
            for (int k = -10; k <= -2; ++k) br.push_back(D * std::pow(10.0, k));
            for (double f : {0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.95, 0.99, 0.999, 1.0})
                br.push_back(D * f);
        }
        auto r = composite_legendre(br, n_per_panel);
        for (std::size_t i = 0; i < r.size(); ++i) r.weights[i] *= (*this)(r.nodes[i]);
        return r;
    }

private:
    ConvexBody body_;
    std::function<double(double)> F_;
    std::shared_ptr<DistanceTable> table_;
    DensityMethod method_ = DensityMethod::closed_form;
};

inline double distance_density(const ConvexBody& body, double z) { return DistanceDensity(body)(z); }

} // namespace sojourn
