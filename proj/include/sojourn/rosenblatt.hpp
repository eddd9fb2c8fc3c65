#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>

#include "covariance.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "specfun.hpp"
#include "variance.hpp"

namespace sojourn {

using cplx = std::complex<double>;

namespace detail {
inline double sinc(double x)
{
    if (std::abs(x) < 1e-4) {
        double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}
// int_0^L exp(i x s) ds
inline cplx segment_ft(double x, double L)
{
    return L * std::polar(1.0, 0.5 * x * L) * sinc(0.5 * x * L);
}
} // namespace detail

inline cplx body_char_fn(const ConvexBody& body, const std::vector<double>& omega)
{
    if (static_cast<int>(omega.size()) != body.dim())
        throw std::domain_error("body_char_fn: omega dimension mismatch");
    if (body.kind() != BodyKind::ball) {
        cplx r = 1.0;
        for (int j = 0; j < body.dim(); ++j) r *= detail::segment_ft(omega[j], body.sides()[j]);
        return r;
    }
    double k = 0.0;
    for (double w : omega) k += w * w;
    k = std::sqrt(k);
    double R = body.radius(), V = body.volume();
    double x = R * k;
    if (x < 1e-8) return V;
    int d = body.dim();
    if (d == 1) return 2.0 * std::sin(x) / k;
    if (d == 3) return 3.0 * V * (std::sin(x) - x * std::cos(x)) / (x * x * x);
    double h = 0.5 * d;
    return V * gamma_fn(h + 1.0) * std::pow(2.0 / x, h) * boost::math::cyl_bessel_j(h, x);
}

struct RosenblattGrid {
    int n_t = 64;        // positive temporal cells
    int n_s = 64;        // positive spatial cells
    int n_geometric = 12;
    double mu0 = 0.01;   // first temporal edge
    double width = 2.0;  // largest temporal cell width
    double dw = 0.25;    // spatial cell width

    RosenblattGrid doubled() const
    {
        RosenblattGrid g = *this;
        g.n_t *= 2;
        g.n_s *= 2;
        return g;
    }
};

struct RosenblattParams {
    double alpha = 0.3;
    SpatialCovariance spatial = SpatialCovariance::exponential(1.0);
    ConvexBody body = ConvexBody::interval(1.0);
    RosenblattGrid grid;
};

inline void validate(const RosenblattParams& p)
{
    if (!(p.alpha > 0.0 && p.alpha < 0.5)) throw std::domain_error("rosenblatt: alpha must lie in (0, 1/2)");
    if (p.body.dim() != 1 || p.body.kind() == BodyKind::ball)
        throw std::domain_error("rosenblatt: only d = 1 interval bodies are supported");
    if (p.spatial.kind == SpatialKind::constant_one)
        throw std::domain_error("rosenblatt: spatial covariance needs a spectral density");
    const auto& g = p.grid;
    if (g.n_t < 4 || g.n_s < 2 || g.n_geometric < 1 || g.n_geometric >= g.n_t || !(g.mu0 > 0) ||
        !(g.width > g.mu0) || !(g.dw > 0))
        throw std::domain_error("rosenblatt: invalid frequency grid");
}

// c_T(alpha) / sqrt(c_K(2, alpha))
inline double rosenblatt_scale(const RosenblattParams& p)
{
    DistanceDensity psi(p.body);
    return tauberian_constant(p.alpha) / std::sqrt(c_K_constant(2, p.alpha, psi, p.spatial));
}

inline cplx rosenblatt_kernel(const RosenblattParams& p, double mu1, double mu2, double om1, double om2)
{
    if (mu1 == 0.0 || mu2 == 0.0) throw std::domain_error("rosenblatt_kernel: zero temporal frequency");
    double L = p.body.sides()[0];
    cplx tf = detail::segment_ft(mu1 + mu2, 1.0);
    cplx sf = detail::segment_ft(om1 + om2, L);
    double w = std::pow(std::abs(mu1 * mu2), -0.5 * (1.0 - p.alpha));
    double fs = std::sqrt(spatial_spectral_density(p.spatial, 1, om1) * spatial_spectral_density(p.spatial, 1, om2));
    return rosenblatt_scale(p) * tf * w * sf * fs;
}

// Cell layout on the positive half-axes; cell masses are exact integrals of
// |mu|^{alpha-1} (temporal) and of f_S (spatial).
struct SpectralCells {
    std::vector<double> mu, G;     // positive temporal nodes and masses
    std::vector<double> om, H;     // positive spatial nodes and masses
};

inline SpectralCells spectral_cells(const RosenblattParams& p)
{
    const auto& g = p.grid;
    SpectralCells c;
    std::vector<double> e{0.0};
    for (int i = 0; i < g.n_geometric; ++i)
        e.push_back(g.n_geometric == 1 ? g.width
                                       : g.mu0 * std::pow(g.width / g.mu0, double(i) / (g.n_geometric - 1)));
    while (static_cast<int>(e.size()) < g.n_t + 1) e.push_back(e.back() + g.width);
    double a = p.alpha;
    for (int i = 0; i < g.n_t; ++i) {
        c.mu.push_back(0.5 * (e[i] + e[i + 1]));
        c.G.push_back((std::pow(e[i + 1], a) - std::pow(e[i], a)) / a);
    }
    bool exact = p.spatial.kind == SpatialKind::powered_exponential && p.spatial.kappa == 1.0;
    for (int j = 0; j < g.n_s; ++j) {
        double lo = j * g.dw, hi = (j + 1) * g.dw;
        c.om.push_back(0.5 * (lo + hi));
        if (exact) {
            double l = p.spatial.lambda;
            c.H.push_back((std::atan(hi / l) - std::atan(lo / l)) / pi);
        } else {
            c.H.push_back(gauss_legendre(8, lo, hi).integrate(
                [&](double w) { return spatial_spectral_density(p.spatial, 1, w); }));
        }
    }
    return c;
}

// Variance of the discretised off-diagonal form, in closed form over the grid.
inline double discrete_kappa2(const RosenblattParams& p)
{
    validate(p);
    auto c = spectral_cells(p);
    double L = p.body.sides()[0];
    std::vector<double> mu, G, om, H;
    for (int i = c.mu.size() - 1; i >= 0; --i) {
        mu.push_back(-c.mu[i]);
        G.push_back(c.G[i]);
    }
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
        mu.push_back(c.mu[i]);
        G.push_back(c.G[i]);
    }
    for (int i = c.om.size() - 1; i >= 0; --i) {
        om.push_back(-c.om[i]);
        H.push_back(c.H[i]);
    }
    for (std::size_t i = 0; i < c.om.size(); ++i) {
        om.push_back(c.om[i]);
        H.push_back(c.H[i]);
    }
    auto tsum = [&](const std::vector<double>& x, const std::vector<double>& w, double len, double& full,
                    double& diag, double& mirror) {
        full = diag = mirror = 0.0;
        std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) full += std::norm(detail::segment_ft(x[i] + x[j], len)) * w[i] * w[j];
        for (std::size_t i = 0; i < n; ++i) {
            diag += std::norm(detail::segment_ft(2 * x[i], len)) * w[i] * w[i];
            mirror += len * len * w[i] * w[n - 1 - i];
        }
    };
    double tf, td, tm, sf, sd, sm;
    tsum(mu, G, 1.0, tf, td, tm);
    tsum(om, H, L, sf, sd, sm);
    double A = rosenblatt_scale(p);
    // diagonal and mirror pairs are removed jointly in both coordinates
    double diag = 0.0, mirror = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < om.size(); ++j) {
            diag += std::norm(detail::segment_ft(2 * mu[i], 1.0)) * G[i] * G[i] *
                    std::norm(detail::segment_ft(2 * om[j], L)) * H[j] * H[j];
            mirror += L * L * G[i] * G[mu.size() - 1 - i] * H[j] * H[om.size() - 1 - j];
        }
    (void)td;
    (void)tm;
    (void)sd;
    (void)sm;
    return 2.0 * A * A * (tf * sf - diag - mirror);
}

struct RosenblattCumulants {
    double kappa2 = 0;           // spectral quadrature
    double kappa2_physical = 0;  // through I_K and the time-domain kernel
    double kappa3 = 0;
    double kappa3_err = 0;
    double skewness = 0;
    double I_K = 0;
};

namespace detail {
// int_0^inf (2 sin(s/2)/s)^2 s^{p} ds for -1 < p < 1
inline double sinc2_power_integral(double p)
{
    double s = 0.0;
    auto f = [p](double x) {
        double v = 2.0 * std::sin(0.5 * x) / x;
        return v * v * std::pow(x, p);
    };
    std::vector<double> br{0.0};
    for (int k = -12; k <= 0; ++k) br.push_back(2 * pi * std::pow(10.0, k / 2.0));
    s += composite_legendre(br, 24).integrate(f);
    const int periods = 4000;
    for (int k = 1; k < periods; ++k) s += gauss_legendre(16, 2 * pi * k, 2 * pi * (k + 1)).integrate(f);
    double S = 2 * pi * periods;
    // sin^2 averages to 1/2 over the remaining periods
    s += 2.0 * std::pow(S, p - 1.0) / (1.0 - p);
    return s;
}

// (f_S * f_S)(s) in d = 1 through omega = l tan(theta)
inline double spectral_self_convolution(const SpatialCovariance& sp, double s)
{
    double l = sp.kind == SpatialKind::cauchy ? std::pow(sp.c, -0.5 / sp.gamma) : 1.0 / sp.lambda;
    l = 1.0 / l;  // frequency scale
    auto f = [&](double th) {
        double w = l * std::tan(th);
        double jac = l / (std::cos(th) * std::cos(th));
        return spatial_spectral_density(sp, 1, w) * spatial_spectral_density(sp, 1, s - w) * jac;
    };
    double ts = std::atan(s / l);
    std::vector<double> br{-0.5 * pi + 1e-9, -1.2, -0.6, 0.0, 0.6, 1.2, 0.5 * pi - 1e-9};
    br.push_back(ts);
    for (double d : {-0.1, 0.1}) br.push_back(std::clamp(ts + d, -0.5 * pi + 1e-9, 0.5 * pi - 1e-9));
    std::sort(br.begin(), br.end());
    std::vector<double> clean;
    for (double b : br)
        if (clean.empty() || b - clean.back() > 1e-12) clean.push_back(b);
    return composite_legendre(clean, 32).integrate(f);
}
} // namespace detail

inline RosenblattCumulants rosenblatt_cumulants(const RosenblattParams& p, int n_tri = 64)
{
    validate(p);
    const double a = p.alpha;
    const double L = p.body.sides()[0];
    DistanceDensity psi(p.body);
    const double cK = c_K_constant(2, a, psi, p.spatial);
    const double cT = tauberian_constant(a);
    RosenblattCumulants r;

    // temporal: int |S(s)|^2 J(s) ds with J(s) = C_J |s|^{2a-1}
    auto beta = [](double x, double y) { return std::exp(lgamma_lanczos(x) + lgamma_lanczos(y) - lgamma_lanczos(x + y)); };
    double CJ = beta(a, a) + 2.0 * beta(a, 1.0 - 2.0 * a);
    double Tint = 2.0 * CJ * detail::sinc2_power_integral(2.0 * a - 1.0);

    // spatial: int |chi(s)|^2 (f_S * f_S)(s) ds
    double Sint = 0.0;
    {
        double per = 2 * pi / L;
        auto g = [&](double s) {
            return std::norm(detail::segment_ft(s, L)) * detail::spectral_self_convolution(p.spatial, s);
        };
        const int periods = 400;
        for (int k = 0; k < periods; ++k) Sint += gauss_legendre(12, per * k, per * (k + 1)).integrate(g);
        double S = per * periods;
        // |chi|^2 ~ 2/s^2 on average; tail of F by its value at S times (S/s)^2
        Sint += 2.0 * detail::spectral_self_convolution(p.spatial, S) * S * S * 2.0 / (3.0 * S * S * S);
        Sint *= 2.0;
    }
    double A = cT / std::sqrt(cK);
    r.kappa2 = 2.0 * A * A * Tint * Sint;

    double ICS2 = expected_cov_power(psi, p.spatial, 2);
    r.I_K = L * L / cK * ICS2;
    double Tphys = 2.0 / ((1.0 - 2.0 * a) * (2.0 - 2.0 * a));
    r.kappa2_physical = 2.0 * Tphys * r.I_K;

    // third cumulant: 8 c_K^{-3/2} x temporal triple integral x spatial triple integral
    double T3 = beta(1.0 - a, 1.0 - a) * beta(2.0 - 3.0 * a, 2.0) * 6.0;
    auto S3 = [&](int n) {
        auto rs = gauss_legendre(n, 0.0, L);
        auto rx = gauss_legendre(n, 0.0, 1.0);
        double tot = 0.0;
        for (std::size_t i = 0; i < rs.size(); ++i) {
            double s = rs.nodes[i], in = 0.0;
            for (std::size_t j = 0; j < rx.size(); ++j) {
                double x = rx.nodes[j];
                in += rx.weights[j] * p.spatial(s * x) * p.spatial(s * (1.0 - x));
            }
            tot += rs.weights[i] * (L - s) * s * p.spatial(s) * in;
        }
        return 6.0 * tot;
    };
    double s3a = S3(n_tri), s3b = S3(2 * n_tri);
    r.kappa3 = 8.0 * T3 * s3b / std::pow(cK, 1.5);
    r.kappa3_err = 8.0 * T3 * std::abs(s3b - s3a) / std::pow(cK, 1.5);
    r.skewness = r.kappa3 / std::pow(r.kappa2_physical, 1.5);
    return r;
}

// Discretised off-diagonal double integral with Hermitian complex Gaussian
// cell variables. The field Z(t,x) = sum v e^{i(mu t + om x)} is real, so the
// quadratic form is int int Z^2 written through the cos/sin Gram matrices,
// minus the coincident (i = j) and mirror (i = -j) cell pairs.
class RosenblattSampler {
public:
    explicit RosenblattSampler(const RosenblattParams& p) : p_(p)
    {
        validate(p_);
        cells_ = spectral_cells(p_);
        L_ = p_.body.sides()[0];
        A_ = rosenblatt_scale(p_);
        Gt_ = gram(cells_.mu, 1.0);
        Gs_ = gram(cells_.om, L_);
        int nt = p_.grid.n_t, ns = p_.grid.n_s;
        gt_.resize(nt);
        hs_.resize(ns);
        for (int a = 0; a < nt; ++a) gt_[a] = std::sqrt(cells_.G[a]);
        for (int b = 0; b < ns; ++b) hs_[b] = std::sqrt(cells_.H[b]);
        d1t_.resize(nt);
        d1s_.resize(ns);
        for (int a = 0; a < nt; ++a) d1t_[a] = detail::segment_ft(2 * cells_.mu[a], 1.0);
        for (int b = 0; b < ns; ++b) d1s_[b] = detail::segment_ft(2 * cells_.om[b], L_);
    }

    double scale() const { return A_; }

    double draw(Seed128 seed) const
    {
        Philox rng = make_rng(seed);
        int nt = p_.grid.n_t, ns = p_.grid.n_s;
        Eigen::MatrixXd R(2 * nt, 2 * ns);
        const double r2 = std::sqrt(0.5);
        double D1 = 0.0, D2 = 0.0;
        for (int a = 0; a < nt; ++a)
            for (int b = 0; b < ns; ++b) {
                // cells (mu_a, +om_b) and (mu_a, -om_b) on the independent half
                cplx P(rng.normal() * r2, rng.normal() * r2);
                cplx Qm(rng.normal() * r2, rng.normal() * r2);
                double s = gt_[a] * hs_[b];
                P *= s;
                Qm *= s;
                cplx U1 = P + Qm, U2 = cplx(0, 1) * (P - Qm);
                R(a, b) = 2.0 * U1.real();
                R(nt + a, b) = -2.0 * U1.imag();
                R(a, ns + b) = 2.0 * U2.real();
                R(nt + a, ns + b) = -2.0 * U2.imag();
                D2 += 2.0 * L_ * (std::norm(P) + std::norm(Qm));
                D1 += 2.0 * (d1t_[a] * d1s_[b] * P * P).real();
                D1 += 2.0 * (d1t_[a] * std::conj(d1s_[b]) * Qm * Qm).real();
            }
        Eigen::MatrixXd GR = Gt_ * R;
        Eigen::MatrixXd GRG = GR * Gs_;
        double full = (R.array() * GRG.array()).sum();
        return A_ * (full - D1 - D2);
    }

    std::vector<double> sample(std::size_t n, std::uint64_t seed, unsigned threads = 0) const
    {
        std::vector<double> out(n);
        parallel_for(n, threads, [&](std::size_t i) { out[i] = draw(derive_seed(seed, i)); });
        return out;
    }

private:
    RosenblattParams p_;
    SpectralCells cells_;
    double L_ = 1.0, A_ = 1.0;
    Eigen::MatrixXd Gt_, Gs_;
    std::vector<double> gt_, hs_;
    std::vector<cplx> d1t_, d1s_;

    // Gram matrix of {cos(x_k s)}, {sin(x_k s)} on [0, len]
    static Eigen::MatrixXd gram(const std::vector<double>& x, double len)
    {
        int n = static_cast<int>(x.size());
        Eigen::MatrixXd G(2 * n, 2 * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                cplx sp = detail::segment_ft(x[i] + x[j], len);
                cplx sm = detail::segment_ft(x[i] - x[j], len);
                cplx smr = detail::segment_ft(x[j] - x[i], len);
                G(i, j) = 0.5 * (sp.real() + sm.real());
                G(n + i, n + j) = 0.5 * (sm.real() - sp.real());
                G(i, n + j) = 0.5 * (sp.imag() + smr.imag());
                G(n + i, j) = 0.5 * (sp.imag() + sm.imag());
            }
        return G;
    }
};

inline std::vector<double> rosenblatt_sample(const RosenblattParams& p, std::size_t n_samples, std::uint64_t seed,
                                             unsigned threads = 0)
{
    double k2 = discrete_kappa2(p);
    auto q = rosenblatt_cumulants(p);
    if (k2 < 0.5 * q.kappa2) throw std::domain_error("rosenblatt_sample: grid too coarse (discrete kappa2 below half)");
    return RosenblattSampler(p).sample(n_samples, seed, threads);
}

} // namespace sojourn
