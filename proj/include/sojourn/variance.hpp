#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "covariance.hpp"
#include "geometry.hpp"
#include "hermite.hpp"
#include "parallel.hpp"

namespace sojourn {

struct QuadSpec {
    int n_tau = 64;  // Gauss-Legendre nodes per dyadic tau panel
    int n_z = 24;    // nodes per z panel
};

// int_0^T (1 - tau/T) int_0^D psi(z) C(z,tau)^n dz dtau for any callable C(z, tau)
template <class Cov>
double kernel_power_integral(const Cov& C, const DistanceDensity& psi, int n, double T, QuadSpec q = {})
{
    auto zr = psi.weighted_rule(q.n_z);
    auto tr = detail::tau_rule(T, q.n_tau);
    std::vector<double> terms(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        double tau = tr.nodes[i], in = 0.0;
        for (std::size_t j = 0; j < zr.size(); ++j) in += zr.weights[j] * std::pow(C(zr.nodes[j], tau), n);
        terms[i] = tr.weights[i] * (1.0 - tau / T) * in;
    }
    double s = pairwise_sum(terms);
    if (!std::isfinite(s)) throw std::runtime_error("variance quadrature: non-finite integrand");
    return s;
}

struct Sigma2 {
    double value;
    double rel_change;  // against the rule with doubled node counts
};

template <class Cov>
Sigma2 sigma2_nK_checked(const Cov& C, const DistanceDensity& psi, int n, double T, QuadSpec q = {})
{
    if (n < 1) throw std::domain_error("sigma2_nK: n must be >= 1");
    if (!(T > 0.0)) throw std::domain_error("sigma2_nK: T must be > 0");
    double K = psi.body().volume();
    double pre = 2.0 * factorial(n) * T * K * K;
    double a = pre * kernel_power_integral(C, psi, n, T, q);
    QuadSpec q2{std::min(2 * q.n_tau, 512), std::min(2 * q.n_z, 512)};
    double b = pre * kernel_power_integral(C, psi, n, T, q2);
    if (!(b > 0.0)) throw std::runtime_error("sigma2_nK: non-positive variance");
    return {b, std::abs(a - b) / b};
}

// 2 n! T |K|^2 int_0^T (1 - tau/T) int psi C^n dz dtau
template <class Cov>
double sigma2_nK(const Cov& C, const DistanceDensity& psi, int n, double T, QuadSpec q = {})
{
    if (n < 1) throw std::domain_error("sigma2_nK: n must be >= 1");
    if (!(T > 0.0)) throw std::domain_error("sigma2_nK: T must be > 0");
    double K = psi.body().volume();
    double v = 2.0 * factorial(n) * T * K * K * kernel_power_integral(C, psi, n, T, q);
    if (!(v > 0.0)) throw std::runtime_error("sigma2_nK: non-positive variance");
    return v;
}

// int psi C_S^n dz
inline double expected_cov_power(const DistanceDensity& psi, const SpatialCovariance& s, int n)
{
    if (n < 1) throw std::domain_error("expected_cov_power: n must be >= 1");
    auto r = psi.weighted_rule(32);
    return r.integrate([&](double z) { return std::pow(s(z), n); });
}

// Limit of sigma2 / T^{2 - n alpha} for the separable family. With paper_literal
// the spatial integral uses C_S instead of C_S^n.
inline double c_K_constant(int n, double alpha, const DistanceDensity& psi, const SpatialCovariance& s,
                           bool paper_literal = false)
{
    if (n < 1) throw std::domain_error("c_K_constant: n must be >= 1");
    if (!(n * alpha < 1.0)) throw std::domain_error("c_K_constant: needs n*alpha < 1");
    double temporal = 1.0 / ((1.0 - n * alpha) * (2.0 - n * alpha));
    double K = psi.body().volume();
    return 2.0 * factorial(n) * temporal * K * K * expected_cov_power(psi, s, paper_literal ? 1 : n);
}

// |K|^2 int C_S^2 psi / c_K(2, alpha)
inline double I_K_constant(double alpha, const DistanceDensity& psi, const SpatialCovariance& s)
{
    double K = psi.body().volume();
    return K * K / c_K_constant(2, alpha, psi, s) * expected_cov_power(psi, s, 2);
}

struct LinearFit {
    double slope, intercept, r2;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::domain_error("least_squares: need matching lengths >= 2");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    double b = sxy / sxx;
    double r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return {b, my - b * mx, r2};
}

struct VarianceReport {
    int n = 1;
    std::vector<double> T;
    std::vector<double> sigma2;
    double slope = 0, intercept = 0, r2 = 0;
    double reference_slope = 0;  // 2 - theta_n
};

inline VarianceReport scaling_exponent_fit(const CovarianceModel& model, const DistanceDensity& psi, int n,
                                           const std::vector<double>& T_list, unsigned threads = 1)
{
    if (T_list.size() < 4) throw std::domain_error("scaling_exponent_fit: need at least 4 horizons");
    VarianceReport r;
    r.n = n;
    r.T = T_list;
    r.sigma2.resize(T_list.size());
    parallel_for(T_list.size(), threads, [&](std::size_t i) { r.sigma2[i] = sigma2_nK(model, psi, n, T_list[i]); });
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < T_list.size(); ++i) {
        lx.push_back(std::log(T_list[i]));
        ly.push_back(std::log(r.sigma2[i]));
    }
    auto f = least_squares(lx, ly);
    r.slope = f.slope;
    r.intercept = f.intercept;
    r.r2 = f.r2;
    r.reference_slope = 2.0 - lrd_exponent(model, n).theta;
    return r;
}

struct ShortMemoryB {
    double B;
    double tail_bound;
};

// Long-run variance of (A_T - E A_T)/sqrt(T) when the rank-m term is integrable.
template <class Cov>
ShortMemoryB short_memory_B(const Cov& C, const DistanceDensity& psi, const FunctionalSpec& spec, int Q_max,
                            double tau_cutoff)
{
    int m = hermite_rank(spec);
    Q_max = std::min(Q_max, spec.depth());
    auto zr = psi.weighted_rule(24);
    auto g = [&](int n, double tau) {
        double s = 0;
        for (std::size_t j = 0; j < zr.size(); ++j) s += zr.weights[j] * std::pow(C(zr.nodes[j], tau), n);
        return s;
    };
    // local decay exponent of the rank-m integrand near the cutoff
    double g1 = g(m, 0.5 * tau_cutoff), g2 = g(m, tau_cutoff);
    double slope = (g1 > 0 && g2 > 0) ? std::log(g2 / g1) / std::log(2.0) : -1e9;
    if (slope > -1.0)
        throw std::domain_error("short_memory_B: rank-m covariance not integrable (long memory); B undefined");
    double K = psi.body().volume();
    std::vector<double> br{0.0};
    for (double t = 1.0; t < tau_cutoff; t *= 2.0) br.push_back(t);
    br.push_back(tau_cutoff);
    auto tr = composite_legendre(br, 64);
    double B = 0.0, tail = 0.0;
    for (int n = m; n <= Q_max; ++n) {
        double Gn = spec.coeff(n);
        if (Gn == 0.0) continue;
        double I = 0.0;
        for (std::size_t i = 0; i < tr.size(); ++i) I += tr.weights[i] * g(n, tr.nodes[i]);
        double w = Gn * Gn / (factorial(n) * factorial(n)) * 2.0 * factorial(n) * K * K;
        B += w * I;
        // int_cut^inf g ~ g(cut) * cut / (|slope| - 1)
        double gn = g(n, tau_cutoff);
        double sl = std::max(1.0 + 1e-3, -slope * n / m);
        tail += w * gn * tau_cutoff / (sl - 1.0);
    }
    return {B, tail};
}

} // namespace sojourn
