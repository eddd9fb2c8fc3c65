#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "geometry.hpp"
#include "specfun.hpp"

namespace sojourn {

enum class SpatialKind { powered_exponential, cauchy, constant_one };

struct SpatialCovariance {
    SpatialKind kind = SpatialKind::powered_exponential;
    double lambda = 1.0, kappa = 1.0;       // exp(-(lambda z)^kappa)
    double c = 1.0, gamma = 1.0, nu = 1.0;  // (1 + c z^{2 gamma})^{-nu}

    static SpatialCovariance exponential(double lambda) { return powered_exponential(lambda, 1.0); }
    static SpatialCovariance powered_exponential(double lambda, double kappa)
    {
        if (!(lambda > 0.0)) throw std::domain_error("powered_exponential: lambda must be > 0");
        if (!(kappa > 0.0 && kappa <= 1.0))
            throw std::domain_error("powered_exponential: kappa must lie in (0, 1]");
        SpatialCovariance s;
        s.kind = SpatialKind::powered_exponential;
        s.lambda = lambda;
        s.kappa = kappa;
        return s;
    }
    static SpatialCovariance cauchy(double c, double gamma, double nu)
    {
        if (!(c > 0.0)) throw std::domain_error("cauchy: c must be > 0");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw std::domain_error("cauchy: gamma must lie in (0, 1]");
        if (!(nu > 0.0)) throw std::domain_error("cauchy: nu must be > 0");
        SpatialCovariance s;
        s.kind = SpatialKind::cauchy;
        s.c = c;
        s.gamma = gamma;
        s.nu = nu;
        return s;
    }
    static SpatialCovariance constant_one()
    {
        SpatialCovariance s;
        s.kind = SpatialKind::constant_one;
        return s;
    }

    double operator()(double z) const
    {
        switch (kind) {
        case SpatialKind::powered_exponential: return std::exp(-std::pow(lambda * z, kappa));
        case SpatialKind::cauchy: return std::pow(1.0 + c * std::pow(z, 2.0 * gamma), -nu);
        case SpatialKind::constant_one: return 1.0;
        }
        return 0.0;
    }

    std::string describe() const
    {
        switch (kind) {
        case SpatialKind::powered_exponential:
            return "powexp(lambda=" + std::to_string(lambda) + ",kappa=" + std::to_string(kappa) + ")";
        case SpatialKind::cauchy:
            return "cauchy(c=" + std::to_string(c) + ",gamma=" + std::to_string(gamma) +
                   ",nu=" + std::to_string(nu) + ")";
        case SpatialKind::constant_one: return "one";
        }
        return {};
    }
};

enum class ModelKind { separable, gneiting_ml, gneiting_cauchy };

struct ModelParams {
    ModelKind kind = ModelKind::separable;
    SpatialCovariance spatial;             // separable
    double alpha = 0.4;                    // all
    double a = 1.0, beta = 1.0, gamma = 0.5, nu = 0.5, c = 1.0;
    int d = 1;                             // Gneiting families
};

class CovarianceModel {
public:
    static CovarianceModel separable(SpatialCovariance s, double alpha)
    {
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("separable: alpha must lie in (0, 1)");
        ModelParams p;
        p.kind = ModelKind::separable;
        p.spatial = s;
        p.alpha = alpha;
        return CovarianceModel(p);
    }
    static CovarianceModel gneiting_ml(double a, double alpha, double beta, double gamma, double nu, int d)
    {
        check_common(a, alpha, beta, gamma, d);
        if (!(nu > 0.0 && nu <= 1.0)) throw std::domain_error("gneiting_ml: nu must lie in (0, 1]");
        ModelParams p;
        p.kind = ModelKind::gneiting_ml;
        p.a = a;
        p.alpha = alpha;
        p.beta = beta;
        p.gamma = gamma;
        p.nu = nu;
        p.d = d;
        return CovarianceModel(p);
    }
    static CovarianceModel gneiting_cauchy(double a, double alpha, double beta, double c, double gamma,
                                           double nu, int d)
    {
        check_common(a, alpha, beta, gamma, d);
        if (!(c > 0.0)) throw std::domain_error("gneiting_cauchy: c must be > 0");
        if (!(nu > 0.0)) throw std::domain_error("gneiting_cauchy: nu must be > 0");
        ModelParams p;
        p.kind = ModelKind::gneiting_cauchy;
        p.a = a;
        p.alpha = alpha;
        p.beta = beta;
        p.c = c;
        p.gamma = gamma;
        p.nu = nu;
        p.d = d;
        return CovarianceModel(p);
    }

    explicit CovarianceModel(const ModelParams& p) : p_(p)
    {
        if (p_.kind == ModelKind::gneiting_ml) ml_ = std::make_shared<MittagLeffler>(p_.nu);
    }

    const ModelParams& params() const { return p_; }
    ModelKind kind() const { return p_.kind; }

    double temporal(double tau) const
    {
        tau = std::abs(tau);
        if (p_.kind == ModelKind::separable) return std::pow(1.0 + tau * tau, -0.5 * p_.alpha);
        return std::pow(1.0 + p_.a * std::pow(tau, 2.0 * p_.alpha), -0.5 * p_.beta * p_.d);
    }

    double operator()(double z, double tau) const
    {
        if (z < 0.0) throw std::domain_error("cov_eval: z must be >= 0");
        tau = std::abs(tau);
        switch (p_.kind) {
        case ModelKind::separable: return p_.spatial(z) * temporal(tau);
        case ModelKind::gneiting_ml: {
            double g = 1.0 + p_.a * std::pow(tau, 2.0 * p_.alpha);
            double arg = std::pow(z, 2.0 * p_.gamma) / std::pow(g, p_.beta * p_.gamma);
            return std::pow(g, -0.5 * p_.beta * p_.d) * (*ml_)(arg);
        }
        case ModelKind::gneiting_cauchy: {
            double g = 1.0 + p_.a * std::pow(tau, 2.0 * p_.alpha);
            double arg = p_.c * std::pow(z, 2.0 * p_.gamma) / std::pow(g, p_.beta * p_.gamma);
            return std::pow(g, -0.5 * p_.beta * p_.d) * std::pow(1.0 + arg, -p_.nu);
        }
        }
        return 0.0;
    }

    // Lower estimate obtained by replacing E_nu with 1/(1 + Gamma(1-nu) x).
    double ml_lower(double z, double tau) const
    {
        if (p_.kind != ModelKind::gneiting_ml) throw std::domain_error("ml_lower: gneiting_ml only");
        double g = 1.0 + p_.a * std::pow(std::abs(tau), 2.0 * p_.alpha);
        double arg = std::pow(z, 2.0 * p_.gamma) / std::pow(g, p_.beta * p_.gamma);
        return std::pow(g, -0.5 * p_.beta * p_.d) / (1.0 + gamma_fn(1.0 - p_.nu) * arg);
    }

    std::string describe() const
    {
        switch (p_.kind) {
        case ModelKind::separable:
            return "separable(" + p_.spatial.describe() + ", alpha=" + std::to_string(p_.alpha) + ")";
        case ModelKind::gneiting_ml: return "gneiting_ml";
        case ModelKind::gneiting_cauchy: return "gneiting_cauchy";
        }
        return {};
    }

private:
    ModelParams p_;
    std::shared_ptr<MittagLeffler> ml_;

    static void check_common(double a, double alpha, double beta, double gamma, int d)
    {
        if (!(a > 0.0)) throw std::domain_error("gneiting: a must be > 0");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("gneiting: alpha must lie in (0, 1]");
        if (!(beta > 0.0 && beta <= 1.0)) throw std::domain_error("gneiting: beta must lie in (0, 1]");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw std::domain_error("gneiting: gamma must lie in (0, 1]");
        if (d < 1) throw std::domain_error("gneiting: d must be >= 1");
    }
};

inline double cov_eval(const CovarianceModel& m, double z, double tau) { return m(z, tau); }

struct LrdVerdict {
    double theta;
    bool is_lrd;
};

// Decay exponent of C^m in time as stated for each family.
inline LrdVerdict lrd_exponent(const CovarianceModel& model, int m)
{
    if (m < 1) throw std::domain_error("lrd_exponent: m must be >= 1");
    const auto& p = model.params();
    double th = 0.0;
    switch (p.kind) {
    case ModelKind::separable: th = m * p.alpha; break;
    case ModelKind::gneiting_ml: th = 2.0 * m * p.alpha * p.beta * (0.5 * p.d - p.gamma); break;
    case ModelKind::gneiting_cauchy: th = 2.0 * m * p.alpha * p.beta * (0.5 * p.d - p.gamma * p.nu); break;
    }
    return {th, th < 1.0};
}

// Exponent of the decay actually realized at large lag: C ~ tau^{-alpha beta d}.
inline double realized_decay_exponent(const CovarianceModel& model, int m)
{
    const auto& p = model.params();
    if (p.kind == ModelKind::separable) return m * p.alpha;
    return m * p.alpha * p.beta * p.d;
}

// ---- double integrals over (tau, z) ----

namespace detail {
// tau panels: [0,1] then dyadic up to T; n Gauss-Legendre nodes each
inline QuadratureRule tau_rule(double T, int n)
{
    std::vector<double> br{0.0};
    for (double t = 1.0; t < T; t *= 2.0) br.push_back(t);
    br.push_back(T);
    return composite_legendre(br, n);
}
} // namespace detail

// int_0^T (1 - tau/T) int_0^D C^m(z,tau) psi(z) dz dtau
inline double cov_power_integral(const CovarianceModel& model, const DistanceDensity& psi, int m, double T,
                                 int n_tau = 64, int n_z = 24)
{
    auto zr = psi.weighted_rule(n_z);
    auto tr = detail::tau_rule(T, n_tau);
    double s = 0.0;
    std::vector<double> inner(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        double tau = tr.nodes[i];
        double in = 0.0;
        for (std::size_t j = 0; j < zr.size(); ++j) in += zr.weights[j] * std::pow(model(zr.nodes[j], tau), m);
        inner[i] = tr.weights[i] * (1.0 - tau / T) * in;
    }
    s = pairwise_sum(inner);
    if (!std::isfinite(s)) throw std::runtime_error("cov_power_integral: non-finite integrand");
    return s;
}

struct Condition2Report {
    std::vector<double> T;
    std::vector<double> value;
    bool strictly_increasing = false;
    bool tail_nonincreasing = false;
};

inline Condition2Report condition2_check(const CovarianceModel& model, const DistanceDensity& psi, int m,
                                         double delta, const std::vector<double>& T_list)
{
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("condition2_check: delta must lie in (0,1)");
    if (T_list.size() < 3) throw std::domain_error("condition2_check: need at least 3 horizons");
    for (std::size_t i = 1; i < T_list.size(); ++i)
        if (!(T_list[i] > T_list[i - 1])) throw std::domain_error("condition2_check: T_list must increase");
    Condition2Report r;
    r.T = T_list;
    for (double T : T_list) r.value.push_back(cov_power_integral(model, psi, m, T) / std::pow(T, delta));
    r.strictly_increasing = true;
    r.tail_nonincreasing = true;
    for (std::size_t i = 1; i < r.value.size(); ++i) {
        if (!(r.value[i] > r.value[i - 1])) r.strictly_increasing = false;
        if (i + 2 >= r.value.size() && r.value[i] > r.value[i - 1]) r.tail_nonincreasing = false;
    }
    return r;
}

struct SupDecayReport {
    std::vector<double> tau;
    std::vector<double> sup;
    bool decreasing = false;
    bool below_tol = false;
};

inline SupDecayReport sup_decay_check(const CovarianceModel& model, const ConvexBody& body,
                                      const std::vector<double>& tau_list, double tol = 0.05)
{
    SupDecayReport r;
    r.tau = tau_list;
    double D = body.diameter();
    for (double tau : tau_list) {
        double s = 0.0;
        for (int i = 0; i < 512; ++i) s = std::max(s, model(D * i / 511.0, tau));
        r.sup.push_back(s);
    }
    r.decreasing = true;
    for (std::size_t i = 1; i < r.sup.size(); ++i)
        if (r.sup[i] > r.sup[i - 1]) r.decreasing = false;
    r.below_tol = !r.sup.empty() && r.sup.back() < tol;
    return r;
}

// ---- spectral densities ----

inline double tauberian_constant(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("tauberian_constant: alpha must lie in (0,1)");
    return gamma_fn(0.5 * (1.0 - alpha)) / (std::pow(2.0, alpha) * gamma_fn(0.5 * alpha) * std::sqrt(pi));
}

struct TemporalSpectrum {
    double value;
    std::optional<double> tauberian;
};

// f_T(mu) for C_T(tau) = (1 + tau^2)^{-alpha/2}, via the Gaussian scale mixture
//   f_T(mu) = 1/(2 sqrt(pi) Gamma(alpha/2)) int_0^inf s^{(alpha-1)/2 - 1} exp(-s - mu^2/(4s)) ds
// integrated by the trapezoid rule in log s.
inline double temporal_spectral_value(double alpha, double mu)
{
    mu = std::abs(mu);
    if (mu == 0.0) throw std::domain_error("temporal_spectral_density: mu = 0 is a pole");
    const double e = 0.5 * (alpha - 1.0);
    const double q = 0.25 * mu * mu;
    double ylo = std::log(q / 800.0), yhi = std::log(800.0);
    const double h = 0.04;
    int n = static_cast<int>(std::ceil((yhi - ylo) / h));
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        double y = ylo + i * h;
        double ey = std::exp(y);
        s += std::exp(e * y - ey - q / ey);
    }
    return s * h / (2.0 * std::sqrt(pi) * gamma_fn(0.5 * alpha));
}

inline TemporalSpectrum temporal_spectral_density(const CovarianceModel& model, double mu,
                                                  double crossover = 0.1)
{
    if (model.kind() != ModelKind::separable)
        throw std::domain_error("temporal_spectral_density: separable models only");
    double a = model.params().alpha;
    TemporalSpectrum r{temporal_spectral_value(a, mu), std::nullopt};
    if (std::abs(mu) < crossover) r.tauberian = tauberian_constant(a) / std::pow(std::abs(mu), 1.0 - a);
    return r;
}

// Radial spectral density of an isotropic covariance on R^d.
//   f(w) = (2pi)^{-d/2} / (2^v Gamma(v+1)) int_0^inf C(r) r^{d-1} L_v(w r) dr,  v = d/2 - 1,
// with L_v(x) = Gamma(v+1) (2/x)^v J_v(x).
inline double spatial_spectral_density(const SpatialCovariance& s, int d, double omega)
{
    if (d < 1) throw std::domain_error("spatial_spectral_density: d must be >= 1");
    if (s.kind == SpatialKind::constant_one)
        throw std::domain_error("spatial_spectral_density: constant covariance has no density");
    omega = std::abs(omega);
    if (s.kind == SpatialKind::powered_exponential && s.kappa == 1.0) {
        double l = s.lambda;
        return gamma_fn(0.5 * (d + 1)) * l /
               (std::pow(pi, 0.5 * (d + 1)) * std::pow(l * l + omega * omega, 0.5 * (d + 1)));
    }
    const double v = 0.5 * d - 1.0;
    auto Lv = [&](double x) {
        if (x < 1e-8) return 1.0;
        if (d == 1) return std::cos(x);
        if (d == 3) return std::sin(x) / x;
        return gamma_fn(v + 1.0) * std::pow(2.0 / x, v) * boost::math::cyl_bessel_j(v, x);
    };
    auto g = [&](double r) { return s(r) * std::pow(r, d - 1) * Lv(omega * r); };
    const double pref = std::pow(2.0 * pi, -0.5 * d) / (std::pow(2.0, v) * gamma_fn(v + 1.0));
    if (s.kind == SpatialKind::cauchy && omega == 0.0) {
        double p = 0.5 * d / s.gamma;
        if (!(s.nu > p)) throw std::runtime_error("spatial_spectral_density: density unbounded at 0");
        double B = std::exp(lgamma_lanczos(p) + lgamma_lanczos(s.nu - p) - lgamma_lanczos(s.nu));
        return pref * std::pow(s.c, -p) * B / (2.0 * s.gamma);
    }
    // graded start for the cusp at r = 0, then half-period panels
    double scale = s.kind == SpatialKind::cauchy ? std::pow(s.c, -0.5 / s.gamma) : 1.0 / s.lambda;
    double half = omega > 0.0 ? pi / omega : scale;
    half = std::min(half, scale);
    double first = 0.0;
    {
        std::vector<double> br{0.0};
        for (int k = -12; k <= 0; ++k) br.push_back(half * std::pow(10.0, k / 2.0));
        first = composite_legendre(br, 24).integrate(g);
    }
    auto panel = [&](int k) {
        return gauss_legendre(32, half * k, half * (k + 1)).integrate(g);
    };
    auto euler = [](const std::vector<double>& ps, std::size_t end) {
        std::vector<double> t(ps.begin() + (end - 16), ps.begin() + end);
        for (std::size_t lvl = 1; lvl < t.size(); ++lvl)
            for (std::size_t i = 0; i + lvl < t.size(); ++i) t[i] = 0.5 * (t[i] + t[i + 1]);
        return t[0];
    };
    double sum = first;
    std::vector<double> partial;
    int quiet = 0;
    double prev_est = std::numeric_limits<double>::quiet_NaN();
    const int max_panels = 6000;
    for (int k = 1;; ++k) {
        double a = panel(k);
        sum += a;
        partial.push_back(sum);
        double env = s(half * k) * std::pow(half * (k + 1), d - 1) * half;
        if (std::abs(a) <= 1e-16 * std::abs(sum) && env <= 1e-15 * std::abs(sum)) {
            if (++quiet > 3) break;
        } else {
            quiet = 0;
        }
        if (omega > 0.0 && k >= 64 && k % 8 == 0) {
            double est = euler(partial, partial.size());
            if (std::abs(est - prev_est) <= 1e-11 * std::abs(est)) {
                sum = est;
                break;
            }
            prev_est = est;
            if (k >= max_panels) {
                sum = est;
                break;
            }
        }
        if (k >= max_panels && !(omega > 0.0))
            throw std::runtime_error("spatial_spectral_density: transform did not converge");
    }
    double f = pref * sum;
    if (f < 0.0) {
        if (f > -1e-12) return 0.0;
        throw std::runtime_error("spatial_spectral_density: negative transform");
    }
    return f;
}

} // namespace sojourn
