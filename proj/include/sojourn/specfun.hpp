#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace sojourn {

constexpr double pi = std::numbers::pi;
constexpr double sqrt2pi = 2.5066282746310002;

// Probabilists' Hermite polynomials, H_{q+1} = x H_q - q H_{q-1}.
inline double hermite_poly(int q, double x)
{
    if (q < 0 || q > 64)
        throw std::domain_error("hermite_poly: order must lie in [0, 64]");
    if (q == 0) return 1.0;
    double h0 = 1.0, h1 = x;
    for (int k = 1; k < q; ++k) {
        double h2 = x * h1 - k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// Fills out[0..Q] with H_0(x)..H_Q(x).
inline void hermite_all(int Q, double x, double* out)
{
    out[0] = 1.0;
    if (Q >= 1) out[1] = x;
    for (int k = 1; k < Q; ++k) out[k + 1] = x * out[k] - k * out[k - 1];
}

inline double factorial(int n)
{
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

inline double gauss_pdf(double x) { return std::exp(-0.5 * x * x) / sqrt2pi; }

inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---- Gamma family (Lanczos, g = 7, nine terms) ----

namespace detail {
constexpr std::array<double, 9> lanczos_c{
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
}

inline double lgamma_lanczos(double x)
{
    if (x <= 0.0 && x == std::floor(x))
        throw std::domain_error("lgamma: pole");
    if (x < 0.5)
        return std::log(pi / std::abs(std::sin(pi * x))) - lgamma_lanczos(1.0 - x);
    x -= 1.0;
    double a = detail::lanczos_c[0];
    double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += detail::lanczos_c[i] / (x + i);
    return 0.5 * std::log(2 * pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

inline double gamma_fn(double x)
{
    if (x <= 0.0 && x == std::floor(x))
        throw std::domain_error("gamma: pole");
    if (x < 0.5) return pi / (std::sin(pi * x) * gamma_fn(1.0 - x));
    if (x > 171.6) return std::numeric_limits<double>::infinity();
    x -= 1.0;
    double a = detail::lanczos_c[0];
    double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += detail::lanczos_c[i] / (x + i);
    return std::sqrt(2 * pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

// 1/Gamma(x), zero at the poles.
inline double rgamma(double x)
{
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    if (x < 0.5) return std::sin(pi * x) * gamma_fn(1.0 - x) / pi;
    if (x > 171.6) return 0.0;
    return 1.0 / gamma_fn(x);
}

// ---- regularized incomplete beta ----

namespace detail {
inline double betacf(double a, double b, double x)
{
    constexpr double tiny = 1e-300, eps = 1e-16;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}
} // namespace detail

inline double incomplete_beta(double mu, double p, double q)
{
    if (!(mu >= 0.0 && mu <= 1.0) || !(p > 0.0) || !(q > 0.0))
        throw std::domain_error("incomplete_beta: need mu in [0,1], p > 0, q > 0");
    if (mu == 0.0) return 0.0;
    if (mu == 1.0) return 1.0;
    double lbt = lgamma_lanczos(p + q) - lgamma_lanczos(p) - lgamma_lanczos(q) +
                 p * std::log(mu) + q * std::log1p(-mu);
    double bt = std::exp(lbt);
    if (mu < (p + 1.0) / (p + q + 2.0)) return bt * detail::betacf(p, q, mu) / p;
    return 1.0 - bt * detail::betacf(q, p, 1.0 - mu) / q;
}

// ---- Mittag-Leffler E_nu(-x) ----
//
// Power series near the origin, the Laplace-type integral
//   E(-x) = sin(nu pi)/(nu pi x) int_0^inf exp(-w^{1/nu}) / ((w/x)^2 + 2 (w/x) cos(nu pi) + 1) dw
// in the middle, the inverse-power expansion once its smallest term is negligible.
class MittagLeffler {
public:
    explicit MittagLeffler(double nu) : nu_(nu)
    {
        if (!(nu > 0.0 && nu <= 1.0))
            throw std::domain_error("mittag_leffler: nu must lie in (0, 1]");
        for (int k = 0; k < series_terms; ++k) rg_[k] = rgamma(nu * k + 1.0);
    }

    double nu() const { return nu_; }

    double operator()(double x) const
    {
        if (!(x >= 0.0)) throw std::domain_error("mittag_leffler: x must be >= 0");
        if (nu_ == 1.0) return std::exp(-x);
        if (x == 0.0) return 1.0;
        if (x <= series_cut) return series(x);
        double a;
        if (x >= 50.0 && asymptotic(x, a)) return a;
        return integral(x);
    }

private:
    static constexpr int series_terms = 160;
    static constexpr double series_cut = 0.5;
    double nu_;
    std::array<double, series_terms> rg_{};

    double series(double x) const
    {
        double s = 0.0, p = 1.0;
        for (int k = 0; k < series_terms; ++k) {
            double t = p * rg_[k];
            s += t;
            if (k > 2 && std::abs(t) < 1e-17 * std::abs(s)) break;
            p *= -x;
        }
        return s;
    }

    bool asymptotic(double x, double& out) const
    {
        double s = 0.0, best = std::numeric_limits<double>::infinity();
        double xp = 1.0;
        for (int k = 1; k <= 60; ++k) {
            xp /= -x;
            double t = -xp * rgamma(1.0 - nu_ * k);
            if (t == 0.0) continue;  // pole of Gamma: exact zero, not convergence
            double at = std::abs(t);
            if (at > best && k > 2) break;
            best = std::min(best, at);
            s += t;
            if (at < 1e-16 * std::abs(s) && k > 1) {
                out = s;
                return true;
            }
        }
        if (best < 1e-15 * std::abs(s)) {
            out = s;
            return true;
        }
        return false;
    }

    double integral(double x) const
    {
        const double c = std::cos(nu_ * pi);
        const double inv = 1.0 / nu_;
        auto f = [&](double w) {
            double r = w / x;
            return std::exp(-std::pow(w, inv)) / (r * r + 2.0 * r * c + 1.0);
        };
        const double W = std::pow(45.0, nu_);
        // split at x and at the near-pole of the denominator (w = -c x when c < 0)
        std::array<double, 4> br{0.0, W, W, W};
        int nb = 1;
        if (c < 0.0 && -c * x < W) br[nb++] = -c * x;
        if (x < W) br[nb++] = x;
        std::sort(br.begin(), br.begin() + nb);
        br[nb] = W;
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        double I = 0.0;
        for (int i = 0; i < nb; ++i)
            if (br[i + 1] > br[i]) I += GK::integrate(f, br[i], br[i + 1], 12, 1e-13);
        return std::sin(nu_ * pi) / (nu_ * pi * x) * I;
    }
};

inline double mittag_leffler_neg(double nu, double x)
{
    if (!(nu > 0.0 && nu <= 1.0))
        throw std::domain_error("mittag_leffler: nu must lie in (0, 1]");
    if (!(x >= 0.0)) throw std::domain_error("mittag_leffler: x must be >= 0");
    if (nu == 1.0) return std::exp(-x);
    static thread_local std::vector<MittagLeffler> cache;
    for (auto& m : cache)
        if (m.nu() == nu) return m(x);
    if (cache.size() > 16) cache.clear();
    cache.emplace_back(nu);
    return cache.back()(x);
}

// ---- quadrature rules ----

enum class RuleKind { legendre, hermite_weighted };

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    RuleKind kind = RuleKind::legendre;
    double a = 0.0, b = 0.0; // support for legendre kind

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

namespace detail {
// Legendre nodes/weights on [-1,1], cached per n.
inline const std::pair<std::vector<double>, std::vector<double>>& legendre_ref(int n)
{
    static std::mutex mtx;
    static std::vector<std::pair<std::vector<double>, std::vector<double>>> cache(513);
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[n];
    if (!slot.first.empty()) return slot;
    std::vector<double> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    slot = {std::move(x), std::move(w)};
    return slot;
}
} // namespace detail

inline QuadratureRule gauss_legendre(int n, double a, double b)
{
    if (n < 1 || n > 512) throw std::domain_error("gauss_legendre: n must lie in [1, 512]");
    if (!(b > a)) throw std::domain_error("gauss_legendre: need a < b");
    const auto& ref = detail::legendre_ref(n);
    QuadratureRule r;
    r.kind = RuleKind::legendre;
    r.a = a;
    r.b = b;
    double h = 0.5 * (b - a), c = 0.5 * (a + b);
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = c + h * ref.first[i];
        r.weights[i] = h * ref.second[i];
    }
    return r;
}

// Piecewise Gauss-Legendre over consecutive breakpoints.
inline QuadratureRule composite_legendre(const std::vector<double>& breaks, int n_per_panel)
{
    if (breaks.size() < 2) throw std::domain_error("composite_legendre: need two breakpoints");
    QuadratureRule r;
    r.kind = RuleKind::legendre;
    r.a = breaks.front();
    r.b = breaks.back();
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        if (!(breaks[k + 1] > breaks[k])) continue;
        auto p = gauss_legendre(n_per_panel, breaks[k], breaks[k + 1]);
        r.nodes.insert(r.nodes.end(), p.nodes.begin(), p.nodes.end());
        r.weights.insert(r.weights.end(), p.weights.begin(), p.weights.end());
    }
    return r;
}

// Nodes and weights for int f(x) phi(x) dx. Weights that underflow double
// are dropped, so large n may return fewer than n nodes.
inline QuadratureRule gauss_hermite_weighted(int n)
{
    if (n < 1 || n > 512) throw std::domain_error("gauss_hermite_weighted: n must lie in [1, 512]");
    QuadratureRule r;
    r.kind = RuleKind::hermite_weighted;
    r.a = -std::numeric_limits<double>::infinity();
    r.b = std::numeric_limits<double>::infinity();
    // roots of H_n: asymptotic initial guesses refined by Newton on the
    // orthonormal recurrence p_k = H_k / sqrt(k!)
    auto eval = [n](double x, double& pn, double& pn1, double& log_scale, double& sum2) {
        double p0 = 0.0, p1 = 1.0;
        log_scale = 0.0;
        sum2 = 1.0;
        for (int k = 0; k < n - 1; ++k) {
            double p2 = (x * p1 - std::sqrt(double(k)) * p0) / std::sqrt(double(k + 1));
            p0 = p1;
            p1 = p2;
            sum2 += p1 * p1;
            if (std::abs(p1) > 1e100) {
                p0 *= 1e-100;
                p1 *= 1e-100;
                sum2 *= 1e-200;
                log_scale += 100.0 * std::log(10.0);
            }
        }
        pn1 = p1; // p_{n-1}
        pn = (x * p1 - std::sqrt(double(n - 1)) * p0) / std::sqrt(double(n));
    };
    // Golub-Welsch eigenvalues, then a Newton polish on the recurrence
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(std::max(n - 1, 0));
    for (int k = 0; k + 1 < n; ++k) sub[k] = std::sqrt(double(k + 1));
    std::vector<double> x(n);
    if (n == 1) {
        x[0] = 0.0;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        for (int i = 0; i < n; ++i) x[i] = es.eigenvalues()[i];
    }
    for (int i = 0; i < n; ++i) {
        double z = x[i];
        for (int it = 0; it < 8; ++it) {
            double pn, pn1, ls, s2;
            eval(z, pn, pn1, ls, s2);
            double dz = pn / (std::sqrt(double(n)) * pn1);
            if (!std::isfinite(dz)) break;
            z -= dz;
            if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        x[i] = z;
    }
    std::vector<std::pair<double, double>> nw;
    for (int i = 0; i < n; ++i) {
        double pn, pn1, ls, s2;
        eval(x[i], pn, pn1, ls, s2);
        double lw = -std::log(s2) - 2.0 * ls;
        if (lw < -690.0) continue;
        nw.emplace_back(x[i], std::exp(lw));
    }
    std::sort(nw.begin(), nw.end());
    for (auto& [xi, wi] : nw) {
        r.nodes.push_back(xi);
        r.weights.push_back(wi);
    }
    return r;
}

} // namespace sojourn
