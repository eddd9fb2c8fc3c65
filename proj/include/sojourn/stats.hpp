#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "specfun.hpp"

namespace sojourn {

// Kolmogorov survival function P(K > lambda).
inline double kolmogorov_sf(double lambda)
{
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double t = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * t;
        if (t < 1e-20) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

constexpr double ks_pvalue_floor = 1e-16;
// asymptotic Kolmogorov quantiles
constexpr double ks_lambda_01 = 1.6276;
constexpr double ks_lambda_05 = 1.3581;

struct KsResult {
    double statistic;
    double p_value;
    double n_eff;
    // Stephens' finite-sample scaling of the statistic
    double lambda() const
    {
        double r = std::sqrt(n_eff);
        return (r + 0.12 + 0.11 / r) * statistic;
    }
    bool passes(double lambda_crit = ks_lambda_01) const { return lambda() <= lambda_crit; }
};

inline KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf = gauss_cdf)
{
    if (x.size() < 30) throw std::domain_error("ks_test: need at least 30 samples");
    std::sort(x.begin(), x.end());
    double n = static_cast<double>(x.size()), D = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double F = cdf(x[i]);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    KsResult r{D, 0.0, n};
    r.p_value = std::max(ks_pvalue_floor, kolmogorov_sf(r.lambda()));
    return r;
}

inline KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b)
{
    if (a.size() < 30 || b.size() < 30) throw std::domain_error("ks_test: need at least 30 samples each");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = a.size(), nb = b.size(), D = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        D = std::max(D, std::abs(i / na - j / nb));
    }
    KsResult r{D, 0.0, na * nb / (na + nb)};
    r.p_value = std::max(ks_pvalue_floor, kolmogorov_sf(r.lambda()));
    return r;
}

struct MomentReport {
    std::size_t n = 0;
    double mean = 0, var = 0, skew = 0, kurt = 0;  // kurt is excess kurtosis
    double se_mean = 0, se_var = 0, se_skew = 0, se_kurt = 0;
    bool degenerate = false;  // zero variance: skew/kurt undefined
};

namespace detail {
struct Moments4 {
    double mean, var, skew, kurt;
};
// from power sums of data already shifted by a constant
inline Moments4 from_sums(double n, double s1, double s2, double s3, double s4)
{
    double m = s1 / n;
    double c2 = s2 / n - m * m;
    double c3 = s3 / n - 3 * m * s2 / n + 2 * m * m * m;
    double c4 = s4 / n - 4 * m * s3 / n + 6 * m * m * s2 / n - 3 * m * m * m * m;
    Moments4 r;
    r.mean = m;
    r.var = c2 * n / (n - 1);
    r.skew = c2 > 0 ? c3 / std::pow(c2, 1.5) : std::numeric_limits<double>::quiet_NaN();
    r.kurt = c2 > 0 ? c4 / (c2 * c2) - 3.0 : std::numeric_limits<double>::quiet_NaN();
    return r;
}
} // namespace detail

// Central moments with leave-one-out jackknife standard errors.
inline MomentReport moment_report(const std::vector<double>& x)
{
    if (x.size() < 30) throw std::domain_error("moment_report: need at least 30 samples");
    MomentReport r;
    r.n = x.size();
    double n = static_cast<double>(x.size());
    double shift = 0.0;
    for (double v : x) shift += v;
    shift /= n;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (double v : x) {
        double y = v - shift, y2 = y * y;
        s1 += y;
        s2 += y2;
        s3 += y2 * y;
        s4 += y2 * y2;
    }
    auto full = detail::from_sums(n, s1, s2, s3, s4);
    r.mean = full.mean + shift;
    r.var = full.var;
    r.skew = full.skew;
    r.kurt = full.kurt;
    r.degenerate = !(full.var > 1e-300 * (1.0 + shift * shift));
    if (r.degenerate) {
        r.var = 0.0;
        r.skew = r.kurt = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    double a[4] = {0, 0, 0, 0}, b[4] = {0, 0, 0, 0};
    for (double v : x) {
        double y = v - shift, y2 = y * y;
        auto j = detail::from_sums(n - 1, s1 - y, s2 - y2, s3 - y2 * y, s4 - y2 * y2);
        double t[4] = {j.mean, j.var, j.skew, j.kurt};
        for (int k = 0; k < 4; ++k) {
            a[k] += t[k];
            b[k] += t[k] * t[k];
        }
    }
    double se[4];
    for (int k = 0; k < 4; ++k) {
        double m = a[k] / n;
        se[k] = std::sqrt(std::max(0.0, (n - 1) / n * (b[k] - n * m * m)));
    }
    r.se_mean = se[0];
    r.se_var = se[1];
    r.se_skew = se[2];
    r.se_kurt = se[3];
    return r;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size() || a.size() < 2) throw std::domain_error("correlation: length mismatch");
    double n = a.size(), ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace sojourn
