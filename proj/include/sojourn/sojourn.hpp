#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "covariance.hpp"
#include "fieldsim.hpp"
#include "hermite.hpp"
#include "parallel.hpp"
#include "specfun.hpp"

namespace sojourn {

enum class Normalization { theorem_consistent, paper_literal };

// Sum of f(Z(x,t)) w_x dt over the sample; per-column pairwise sums keep the
// result independent of how replicates are scheduled.
template <class F>
double field_integral(const FieldSample& f, F&& fn)
{
    const auto& g = *f.grid;
    const auto& X = f.values;
    std::vector<double> cols(X.cols()), col(X.rows());
    for (Eigen::Index t = 0; t < X.cols(); ++t) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) col[i] = fn(X(i, t)) * g.weights[i];
        cols[t] = pairwise_sum(col);
    }
    return pairwise_sum(cols) * g.dt;
}

inline double minkowski1(const FieldSample& f, double u)
{
    return field_integral(f, [u](double z) { return z >= u ? 1.0 : 0.0; });
}

inline double minkowski2(const FieldSample& f, double u)
{
    if (u < 0.0) throw std::domain_error("minkowski2: u must be >= 0");
    return field_integral(f, [u](double z) { return std::abs(z) >= u ? 1.0 : 0.0; });
}

inline double eta_n(const FieldSample& f, int n)
{
    if (n < 1) throw std::domain_error("eta_n: n must be >= 1");
    return field_integral(f, [n](double z) { return hermite_poly(n, z); });
}

inline double local_functional_A(const FieldSample& f, const FunctionalSpec& spec)
{
    return field_integral(f, [&spec](double z) { return spec(z); });
}

// E[eta_n^2] on the grid, n = 1..Q (index 0 unused):
//   n! sum_{x,y} w_x w_y sum_k (n_t - |k|) dt^2 C(|x - y|, |k| dt)^n.
// Pairs are grouped by distance so the cost is (#distances) x n_t x Q.
inline std::vector<double> grid_sigma2(const CovarianceModel& model, const GridSpec& g, int Q)
{
    std::map<long long, std::pair<double, double>> groups;  // key -> (distance, summed weight)
    for (std::size_t i = 0; i < g.n_s(); ++i)
        for (std::size_t j = 0; j < g.n_s(); ++j) {
            double z = g.dist(i, j);
            long long key = std::llround(z / g.h * 1e6);
            auto& e = groups[key];
            e.first = z;
            e.second += g.weights[i] * g.weights[j];
        }
    std::vector<double> acc(Q + 1, 0.0);
    for (const auto& [key, e] : groups) {
        for (int k = 0; k < g.n_t; ++k) {
            double c = model(e.first, k * g.dt);
            double lagw = (k == 0 ? g.n_t : 2.0 * (g.n_t - k)) * g.dt * g.dt * e.second;
            double p = c;
            for (int n = 1; n <= Q; ++n) {
                acc[n] += lagw * p;
                p *= c;
            }
        }
    }
    for (int n = 1; n <= Q; ++n) acc[n] *= factorial(n);
    return acc;
}

// Exact E[(Y_T - Y_{m,T})^2] on the grid from the chaos decomposition.
inline double grid_reduction_gap(const FunctionalSpec& spec, const std::vector<double>& s2)
{
    int m = hermite_rank(spec);
    int Q = std::min<int>(spec.depth(), static_cast<int>(s2.size()) - 1);
    double num = 0.0;
    for (int n = m + 1; n <= Q; ++n) {
        double c = spec.coeff(n) / factorial(n);
        num += c * c * s2[n];
    }
    double cm = spec.coeff(m) / factorial(m);
    return num / (cm * cm * s2[m]);
}

struct YStats {
    double Y;   // general functional
    double Ym;  // rank-m chaos term
};

inline YStats stat_Y(const FieldSample& f, const FunctionalSpec& spec, int m, double sigma_m)
{
    if (!(sigma_m > 0.0)) throw std::domain_error("stat_Y: sigma_m must be > 0");
    if (m != hermite_rank(spec)) throw std::domain_error("stat_Y: m differs from the Hermite rank");
    const auto& g = *f.grid;
    double TK = g.T() * g.weight_sum();
    double Gm = spec.coeff(m);
    double A = local_functional_A(f, spec);
    double Y = (A - spec.coeff(0) * TK) / (std::abs(Gm) * sigma_m / factorial(m));
    double Ym = (Gm > 0 ? 1.0 : -1.0) * eta_n(f, m) / sigma_m;
    return {Y, Ym};
}

// Normalization::paper_literal omits |K| from the variance, so X1_pl = |K| X1_tc.
inline double stat_X1(const FieldSample& f, double u, double sigma1,
                      Normalization norm = Normalization::theorem_consistent)
{
    const auto& g = *f.grid;
    double K = g.weight_sum();
    double x = (minkowski1(f, u) - (1.0 - gauss_cdf(u)) * g.T() * K) / (gauss_pdf(u) * sigma1);
    return norm == Normalization::theorem_consistent ? x : K * x;
}

struct X2Y2 {
    double X2, Y2;
};

inline X2Y2 stat_X2_Y2(const FieldSample& f, double u, double sigma2,
                       Normalization norm = Normalization::theorem_consistent)
{
    if (!(u > 0.0)) throw std::domain_error("stat_X2_Y2: u must be > 0");
    const auto& g = *f.grid;
    double K = g.weight_sum();
    double num = minkowski2(f, u) - 2.0 * (1.0 - gauss_cdf(u)) * g.T() * K;
    double phi = gauss_pdf(u);
    double X2 = norm == Normalization::theorem_consistent ? num / (phi * u * sigma2)
                                                          : num / (phi * phi * sigma2 / 2.0);
    return {X2, eta_n(f, 2) / sigma2};
}

// Everything the experiment tables need from one replicate, in a single pass.
struct SojournStats {
    double u = 0;
    double M1 = 0, M2 = 0;
    std::vector<double> eta;  // eta[n], n = 1..4
    double X1_tc = 0, X1_pl = 0, X2_tc = 0, X2_pl = 0, Y2 = 0;
    double A = 0;  // local functional of the configured spec
};

struct SigmaSet {
    double s1 = 0, s2 = 0;  // sigma_{1,K}(T), sigma_{2,K}(T)
};

inline SojournStats compute_stats(const FieldSample& f, double u, const SigmaSet& sig,
                                  const FunctionalSpec* spec = nullptr)
{
    const auto& g = *f.grid;
    const auto& X = f.values;
    const int nt = static_cast<int>(X.cols()), ns = static_cast<int>(X.rows());
    const int nq = spec ? 7 : 6;
    std::vector<std::vector<double>> cols(nq, std::vector<double>(nt));
    std::vector<std::vector<double>> col(nq, std::vector<double>(ns));
    for (int t = 0; t < nt; ++t) {
        for (int i = 0; i < ns; ++i) {
            double z = X(i, t), w = g.weights[i];
            double z2 = z * z;
            col[0][i] = (z >= u ? w : 0.0);
            col[1][i] = (std::abs(z) >= u ? w : 0.0);
            col[2][i] = z * w;
            col[3][i] = (z2 - 1.0) * w;
            col[4][i] = (z2 * z - 3.0 * z) * w;
            col[5][i] = (z2 * z2 - 6.0 * z2 + 3.0) * w;
            if (spec) col[6][i] = (*spec)(z) * w;
        }
        for (int q = 0; q < nq; ++q) cols[q][t] = pairwise_sum(col[q]);
    }
    std::vector<double> tot(nq);
    for (int q = 0; q < nq; ++q) tot[q] = pairwise_sum(cols[q]) * g.dt;
    SojournStats s;
    s.u = u;
    s.M1 = tot[0];
    s.M2 = tot[1];
    s.eta = {0.0, tot[2], tot[3], tot[4], tot[5]};
    if (spec) s.A = tot[6];
    double K = g.weight_sum(), T = g.T(), phi = gauss_pdf(u);
    s.X1_tc = (s.M1 - (1.0 - gauss_cdf(u)) * T * K) / (phi * sig.s1);
    s.X1_pl = K * s.X1_tc;
    double num2 = s.M2 - 2.0 * (1.0 - gauss_cdf(u)) * T * K;
    s.X2_tc = u > 0 ? num2 / (phi * u * sig.s2) : std::numeric_limits<double>::quiet_NaN();
    s.X2_pl = num2 / (phi * phi * sig.s2 / 2.0);
    s.Y2 = s.eta[2] / sig.s2;
    return s;
}

} // namespace sojourn
