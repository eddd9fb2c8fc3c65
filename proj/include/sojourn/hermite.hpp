#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specfun.hpp"

namespace sojourn {

// G_q = int H_q(x) G(x) phi(x) dx, so G = sum_q G_q/q! H_q.

inline double coeff_indicator(double u, int q)
{
    if (q < 0) throw std::domain_error("coeff_indicator: q must be >= 0");
    if (q == 0) return 1.0 - gauss_cdf(u);
    return gauss_pdf(u) * hermite_poly(q - 1, u);
}

inline double coeff_abs_indicator(double u, int q)
{
    if (u < 0.0) throw std::domain_error("coeff_abs_indicator: u must be >= 0");
    if (q < 0) throw std::domain_error("coeff_abs_indicator: q must be >= 0");
    if (q == 0) return 2.0 * (1.0 - gauss_cdf(u));
    if (q % 2 == 1) return 0.0;
    return 2.0 * gauss_pdf(u) * hermite_poly(q - 1, u);
}

// Hermite-weighted rules integrate against phi directly; Legendre-kind rules
// (useful when G has jumps) get the phi factor at each node.
inline double coeff_numeric(const std::function<double(double)>& G, int q, const QuadratureRule& rule)
{
    if (q < 0 || q > 64) throw std::domain_error("coeff_numeric: q must lie in [0, 64]");
    if (rule.kind == RuleKind::hermite_weighted && rule.size() < 64)
        throw std::domain_error("coeff_numeric: hermite-weighted rule needs at least 64 nodes");
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        double x = rule.nodes[i];
        double g = G(x);
        if (!std::isfinite(g)) throw std::runtime_error("coeff_numeric: non-finite transform value");
        double w = rule.weights[i];
        if (rule.kind == RuleKind::legendre) w *= gauss_pdf(x);
        s += w * g * hermite_poly(q, x);
    }
    return s;
}

// Legendre panels on [-14, 14] refined around the given jump points.
inline QuadratureRule jump_rule(const std::vector<double>& jumps, int n_per_panel = 32)
{
    std::vector<double> br;
    for (double x = -14.0; x <= 14.0 + 1e-12; x += 0.5) br.push_back(x);
    for (double j : jumps) br.push_back(j);
    std::sort(br.begin(), br.end());
    std::vector<double> clean;
    for (double b : br)
        if (clean.empty() || b - clean.back() > 1e-12) clean.push_back(b);
    return composite_legendre(clean, n_per_panel);
}

enum class FunctionalKind { indicator, abs_indicator, custom };

class FunctionalSpec {
public:
    static constexpr int default_depth = 40;

    static FunctionalSpec indicator(double u, int Q = default_depth)
    {
        FunctionalSpec f;
        f.kind_ = FunctionalKind::indicator;
        f.u_ = u;
        f.name_ = "indicator";
        f.fill(Q);
        return f;
    }
    static FunctionalSpec abs_indicator(double u, int Q = default_depth)
    {
        if (u < 0.0) throw std::domain_error("abs_indicator: u must be >= 0");
        FunctionalSpec f;
        f.kind_ = FunctionalKind::abs_indicator;
        f.u_ = u;
        f.name_ = "abs_indicator";
        f.fill(Q);
        return f;
    }
    // jumps: discontinuities of G, used to place quadrature breakpoints
    static FunctionalSpec custom(std::function<double(double)> G, std::string name,
                                 std::vector<double> jumps = {}, int Q = default_depth)
    {
        FunctionalSpec f;
        f.kind_ = FunctionalKind::custom;
        f.G_ = std::move(G);
        f.name_ = std::move(name);
        f.jumps_ = std::move(jumps);
        f.fill(Q);
        return f;
    }
    static FunctionalSpec hermite(int n, int Q = default_depth)
    {
        return custom([n](double x) { return hermite_poly(n, x); }, "H" + std::to_string(n), {}, Q);
    }

    FunctionalKind kind() const { return kind_; }
    double threshold() const { return u_; }
    const std::string& name() const { return name_; }
    int depth() const { return static_cast<int>(coef_.size()) - 1; }
    const std::vector<double>& coefficients() const { return coef_; }
    double coeff(int q) const { return coef_.at(q); }

    double operator()(double x) const
    {
        switch (kind_) {
        case FunctionalKind::indicator: return x >= u_ ? 1.0 : 0.0;
        case FunctionalKind::abs_indicator: return std::abs(x) >= u_ ? 1.0 : 0.0;
        case FunctionalKind::custom: return G_(x);
        }
        return 0.0;
    }

    // sum_{q=1..Q} G_q^2 / q!
    double parseval_partial(int Q) const
    {
        double s = 0.0;
        for (int q = 1; q <= std::min(Q, depth()); ++q) s += coef_[q] * coef_[q] / factorial(q);
        return s;
    }

private:
    FunctionalKind kind_ = FunctionalKind::indicator;
    double u_ = 0.0;
    std::function<double(double)> G_;
    std::string name_;
    std::vector<double> jumps_;
    std::vector<double> coef_;

    void fill(int Q)
    {
        if (Q < 1 || Q > 64) throw std::domain_error("FunctionalSpec: depth must lie in [1, 64]");
        coef_.resize(Q + 1);
        if (kind_ == FunctionalKind::custom) {
            auto rule = jumps_.empty() ? gauss_hermite_weighted(128) : jump_rule(jumps_);
            for (int q = 0; q <= Q; ++q) coef_[q] = coeff_numeric(G_, q, rule);
            return;
        }
        for (int q = 0; q <= Q; ++q)
            coef_[q] = kind_ == FunctionalKind::indicator ? coeff_indicator(u_, q) : coeff_abs_indicator(u_, q);
    }
};

inline int hermite_rank(const FunctionalSpec& spec, double tol = 1e-10)
{
    for (int q = 1; q <= spec.depth(); ++q)
        if (std::abs(spec.coeff(q)) > tol) return q;
    throw std::domain_error("hermite_rank: all coefficients below tolerance up to depth " +
                            std::to_string(spec.depth()));
}

} // namespace sojourn
