#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "covariance.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace sojourn {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Cell-centre lattice over the bounding box of K, clipped to K.
struct GridSpec {
    ConvexBody body = ConvexBody::interval(1.0);
    double h = 0.0, dt = 1.0;
    int n_t = 0;
    int d = 1;
    std::vector<int> lattice_n;             // bounding lattice extent per axis
    std::vector<double> origin;             // first cell centre per axis
    std::vector<std::vector<int>> index;    // lattice multi-index of each in-body point
    std::vector<double> coords;             // n_s x d, row-major
    std::vector<double> weights;            // h^d

    std::size_t n_s() const { return weights.size(); }
    double T() const { return n_t * dt; }
    double weight_sum() const
    {
        double s = 0;
        for (double w : weights) s += w;
        return s;
    }
    const double* point(std::size_t i) const { return coords.data() + i * d; }
    double dist(std::size_t i, std::size_t j) const
    {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
            double v = coords[i * d + k] - coords[j * d + k];
            s += v * v;
        }
        return std::sqrt(s);
    }
    bool full_lattice() const
    {
        std::size_t n = 1;
        for (int v : lattice_n) n *= v;
        return n == n_s();
    }
};

inline GridSpec build_grid(const ConvexBody& body, double h, double dt, int n_t,
                           std::size_t budget = std::size_t(1) << 28)
{
    if (!(h > 0.0) || h > 0.5 * body.diameter() * (1 + 1e-12))
        throw std::domain_error("build_grid: need 0 < h <= D(K)/2");
    if (!(dt > 0.0)) throw std::domain_error("build_grid: dt must be > 0");
    if (n_t < 2) throw std::domain_error("build_grid: n_t must be >= 2");
    GridSpec g;
    g.body = body;
    g.h = h;
    g.dt = dt;
    g.n_t = n_t;
    g.d = body.dim();
    std::size_t total = 1;
    for (int j = 0; j < g.d; ++j) {
        double ext = body.upper(j) - body.lower(j);
        // as many cells as fit to the nearest whole, centred on the extent
        int n = static_cast<int>(std::floor(ext / h + 0.5 + 1e-9));
        if (n < 1) throw std::domain_error("build_grid: empty lattice");
        g.lattice_n.push_back(n);
        g.origin.push_back(body.lower(j) + 0.5 * (ext - n * h) + 0.5 * h);
        total *= n;
    }
    std::vector<int> idx(g.d, 0);
    std::vector<double> x(g.d);
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t r = f;
        for (int j = g.d - 1; j >= 0; --j) {
            idx[j] = static_cast<int>(r % g.lattice_n[j]);
            r /= g.lattice_n[j];
        }
        for (int j = 0; j < g.d; ++j) x[j] = g.origin[j] + idx[j] * h;
        bool inside = body.contains(x.data());
        if (inside && body.kind() == BodyKind::ball) {
            double s = 0;
            for (double v : x) s += v * v;
            inside = s < body.radius() * body.radius();
        }
        if (!inside) continue;
        g.index.push_back(idx);
        g.coords.insert(g.coords.end(), x.begin(), x.end());
        g.weights.push_back(std::pow(h, g.d));
    }
    if (g.weights.empty()) throw std::domain_error("build_grid: empty lattice");
    if (g.n_s() * static_cast<std::size_t>(n_t) > budget)
        throw std::domain_error("build_grid: grid exceeds memory budget");
    return g;
}

struct FieldSample {
    std::shared_ptr<const GridSpec> grid;
    Eigen::MatrixXd values;  // n_s x n_t
    std::string method;
    Seed128 seed{0, 0};
    double negative_mass = 0.0;
    int pad_factor = 0;
};

// ---- exact sampler by Cholesky factorisation ----

class CholeskySampler {
public:
    CholeskySampler(const CovarianceModel& model, std::shared_ptr<const GridSpec> grid) : grid_(std::move(grid))
    {
        const auto& g = *grid_;
        std::size_t ns = g.n_s(), nt = g.n_t, N = ns * nt;
        if (N > 8192) throw std::domain_error("simulate_cholesky: grid larger than 8192 points");
        // covariance by (pair, lag) table; index = t*ns + i
        std::vector<double> tab(ns * ns * nt);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t j = i; j < ns; ++j) {
                double z = g.dist(i, j);
                for (std::size_t k = 0; k < nt; ++k) {
                    double c = model(z, k * g.dt);
                    tab[(i * ns + j) * nt + k] = c;
                    tab[(j * ns + i) * nt + k] = c;
                }
            }
        Eigen::MatrixXd S(N, N);
        for (std::size_t t = 0; t < nt; ++t)
            for (std::size_t s = 0; s < nt; ++s) {
                std::size_t k = t > s ? t - s : s - t;
                for (std::size_t i = 0; i < ns; ++i)
                    for (std::size_t j = 0; j < ns; ++j) S(t * ns + i, s * ns + j) = tab[(i * ns + j) * nt + k];
            }
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
            jitter_ = 1e-10 * S.trace() / double(N);
            S.diagonal().array() += jitter_;
            llt.compute(S);
            if (llt.info() != Eigen::Success) {
                Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
                double mn = ldlt.vectorD().minCoeff();
                throw NumericalError("simulate_cholesky: factorisation failed after jitter; smallest pivot " +
                                     std::to_string(mn));
            }
        }
        L_ = llt.matrixL();
    }

    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& factor() const { return L_; }
    std::shared_ptr<const GridSpec> grid() const { return grid_; }

    FieldSample draw(Seed128 seed) const
    {
        const auto& g = *grid_;
        std::size_t N = L_.rows();
        Philox rng = make_rng(seed);
        Eigen::VectorXd z(N);
        for (std::size_t i = 0; i < N; ++i) z[i] = rng.normal();
        Eigen::VectorXd x = L_.triangularView<Eigen::Lower>() * z;
        FieldSample f;
        f.grid = grid_;
        f.values = Eigen::Map<Eigen::MatrixXd>(x.data(), g.n_s(), g.n_t);
        f.method = "cholesky";
        f.seed = seed;
        return f;
    }

private:
    std::shared_ptr<const GridSpec> grid_;
    Eigen::MatrixXd L_;
    double jitter_ = 0.0;
};

inline FieldSample simulate_cholesky(const CovarianceModel& model, const GridSpec& grid, Seed128 seed)
{
    return CholeskySampler(model, std::make_shared<const GridSpec>(grid)).draw(seed);
}

// ---- circulant embedding ----

namespace detail {
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    fftw_complex* p = nullptr;
    std::size_t n = 0;
    explicit FftwBuffer(std::size_t n_) : n(n_)
    {
        p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!p) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(p); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct FftwPlan {
    fftw_plan plan = nullptr;
    ~FftwPlan()
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (plan) fftw_destroy_plan(plan);
    }
};
} // namespace detail

class CirculantSampler {
public:
    CirculantSampler(const CovarianceModel& model, std::shared_ptr<const GridSpec> grid, int pad_factor = 2,
                     double neg_tol = 1e-6, int retries = 3)
        : grid_(std::move(grid))
    {
        if (pad_factor < 2) throw std::domain_error("simulate_circulant: pad_factor must be >= 2");
        int pad = pad_factor;
        for (int attempt = 0; attempt <= retries; ++attempt, pad *= 2) {
            if (embed(model, pad, neg_tol)) return;
        }
        throw NumericalError("simulate_circulant: embedding not nonnegative (negative mass " +
                             std::to_string(neg_mass_) + "); use the Cholesky sampler");
    }

    int pad_factor() const { return pad_; }
    double negative_mass() const { return neg_mass_; }
    // marginal variance carried by the clipped embedding
    double implied_variance() const { return implied_var_; }
    std::shared_ptr<const GridSpec> grid() const { return grid_; }

    FieldSample draw(Seed128 seed) const
    {
        const auto& g = *grid_;
        detail::FftwBuffer buf(M_);
        Philox rng = make_rng(seed);
        for (std::size_t k = 0; k < M_; ++k) {
            double re = rng.normal(), im = rng.normal();
            buf.p[k][0] = scale_[k] * re;
            buf.p[k][1] = scale_[k] * im;
        }
        fftw_execute_dft(plan_->plan, buf.p, buf.p);
        FieldSample f;
        f.grid = grid_;
        f.values.resize(g.n_s(), g.n_t);
        for (int t = 0; t < g.n_t; ++t)
            for (std::size_t i = 0; i < g.n_s(); ++i) f.values(i, t) = buf.p[t * Mspace_ + embed_[i]][0];
        f.method = "circulant";
        f.seed = seed;
        f.negative_mass = neg_mass_;
        f.pad_factor = pad_;
        return f;
    }

private:
    std::shared_ptr<const GridSpec> grid_;
    std::shared_ptr<detail::FftwPlan> plan_;
    std::vector<double> scale_;
    std::vector<std::size_t> embed_;
    std::size_t M_ = 0, Mspace_ = 0;
    int pad_ = 0;
    double neg_mass_ = 0.0, implied_var_ = 0.0;

    bool embed(const CovarianceModel& model, int pad, double neg_tol)
    {
        const auto& g = *grid_;
        int d = g.d;
        std::vector<int> dims;  // time first, then space
        dims.push_back(pad * g.n_t);
        for (int j = 0; j < d; ++j) dims.push_back(g.lattice_n[j] == 1 ? 1 : pad * g.lattice_n[j]);
        std::size_t M = 1, Ms = 1;
        for (std::size_t a = 0; a < dims.size(); ++a) {
            M *= dims[a];
            if (a > 0) Ms *= dims[a];
        }
        detail::FftwBuffer buf(M);
        std::vector<int> k(d + 1);
        for (std::size_t f = 0; f < M; ++f) {
            std::size_t r = f;
            for (int a = d; a >= 0; --a) {
                k[a] = static_cast<int>(r % dims[a]);
                r /= dims[a];
            }
            int kt = std::min(k[0], dims[0] - k[0]);
            double z2 = 0.0;
            for (int j = 0; j < d; ++j) {
                double v = std::min(k[j + 1], dims[j + 1] - k[j + 1]) * g.h;
                z2 += v * v;
            }
            buf.p[f][0] = model(std::sqrt(z2), kt * g.dt);
            buf.p[f][1] = 0.0;
        }
        auto plan = std::make_shared<detail::FftwPlan>();
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            // FFTW_ESTIMATE leaves the buffer untouched and keeps plans reproducible
            plan->plan = fftw_plan_dft(d + 1, dims.data(), buf.p, buf.p, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        if (!plan->plan) throw NumericalError("simulate_circulant: FFTW planning failed");
        fftw_execute(plan->plan);
        double neg = 0.0, tot = 0.0, pos = 0.0;
        for (std::size_t f = 0; f < M; ++f) {
            double l = buf.p[f][0];
            tot += std::abs(l);
            if (l < 0) neg += -l;
            else pos += l;
        }
        neg_mass_ = tot > 0 ? neg / tot : 1.0;
        if (neg_mass_ > neg_tol) return false;
        scale_.resize(M);
        for (std::size_t f = 0; f < M; ++f) scale_[f] = std::sqrt(std::max(buf.p[f][0], 0.0) / double(M));
        implied_var_ = pos / double(M);
        embed_.resize(g.n_s());
        for (std::size_t i = 0; i < g.n_s(); ++i) {
            std::size_t e = 0;
            for (int j = 0; j < d; ++j) e = e * dims[j + 1] + g.index[i][j];
            embed_[i] = e;
        }
        M_ = M;
        Mspace_ = Ms;
        pad_ = pad;
        plan_ = std::move(plan);
        return true;
    }
};

inline FieldSample simulate_circulant(const CovarianceModel& model, const GridSpec& grid, Seed128 seed,
                                      int pad_factor = 2)
{
    return CirculantSampler(model, std::make_shared<const GridSpec>(grid), pad_factor).draw(seed);
}

// ---- ensemble covariance diagnostics ----

struct Probe {
    std::size_t i, j;  // spatial points
    int lag;           // time steps
};

struct ProbeResult {
    Probe probe;
    double empirical, se, target, z;
};

struct CovCheckReport {
    std::vector<ProbeResult> probes;
    double max_abs_z = 0.0;
};

// Per replicate: time-average of Z(i,t) Z(j,t+lag); replicates are iid so the
// standard error is sd/sqrt(R).
inline void probe_moments(const std::vector<FieldSample>& samples, const Probe& p, double& mean, double& se)
{
    std::size_t R = samples.size();
    std::vector<double> v(R);
    for (std::size_t r = 0; r < R; ++r) {
        const auto& X = samples[r].values;
        int nt = static_cast<int>(X.cols());
        double s = 0.0;
        for (int t = 0; t + p.lag < nt; ++t) s += X(p.i, t) * X(p.j, t + p.lag);
        v[r] = s / (nt - p.lag);
    }
    mean = pairwise_sum(v) / R;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (R - 1) / R);
}

inline CovCheckReport sample_cov_check(const std::vector<FieldSample>& samples, const std::vector<Probe>& probes,
                                       const CovarianceModel& model)
{
    if (samples.size() < 100) throw std::domain_error("sample_cov_check: need at least 100 replicates");
    CovCheckReport rep;
    const auto& g = *samples.front().grid;
    for (const auto& p : probes) {
        double m, se;
        probe_moments(samples, p, m, se);
        double tgt = model(g.dist(p.i, p.j), p.lag * g.dt);
        double z = se > 0 ? (m - tgt) / se : 0.0;
        rep.probes.push_back({p, m, se, tgt, z});
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
    }
    return rep;
}

// Two ensembles on the same grid: z-scores of their probe differences.
inline CovCheckReport cross_cov_check(const std::vector<FieldSample>& a, const std::vector<FieldSample>& b,
                                      const std::vector<Probe>& probes)
{
    CovCheckReport rep;
    for (const auto& p : probes) {
        double ma, sa, mb, sb;
        probe_moments(a, p, ma, sa);
        probe_moments(b, p, mb, sb);
        double se = std::sqrt(sa * sa + sb * sb);
        double z = se > 0 ? (ma - mb) / se : 0.0;
        rep.probes.push_back({p, ma, se, mb, z});
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
    }
    return rep;
}

// Header: 8-byte magic "SOJFIELD", uint64 n_s, uint64 n_t, uint64 d, then
// n_s*d coordinates and n_s*n_t values (space fastest), all f64 little-endian.
inline void write_field_binary(const FieldSample& f, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    const auto& g = *f.grid;
    os.write("SOJFIELD", 8);
    std::uint64_t hdr[3] = {g.n_s(), static_cast<std::uint64_t>(g.n_t), static_cast<std::uint64_t>(g.d)};
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    os.write(reinterpret_cast<const char*>(g.coords.data()), sizeof(double) * g.coords.size());
    os.write(reinterpret_cast<const char*>(f.values.data()), sizeof(double) * f.values.size());
}

} // namespace sojourn
