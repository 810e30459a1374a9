#include "fedhc/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fedhc/errors.hpp"
#include "fedhc/parallel.hpp"
#include "fedhc/stats.hpp"

namespace fedhc {

namespace {

constexpr int kInitialSubsets = 500;
constexpr int kWarmSteps = 2;
constexpr int kFinalists = 10;
constexpr int kMaxRefineSteps = 100;
constexpr int kSingularRetries = 50;

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
    return x ^ (x >> 31);
}

struct Fit {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;            // denominator m-1
    Eigen::LLT<Eigen::MatrixXd> llt;
    double logdet = 0.0;
    bool ok = false;
};

Fit fit_rows(const Eigen::MatrixXd& x, const std::vector<long>& rows) {
    Fit f;
    const long m = static_cast<long>(rows.size());
    const int d = static_cast<int>(x.cols());
    f.mean = Eigen::VectorXd::Zero(d);
    for (long r : rows) f.mean += x.row(r).transpose();
    f.mean /= static_cast<double>(m);
    f.cov = Eigen::MatrixXd::Zero(d, d);
    for (long r : rows) {
        const Eigen::VectorXd c = x.row(r).transpose() - f.mean;
        f.cov.noalias() += c * c.transpose();
    }
    f.cov /= static_cast<double>(m - 1);
    f.llt.compute(f.cov);
    if (f.llt.info() != Eigen::Success) return f;
    f.logdet = 0.0;
    for (int k = 0; k < d; ++k) {
        const double ell = f.llt.matrixLLT()(k, k);
        if (!(ell > 0.0)) return f;
        f.logdet += 2.0 * std::log(ell);
    }
    f.ok = true;
    return f;
}

Eigen::VectorXd squared_distances(const Eigen::MatrixXd& x, const Fit& f) {
    const Eigen::MatrixXd centred = x.rowwise() - f.mean.transpose();
    const Eigen::MatrixXd y =
        f.llt.matrixL().solve(centred.transpose());  // L y = (x - mu)^T
    return y.colwise().squaredNorm().transpose();
}

std::vector<long> smallest_h(const Eigen::VectorXd& dist, long h) {
    std::vector<long> idx(static_cast<size_t>(dist.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](long a, long b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    });
    idx.resize(static_cast<size_t>(h));
    std::sort(idx.begin(), idx.end());
    return idx;
}

// One concentration step: distances under `fit`, keep the h closest, refit.
Fit c_step(const Eigen::MatrixXd& x, const Fit& fit, long h, std::vector<long>& support_out) {
    support_out = smallest_h(squared_distances(x, fit), h);
    return fit_rows(x, support_out);
}

struct Candidate {
    Fit fit;
    std::vector<long> support;
    bool ok = false;
};

}  // namespace

long mcd_default_h(long n, int d) { return (n + d + 1) / 2; }

McdEstimate fast_mcd(const ContinuousDataset& data, long h, uint64_t seed, int threads) {
    const Eigen::MatrixXd& x = data.values();
    const long n = data.n();
    const int d = data.dim();
    if (n <= d + 1)
        throw InputError("fast_mcd needs n > D+1, got n=" + std::to_string(n) +
                         ", D=" + std::to_string(d));
    if (h < mcd_default_h(n, d) || h >= n)
        throw InputError("fast_mcd needs h in [(n+D+1)/2, n), got h=" + std::to_string(h));

    std::vector<Candidate> candidates(kInitialSubsets);
    parallel_for(kInitialSubsets, threads, [&](int s) {
        // Independent stream per subset slot so that results do not depend on
        // the thread count; singular draws are retried within the slot.
        std::mt19937_64 rng(splitmix64(seed ^ (0xA5A5A5A5ULL + static_cast<uint64_t>(s))));
        Candidate& cand = candidates[static_cast<size_t>(s)];
        for (int attempt = 0; attempt <= kSingularRetries; ++attempt) {
            std::vector<long> pick(static_cast<size_t>(n));
            std::iota(pick.begin(), pick.end(), 0);
            for (int k = 0; k <= d; ++k) {
                std::uniform_int_distribution<long> u(k, n - 1);
                std::swap(pick[static_cast<size_t>(k)], pick[static_cast<size_t>(u(rng))]);
            }
            pick.resize(static_cast<size_t>(d) + 1);
            Fit f = fit_rows(x, pick);
            if (!f.ok) continue;  // singular subset: fresh draw
            std::vector<long> support;
            for (int step = 0; step < kWarmSteps && f.ok; ++step) f = c_step(x, f, h, support);
            if (!f.ok) continue;
            cand.fit = std::move(f);
            cand.support = std::move(support);
            cand.ok = true;
            return;
        }
    });

    std::vector<int> order;
    for (int s = 0; s < kInitialSubsets; ++s)
        if (candidates[static_cast<size_t>(s)].ok) order.push_back(s);
    if (order.empty()) throw ExactFit();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double la = candidates[static_cast<size_t>(a)].fit.logdet;
        const double lb = candidates[static_cast<size_t>(b)].fit.logdet;
        if (la != lb) return la < lb;
        return a < b;
    });
    if (static_cast<int>(order.size()) > kFinalists) order.resize(kFinalists);

    // Refine each finalist until the determinant stops moving.
    std::vector<Candidate> finalists(order.size());
    parallel_for(static_cast<int>(order.size()), threads, [&](int k) {
        Candidate cand = candidates[static_cast<size_t>(order[static_cast<size_t>(k)])];
        for (int step = 0; step < kMaxRefineSteps; ++step) {
            std::vector<long> support;
            Fit next = c_step(x, cand.fit, h, support);
            if (!next.ok) break;
            if (next.logdet > cand.fit.logdet + 1e-9)
                throw InvariantViolation("concentration step increased the determinant");
            const bool converged = support == cand.support ||
                                   std::abs(next.logdet - cand.fit.logdet) < 1e-12;
            cand.fit = std::move(next);
            cand.support = std::move(support);
            if (converged) break;
        }
        finalists[static_cast<size_t>(k)] = std::move(cand);
    });

    int best = 0;
    for (int k = 1; k < static_cast<int>(finalists.size()); ++k)
        if (finalists[static_cast<size_t>(k)].fit.logdet <
            finalists[static_cast<size_t>(best)].fit.logdet)
            best = k;
    Candidate& winner = finalists[static_cast<size_t>(best)];

    // Consistency factor: alpha / P(chi^2_{D+2} <= chi^2_{D, alpha} quantile).
    const double alpha = static_cast<double>(h) / static_cast<double>(n);
    const double q = stats::chi_squared_quantile(static_cast<double>(d), alpha);
    const double factor = alpha / stats::chi_squared_cdf(static_cast<double>(d) + 2.0, q);

    McdEstimate est;
    est.location = winner.fit.mean;
    est.scatter = winner.fit.cov * factor;
    est.support = std::move(winner.support);
    Eigen::LLT<Eigen::MatrixXd> llt(est.scatter);
    if (llt.info() != Eigen::Success) throw ExactFit();
    double logdet = 0.0;
    for (int k = 0; k < d; ++k) logdet += 2.0 * std::log(llt.matrixLLT()(k, k));
    est.determinant = std::exp(logdet);
    return est;
}

OutlierReport rmcd_outliers(const ContinuousDataset& data, uint64_t seed, int threads) {
    const Eigen::MatrixXd& x = data.values();
    const long n = data.n();
    const int d = data.dim();
    const McdEstimate stage1 = fast_mcd(data, mcd_default_h(n, d), seed, threads);

    Eigen::LLT<Eigen::MatrixXd> llt1(stage1.scatter);
    if (llt1.info() != Eigen::Success) throw ExactFit();
    const Eigen::MatrixXd centred1 = x.rowwise() - stage1.location.transpose();
    const Eigen::VectorXd d1 =
        llt1.matrixL().solve(centred1.transpose()).colwise().squaredNorm().transpose();

    const double chi_cut = stats::chi_squared_quantile(static_cast<double>(d), 0.975);
    OutlierReport rep;
    rep.weights.assign(static_cast<size_t>(n), 0);
    std::vector<long> kept;
    for (long i = 0; i < n; ++i) {
        if (d1[i] <= chi_cut) {
            rep.weights[static_cast<size_t>(i)] = 1;
            kept.push_back(i);
        }
    }
    rep.w = static_cast<long>(kept.size());
    if (rep.w <= d + 1) throw DegenerateReweighting(rep.w, d);

    Fit rw = fit_rows(x, kept);
    if (!rw.ok) throw ExactFit();
    // Same consistency logic at the nominal 97.5% truncation level.
    const double factor = 0.975 / stats::chi_squared_cdf(static_cast<double>(d) + 2.0, chi_cut);
    rw.cov *= factor;
    rw.llt.compute(rw.cov);
    if (rw.llt.info() != Eigen::Success) throw ExactFit();
    rep.distances = squared_distances(x, rw);

    const double w = static_cast<double>(rep.w);
    const double dd = static_cast<double>(d);
    rep.cutoff_w1 = (w - 1.0) * (w - 1.0) / w *
                    stats::beta_quantile(dd / 2.0, (w - dd - 1.0) / 2.0, 0.975);
    rep.cutoff_w0 = (w + 1.0) / w * (w - 1.0) * dd / (w - dd) *
                    stats::f_quantile(dd, w - dd, 0.975);
    for (long i = 0; i < n; ++i) {
        const double cut = rep.weights[static_cast<size_t>(i)] == 1 ? rep.cutoff_w1
                                                                    : rep.cutoff_w0;
        if (rep.distances[i] > cut) rep.outlier_indices.push_back(i);
    }
    return rep;
}

CleanedDataset remove_outliers(const ContinuousDataset& data, const OutlierReport& report) {
    const long n = data.n();
    if (static_cast<long>(report.weights.size()) != n)
        throw InputError("outlier report does not match the dataset");
    std::vector<uint8_t> drop(static_cast<size_t>(n), 0);
    for (long i : report.outlier_indices) {
        if (i < 0 || i >= n) throw InputError("outlier report indexes a missing row");
        drop[static_cast<size_t>(i)] = 1;
    }
    std::vector<long> kept;
    for (long i = 0; i < n; ++i)
        if (!drop[static_cast<size_t>(i)]) kept.push_back(i);
    if (kept.empty()) throw EmptyResult();
    Eigen::MatrixXd values(static_cast<long>(kept.size()), data.dim());
    for (size_t newr = 0; newr < kept.size(); ++newr)
        values.row(static_cast<long>(newr)) = data.values().row(kept[newr]);
    return {ContinuousDataset(std::move(values), data.names()), std::move(kept)};
}

}  // namespace fedhc
