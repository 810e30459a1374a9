#include "fedhc/ci.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedhc/errors.hpp"
#include "fedhc/stats.hpp"

namespace fedhc {

namespace {

constexpr double kCorrClamp = 1.0 - 1e-12;
constexpr double kPivotTol = 1e-12;

double clamp_corr(double r) { return std::clamp(r, -kCorrClamp, kCorrClamp); }

TestResult chi_squared_result(double statistic, long dof) {
    TestResult res;
    res.statistic = statistic;
    res.dof = static_cast<double>(dof);
    res.log_pvalue = stats::log_chi_squared_upper(statistic, static_cast<double>(dof));
    return res;
}

// Strata iteration shared by g2/x2: dense contingency cube indexed by
// (code_i, code_j, z-configuration).
struct ContingencyCube {
    long ri = 0, rj = 0, q = 0;
    std::vector<long> counts;  // ri * rj * q

    long& at(long a, long b, long l) { return counts[(l * ri + a) * rj + b]; }
    long at(long a, long b, long l) const { return counts[(l * ri + a) * rj + b]; }
};

ContingencyCube build_cube(const CategoricalDataset& data, int i, int j,
                           std::span<const int> z) {
    if (i == j) throw InvariantViolation("categorical test: i == j");
    for (int c : z)
        if (c == i || c == j) throw InvariantViolation("categorical test: i or j inside Z");
    ContingencyCube cube;
    cube.ri = data.levels()[static_cast<size_t>(i)];
    cube.rj = data.levels()[static_cast<size_t>(j)];
    cube.q = 1;
    std::vector<long> stride(z.size());
    for (size_t k = 0; k < z.size(); ++k) {
        stride[k] = cube.q;
        cube.q *= data.levels()[static_cast<size_t>(z[k])];
    }
    cube.counts.assign(static_cast<size_t>(cube.ri * cube.rj * cube.q), 0);
    const auto& codes = data.codes();
    for (long row = 0; row < data.n(); ++row) {
        long l = 0;
        for (size_t k = 0; k < z.size(); ++k) l += stride[k] * codes(row, z[k]);
        ++cube.at(codes(row, i), codes(row, j), l);
    }
    return cube;
}

}  // namespace

CorrelationMatrix correlation_matrix(const ContinuousDataset& data, CorrelationKind kind) {
    const long n = data.n();
    const int d = data.dim();
    Eigen::MatrixXd cols(n, d);
    if (kind == CorrelationKind::pearson) {
        cols = data.values();
    } else {
        for (int j = 0; j < d; ++j) cols.col(j) = stats::average_ranks(data.values().col(j));
    }
    // Two-pass: center, normalize to unit Euclidean norm, then one Gram product.
    for (int j = 0; j < d; ++j) {
        cols.col(j).array() -= cols.col(j).mean();
        const double norm = cols.col(j).norm();
        if (!(norm > 0.0)) throw ConstantColumn(data.names()[static_cast<size_t>(j)], j);
        cols.col(j) /= norm;
    }
    CorrelationMatrix out;
    out.kind = kind;
    out.R = cols.transpose() * cols;
    for (int j = 0; j < d; ++j) out.R(j, j) = 1.0;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            const double r = std::clamp(0.5 * (out.R(a, b) + out.R(b, a)), -1.0, 1.0);
            out.R(a, b) = out.R(b, a) = r;
        }
    return out;
}

double partial_correlation(const CorrelationMatrix& corr, int i, int j, std::span<const int> z) {
    const auto& R = corr.R;
    const int d = static_cast<int>(R.rows());
    if (i == j || i < 0 || j < 0 || i >= d || j >= d)
        throw InvariantViolation("partial_correlation: bad variable pair");
    for (int c : z)
        if (c == i || c == j || c < 0 || c >= d)
            throw InvariantViolation("partial_correlation: bad conditioning index");

    if (z.empty()) return clamp_corr(R(i, j));

    if (z.size() == 1) {
        const int k = z[0];
        const double rij = R(i, j), rik = R(i, k), rjk = R(j, k);
        const double denom = (1.0 - rik * rik) * (1.0 - rjk * rjk);
        if (!(denom > kPivotTol)) throw SingularConditioningSet();
        return clamp_corr((rij - rik * rjk) / std::sqrt(denom));
    }

    const int m = 2 + static_cast<int>(z.size());
    Eigen::MatrixXd sub(m, m);
    std::vector<int> order;
    order.reserve(static_cast<size_t>(m));
    // Canonical (min, max) pair order keeps the result bit-identical under
    // swapping i and j.
    order.push_back(std::min(i, j));
    order.push_back(std::max(i, j));
    order.insert(order.end(), z.begin(), z.end());
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            sub(a, b) = R(order[static_cast<size_t>(a)], order[static_cast<size_t>(b)]);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(sub);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < kPivotTol)
        throw SingularConditioningSet();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
    rhs(0, 0) = 1.0;
    rhs(1, 1) = 1.0;
    const Eigen::MatrixXd inv_cols = ldlt.solve(rhs);
    const double a11 = inv_cols(0, 0), a22 = inv_cols(1, 1), a12 = inv_cols(0, 1);
    if (!(a11 > 0.0) || !(a22 > 0.0)) throw SingularConditioningSet();
    return clamp_corr(-a12 / std::sqrt(a11 * a22));
}

TestResult fisher_z_test(double r, long n, int nz, NullReference null_ref) {
    const double eff = static_cast<double>(n) - nz - 3.0;
    if (eff < 1.0) throw InsufficientSample(n, nz);
    if (!(std::abs(r) < 1.0)) throw InvariantViolation("fisher_z_test: |r| must be < 1");
    TestResult res;
    res.statistic = 0.5 * std::abs(std::log((1.0 + r) / (1.0 - r))) * std::sqrt(eff);
    res.dof = eff;
    res.log_pvalue = null_ref == NullReference::normal
                         ? stats::log_two_sided_normal(res.statistic)
                         : stats::log_two_sided_student_t(res.statistic, eff);
    return res;
}

TestResult spearman_test(double r_rank, long n, int nz, NullReference null_ref) {
    // T_s = T_p * 1.029563
    TestResult res = fisher_z_test(r_rank, n, nz, NullReference::normal);
    res.statistic *= 1.029563;
    res.log_pvalue = null_ref == NullReference::normal
                         ? stats::log_two_sided_normal(res.statistic)
                         : stats::log_two_sided_student_t(res.statistic, res.dof);
    return res;
}

TestResult g2_test(const CategoricalDataset& data, int i, int j, std::span<const int> z) {
    const ContingencyCube cube = build_cube(data, i, j, z);
    double g2 = 0.0;
    long observed_configs = 0;
    std::vector<long> rowsum(static_cast<size_t>(cube.ri));
    std::vector<long> colsum(static_cast<size_t>(cube.rj));
    for (long l = 0; l < cube.q; ++l) {
        long total = 0;
        std::fill(rowsum.begin(), rowsum.end(), 0);
        std::fill(colsum.begin(), colsum.end(), 0);
        for (long a = 0; a < cube.ri; ++a)
            for (long b = 0; b < cube.rj; ++b) {
                const long o = cube.at(a, b, l);
                rowsum[static_cast<size_t>(a)] += o;
                colsum[static_cast<size_t>(b)] += o;
                total += o;
            }
        if (total == 0) continue;  // empty stratum: no information, no dof
        ++observed_configs;
        for (long a = 0; a < cube.ri; ++a)
            for (long b = 0; b < cube.rj; ++b) {
                const long o = cube.at(a, b, l);
                if (o == 0) continue;  // lim x log x = 0
                const double e = static_cast<double>(rowsum[static_cast<size_t>(a)]) *
                                 static_cast<double>(colsum[static_cast<size_t>(b)]) /
                                 static_cast<double>(total);
                g2 += 2.0 * static_cast<double>(o) * std::log(static_cast<double>(o) / e);
            }
    }
    g2 = std::max(g2, 0.0);  // guard the rounding of an exact fit
    const long dof =
        std::max<long>(1, (cube.ri - 1) * (cube.rj - 1) * std::max<long>(observed_configs, 1));
    return chi_squared_result(g2, dof);
}

TestResult x2_test(const CategoricalDataset& data, int i, int j, std::span<const int> z) {
    const ContingencyCube cube = build_cube(data, i, j, z);
    double x2 = 0.0;
    long observed_configs = 0;
    long skipped_cells = 0;
    bool any_cell = false;
    std::vector<long> rowsum(static_cast<size_t>(cube.ri));
    std::vector<long> colsum(static_cast<size_t>(cube.rj));
    for (long l = 0; l < cube.q; ++l) {
        long total = 0;
        std::fill(rowsum.begin(), rowsum.end(), 0);
        std::fill(colsum.begin(), colsum.end(), 0);
        for (long a = 0; a < cube.ri; ++a)
            for (long b = 0; b < cube.rj; ++b) {
                const long o = cube.at(a, b, l);
                rowsum[static_cast<size_t>(a)] += o;
                colsum[static_cast<size_t>(b)] += o;
                total += o;
            }
        if (total == 0) continue;
        ++observed_configs;
        for (long a = 0; a < cube.ri; ++a)
            for (long b = 0; b < cube.rj; ++b) {
                const double e = static_cast<double>(rowsum[static_cast<size_t>(a)]) *
                                 static_cast<double>(colsum[static_cast<size_t>(b)]) /
                                 static_cast<double>(total);
                if (e == 0.0) {
                    ++skipped_cells;
                    continue;
                }
                any_cell = true;
                const double diff = static_cast<double>(cube.at(a, b, l)) - e;
                x2 += diff * diff / e;
            }
    }
    if (!any_cell) throw DegenerateTable();
    const long base =
        (cube.ri - 1) * (cube.rj - 1) * std::max<long>(observed_configs, 1);
    const long dof = std::max<long>(1, base - skipped_cells);
    return chi_squared_result(x2, dof);
}

CiEngine::CiEngine(const ContinuousDataset& data, CiTestKind kind,
                   std::optional<CorrelationMatrix> precomputed, NullReference null_ref)
    : kind_(kind), null_ref_(null_ref), dim_(data.dim()), n_(data.n()) {
    if (kind != CiTestKind::pearson && kind != CiTestKind::spearman)
        throw InputError("continuous data supports the pearson and spearman tests");
    const CorrelationKind want =
        kind == CiTestKind::pearson ? CorrelationKind::pearson : CorrelationKind::spearman;
    if (precomputed) {
        if (precomputed->kind != want)
            throw InputError("precomputed correlation matrix kind does not match the test");
        if (precomputed->R.rows() != dim_ || precomputed->R.cols() != dim_)
            throw InputError("precomputed correlation matrix has the wrong shape");
        corr_ = std::move(precomputed);
    } else {
        corr_ = correlation_matrix(data, want);
    }
}

CiEngine::CiEngine(const CategoricalDataset& data, CiTestKind kind)
    : cat_(&data), kind_(kind), dim_(data.dim()), n_(data.n()) {
    if (kind != CiTestKind::g2 && kind != CiTestKind::x2)
        throw InputError("categorical data supports the g2 and x2 tests");
}

const CorrelationMatrix& CiEngine::correlation() const {
    if (!corr_) throw InvariantViolation("no correlation matrix on a categorical engine");
    return *corr_;
}

CiEngine::Outcome CiEngine::test(int i, int j, std::span<const int> z) const {
    try {
        switch (kind_) {
            case CiTestKind::pearson: {
                const double r = partial_correlation(*corr_, i, j, z);
                return {fisher_z_test(r, n_, static_cast<int>(z.size()), null_ref_), true};
            }
            case CiTestKind::spearman: {
                const double r = partial_correlation(*corr_, i, j, z);
                return {spearman_test(r, n_, static_cast<int>(z.size()), null_ref_), true};
            }
            case CiTestKind::g2:
                return {g2_test(*cat_, i, j, z), true};
            case CiTestKind::x2:
                return {x2_test(*cat_, i, j, z), true};
        }
    } catch (const SingularConditioningSet&) {
    } catch (const InsufficientSample&) {
    } catch (const DegenerateTable&) {
    }
    return {TestResult{}, false};
}

}  // namespace fedhc
