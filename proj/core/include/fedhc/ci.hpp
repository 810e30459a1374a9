#ifndef FEDHC_CI_HPP
#define FEDHC_CI_HPP

#include <Eigen/Dense>

#include <optional>
#include <span>

#include "fedhc/dataset.hpp"

namespace fedhc {

enum class CorrelationKind { pearson, spearman };
enum class NullReference { normal, student_t };
enum class CiTestKind { pearson, spearman, g2, x2 };

// Sample correlation matrix; kind=spearman means Pearson applied to the
// column ranks (average ranks on ties).
struct CorrelationMatrix {
    Eigen::MatrixXd R;
    CorrelationKind kind = CorrelationKind::pearson;
};

struct TestResult {
    double statistic = 0.0;   // >= 0
    double dof = 0.0;         // chi-squared dof, or n-|Z|-3 for Fisher-z
    double log_pvalue = 0.0;  // natural log, always finite
};

CorrelationMatrix correlation_matrix(const ContinuousDataset& data, CorrelationKind kind);

// Partial correlation of variables i and j given the set Z, from a
// correlation matrix alone. |Z|=1 uses the closed form, |Z|>1 the inverse of
// the (i, j, Z) sub-correlation matrix. The result is clamped to
// [-1+1e-12, 1-1e-12]. Throws SingularConditioningSet when the sub-matrix is
// numerically singular (collinear conditioners).
double partial_correlation(const CorrelationMatrix& R, int i, int j, std::span<const int> z);

// Fisher-z partial-correlation test. statistic = 0.5 |log((1+r)/(1-r))| sqrt(n-|Z|-3);
// the two-sided tail comes from the standard normal (default) or Student-t with
// n-|Z|-3 dof. Throws InsufficientSample when n-|Z|-3 < 1.
TestResult fisher_z_test(double r, long n, int nz,
                         NullReference null_ref = NullReference::normal);

// Spearman variant: the Fisher-z statistic scaled by 1.029563.
TestResult spearman_test(double r_rank, long n, int nz,
                         NullReference null_ref = NullReference::normal);

// Conditional G^2 (likelihood-ratio) test: one |X_i| x |X_j| table per
// observed configuration of Z. dof = (|X_i|-1)(|X_j|-1) * (# observed
// configurations); empty strata contribute nothing.
TestResult g2_test(const CategoricalDataset& data, int i, int j, std::span<const int> z);

// Conditional Pearson X^2 test; cells with zero expected count are skipped
// and the dof drops by one per skipped cell (floored at 1). Throws
// DegenerateTable when every cell of every stratum has E=0.
TestResult x2_test(const CategoricalDataset& data, int i, int j, std::span<const int> z);

// Uniform dispatch used by the skeleton algorithms: one engine per dataset,
// pure and shareable across threads. A test may come back "non-informative"
// (collinear conditioners or too small a sample); callers decide what that
// means for their search.
class CiEngine {
public:
    CiEngine(const ContinuousDataset& data, CiTestKind kind,
             std::optional<CorrelationMatrix> precomputed = std::nullopt,
             NullReference null_ref = NullReference::normal);
    CiEngine(const CategoricalDataset& data, CiTestKind kind);

    struct Outcome {
        TestResult result;
        bool informative = true;
    };
    Outcome test(int i, int j, std::span<const int> z) const;

    int dim() const { return dim_; }
    long n() const { return n_; }
    const CorrelationMatrix& correlation() const;

private:
    const CategoricalDataset* cat_ = nullptr;
    std::optional<CorrelationMatrix> corr_;
    CiTestKind kind_;
    NullReference null_ref_ = NullReference::normal;
    int dim_ = 0;
    long n_ = 0;
};

}  // namespace fedhc

#endif
