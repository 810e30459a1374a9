#ifndef FEDHC_ROBUST_HPP
#define FEDHC_ROBUST_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "fedhc/dataset.hpp"

namespace fedhc {

struct McdEstimate {
    Eigen::VectorXd location;
    Eigen::MatrixXd scatter;  // consistency-corrected, SPD
    std::vector<long> support;  // the h rows of the minimum-determinant fit, sorted
    double determinant = 0.0;
};

struct OutlierReport {
    Eigen::VectorXd distances;     // squared robust Mahalanobis distances (reweighted fit)
    std::vector<int> weights;      // first-stage 0/1 weights
    double cutoff_w1 = 0.0;        // scaled Beta 97.5% quantile, applies to w=1 rows
    double cutoff_w0 = 0.0;        // scaled F 97.5% quantile, applies to w=0 rows
    std::vector<long> outlier_indices;  // rows exceeding their class cutoff, sorted
    long w = 0;                    // sum of weights
};

// The default subset size [(n+D+1)/2]: highest breakdown point.
long mcd_default_h(long n, int d);

// FAST-MCD: 500 seeded (D+1)-subsets, two warm concentration steps each, the
// ten best candidates refined to convergence; the scatter of the winning
// subset is rescaled by the chi-squared consistency factor for h/n.
// Requires n > D+1 and h in [(n+D+1)/2, n).
McdEstimate fast_mcd(const ContinuousDataset& data, long h, uint64_t seed, int threads = 0);

// Reweighted MCD outlier detection: first-stage weights from the
// chi-squared 97.5% cutoff, then distances under the reweighted estimate
// compared against the scaled Beta (w=1 rows) and scaled F (w=0 rows) laws.
OutlierReport rmcd_outliers(const ContinuousDataset& data, uint64_t seed, int threads = 0);

struct CleanedDataset {
    ContinuousDataset data;
    std::vector<long> kept_rows;  // provenance: new row index -> original row
};

// Drops the flagged rows. Throws EmptyResult when nothing remains.
CleanedDataset remove_outliers(const ContinuousDataset& data, const OutlierReport& report);

}  // namespace fedhc

#endif
