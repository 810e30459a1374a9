#ifndef FEDHC_SKELETON_HPP
#define FEDHC_SKELETON_HPP

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "fedhc/ci.hpp"
#include "fedhc/graph.hpp"

namespace fedhc {

struct SkeletonConfig {
    double alpha = 0.05;
    int max_k = 3;       // conditioning-set cap for MMHC/PCHC
    int fbed_runs = 0;   // extra FBED forward sweeps over dropped variables
    CiTestKind test = CiTestKind::pearson;
    bool with_backward = false;  // FBED backward phase (off in FEDHC)
    NullReference null_ref = NullReference::normal;
    int threads = 0;  // 0 = hardware parallelism
    // Observer invoked for every CI test as (i, j, |Z|); must be thread-safe
    // when threads != 1.
    std::function<void(int, int, int)> on_test;
};

struct SkeletonResult {
    Skeleton skeleton{1};
    long long n_tests = 0;
    Eigen::MatrixXd initial_stats;  // unconditional statistics, symmetric
    Eigen::MatrixXd initial_logp;   // unconditional log p-values, symmetric
    double runtime = 0.0;           // seconds
};

struct FbedResult {
    std::vector<int> selected;          // in selection order
    std::vector<TestResult> initial;    // unconditional round, indexed by variable
    long long n_tests = 0;
};

// Forward phase of FBED for one target: rounds of conditional tests with
// Early Dropping, plus cfg.fbed_runs extra sweeps over dropped variables.
FbedResult fbed_forward(int target, const CiEngine& engine, const SkeletonConfig& cfg);

// Backward pruning of a selected set: repeatedly removes the least
// significant member whose test given the rest is non-significant.
std::vector<int> fbed_backward(int target, std::vector<int> selected, const CiEngine& engine,
                               const SkeletonConfig& cfg, long long* n_tests = nullptr);

// Per-variable FBED + AND-rule symmetrization (Algorithm 2 semantics).
SkeletonResult fedhc_skeleton(const CiEngine& engine, const SkeletonConfig& cfg);

// Max-Min forward selection per variable without the backward phase
// (MMHC-2 semantics) + AND-rule symmetrization.
SkeletonResult mmhc_skeleton(const CiEngine& engine, const SkeletonConfig& cfg);

// PC-style level-wise edge elimination with deterministic pair ordering.
SkeletonResult pchc_skeleton(const CiEngine& engine, const SkeletonConfig& cfg);

// Dataset-level conveniences; the continuous overloads accept a precomputed
// correlation matrix and otherwise compute one internally.
SkeletonResult fedhc_skeleton(const ContinuousDataset& data, const SkeletonConfig& cfg,
                              std::optional<CorrelationMatrix> R = std::nullopt);
SkeletonResult fedhc_skeleton(const CategoricalDataset& data, const SkeletonConfig& cfg);
SkeletonResult mmhc_skeleton(const ContinuousDataset& data, const SkeletonConfig& cfg,
                             std::optional<CorrelationMatrix> R = std::nullopt);
SkeletonResult mmhc_skeleton(const CategoricalDataset& data, const SkeletonConfig& cfg);
SkeletonResult pchc_skeleton(const ContinuousDataset& data, const SkeletonConfig& cfg,
                             std::optional<CorrelationMatrix> R = std::nullopt);
SkeletonResult pchc_skeleton(const CategoricalDataset& data, const SkeletonConfig& cfg);

}  // namespace fedhc

#endif
