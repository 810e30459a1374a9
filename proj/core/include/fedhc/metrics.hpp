#ifndef FEDHC_METRICS_HPP
#define FEDHC_METRICS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedhc/graph.hpp"
#include "fedhc/score.hpp"
#include "fedhc/skeleton.hpp"

namespace fedhc {

// Chickering's compelled-edge labelling: compelled arrows stay directed,
// reversible ones become undirected. Idempotent across the equivalence class.
Cpdag dag_to_cpdag(const Dag& dag);

// Structural Hamming distance between CPDAGs on the same node set: one unit
// per edge insertion, deletion or orientation change (flip or
// directed<->undirected).
int shd(const Cpdag& estimated, const Cpdag& truth);

struct SkeletonMetrics {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
};
SkeletonMetrics skeleton_metrics(const Skeleton& estimated, const Skeleton& truth);

struct BenchRecord {
    std::string algorithm;
    int D = 0;
    double avg_neighbors = 0.0;
    long n = 0;
    uint64_t seed = 0;
    int shd = 0;
    long long n_tests = 0;
    double skeleton_seconds = 0.0;
    double total_seconds = 0.0;
};

struct BenchScenario {
    int D = 20;
    double avg_neighbors = 3.0;
    std::vector<long> sample_sizes;
    int replicates = 1;
    std::vector<std::string> algorithms;  // subset of {"fedhc","pchc","mmhc"}
    uint64_t seed = 0;
    SkeletonConfig skeleton;
    ScoreSpec score;
    SearchConfig search;
    int threads = 1;  // replicates in flight; timing is per-replicate
};

// The Gaussian Monte-Carlo protocol: per replicate, draw a DAG and its SEM,
// sample every requested n, run every algorithm end to end, record SHD
// against the true CPDAG. Records stream to `out` as they complete and come
// back sorted by (algorithm, n, seed).
std::vector<BenchRecord> run_benchmark(const BenchScenario& scenario,
                                       std::ostream* out = nullptr);

std::string bench_csv_header();
std::string bench_csv_row(const BenchRecord& record);

}  // namespace fedhc

#endif
