#include "fedhc/metrics.hpp"

#include <algorithm>
#include <mutex>
#include <ostream>
#include <sstream>

#include "fedhc/errors.hpp"
#include "fedhc/parallel.hpp"
#include "fedhc/simulate.hpp"

namespace fedhc {

namespace {

enum class Label { unknown, compelled, reversible };

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Cpdag dag_to_cpdag(const Dag& dag) {
    const int d = dag.dim();
    const std::vector<int> topo = topological_order(dag);
    std::vector<int> pos(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) pos[static_cast<size_t>(topo[static_cast<size_t>(k)])] = k;

    // Chickering's edge order: ascending by head position, descending by
    // tail position within a head.
    std::vector<Edge> edges = dag.arrows();
    std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
        const int ya = pos[static_cast<size_t>(a.second)];
        const int yb = pos[static_cast<size_t>(b.second)];
        if (ya != yb) return ya < yb;
        return pos[static_cast<size_t>(a.first)] > pos[static_cast<size_t>(b.first)];
    });

    std::vector<std::vector<Label>> label(
        static_cast<size_t>(d), std::vector<Label>(static_cast<size_t>(d), Label::unknown));
    auto set_unknown_into = [&](int y, Label value) {
        for (int w = 0; w < d; ++w)
            if (dag.has_arrow(w, y) && label[static_cast<size_t>(w)][static_cast<size_t>(y)] ==
                                           Label::unknown)
                label[static_cast<size_t>(w)][static_cast<size_t>(y)] = value;
    };

    for (const auto& [x, y] : edges) {
        if (label[static_cast<size_t>(x)][static_cast<size_t>(y)] != Label::unknown) continue;
        bool resolved = false;
        for (int w = 0; w < d && !resolved; ++w) {
            if (!dag.has_arrow(w, x) ||
                label[static_cast<size_t>(w)][static_cast<size_t>(x)] != Label::compelled)
                continue;
            if (!dag.has_arrow(w, y)) {
                // w -> x compelled but w is no parent of y: everything into y
                // is compelled.
                set_unknown_into(y, Label::compelled);
                resolved = true;
            } else {
                label[static_cast<size_t>(w)][static_cast<size_t>(y)] = Label::compelled;
            }
        }
        if (resolved) continue;
        bool has_external_parent = false;
        for (int z = 0; z < d; ++z) {
            if (z == x || !dag.has_arrow(z, y)) continue;
            if (!dag.has_arrow(z, x)) {
                has_external_parent = true;
                break;
            }
        }
        set_unknown_into(y, has_external_parent ? Label::compelled : Label::reversible);
    }

    Cpdag out;
    out.d = d;
    for (const auto& [x, y] : dag.arrows()) {
        if (label[static_cast<size_t>(x)][static_cast<size_t>(y)] == Label::compelled)
            out.directed.insert({x, y});
        else
            out.undirected.insert({std::min(x, y), std::max(x, y)});
    }
    return out;
}

int shd(const Cpdag& estimated, const Cpdag& truth) {
    if (estimated.d != truth.d)
        throw InputError("shd: graphs live on different node sets");
    const int d = estimated.d;
    // Per unordered pair: none / i->j / j->i / undirected. Every differing
    // state costs exactly one edit.
    enum State { none = 0, fwd, bwd, undir };
    auto state_of = [](const Cpdag& g, int i, int j) {
        if (g.directed.count({i, j})) return fwd;
        if (g.directed.count({j, i})) return bwd;
        if (g.undirected.count({std::min(i, j), std::max(i, j)})) return undir;
        return none;
    };
    int edits = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (state_of(estimated, i, j) != state_of(truth, i, j)) ++edits;
    return edits;
}

SkeletonMetrics skeleton_metrics(const Skeleton& estimated, const Skeleton& truth) {
    if (estimated.dim() != truth.dim())
        throw InputError("skeleton_metrics: graphs live on different node sets");
    long tp = 0, est_edges = 0, true_edges = 0;
    for (int i = 0; i < estimated.dim(); ++i)
        for (int j = i + 1; j < estimated.dim(); ++j) {
            const bool e = estimated.has_edge(i, j);
            const bool t = truth.has_edge(i, j);
            est_edges += e ? 1 : 0;
            true_edges += t ? 1 : 0;
            tp += (e && t) ? 1 : 0;
        }
    SkeletonMetrics m;
    m.precision = est_edges == 0 ? 1.0
                                 : static_cast<double>(tp) / static_cast<double>(est_edges);
    m.recall = true_edges == 0 ? 1.0
                               : static_cast<double>(tp) / static_cast<double>(true_edges);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : (est_edges == 0 && true_edges == 0 ? 1.0 : 0.0);
    return m;
}

std::string bench_csv_header() {
    return "algorithm,D,avg_neighbors,n,seed,shd,n_tests,skeleton_seconds,total_seconds";
}

std::string bench_csv_row(const BenchRecord& r) {
    std::ostringstream os;
    os.precision(6);
    os << r.algorithm << ',' << r.D << ',' << r.avg_neighbors << ',' << r.n << ',' << r.seed
       << ',' << r.shd << ',' << r.n_tests << ',' << r.skeleton_seconds << ','
       << r.total_seconds;
    return os.str();
}

std::vector<BenchRecord> run_benchmark(const BenchScenario& scenario, std::ostream* out) {
    if (scenario.replicates < 1) throw InputError("benchmark needs replicates >= 1");
    if (scenario.sample_sizes.empty()) throw InputError("benchmark needs sample sizes");
    if (scenario.algorithms.empty()) throw InputError("benchmark needs algorithms");
    for (const auto& alg : scenario.algorithms)
        if (alg != "fedhc" && alg != "pchc" && alg != "mmhc")
            throw InputError("unknown algorithm: " + alg);

    std::vector<std::vector<BenchRecord>> per_rep(static_cast<size_t>(scenario.replicates));
    std::mutex stream_mutex;

    parallel_for(scenario.replicates, scenario.threads, [&](int rep) {
        const uint64_t rep_seed = splitmix64(scenario.seed + static_cast<uint64_t>(rep));
        const Dag truth = random_dag(scenario.D, scenario.avg_neighbors, rep_seed);
        const GaussianBn bn = random_gaussian_bn(truth, splitmix64(rep_seed ^ 1));
        const Cpdag truth_cpdag = dag_to_cpdag(truth);

        for (long n : scenario.sample_sizes) {
            const ContinuousDataset data =
                sample_gaussian(bn, n, splitmix64(rep_seed ^ static_cast<uint64_t>(n)));
            const LocalScorer scorer(data, scenario.score);
            SkeletonConfig skel_cfg = scenario.skeleton;
            skel_cfg.threads = 1;  // timing fidelity: one replicate per worker
            SearchConfig search_cfg = scenario.search;
            search_cfg.seed = rep_seed;

            for (const auto& alg : scenario.algorithms) {
                SkeletonResult skel = alg == "fedhc" ? fedhc_skeleton(data, skel_cfg)
                                      : alg == "pchc" ? pchc_skeleton(data, skel_cfg)
                                                      : mmhc_skeleton(data, skel_cfg);
                const LearnedBn learned =
                    hc_search(skel.skeleton, scorer, EdgeConstraints{}, search_cfg);
                BenchRecord rec;
                rec.algorithm = alg;
                rec.D = scenario.D;
                rec.avg_neighbors = scenario.avg_neighbors;
                rec.n = n;
                rec.seed = rep_seed;
                rec.shd = shd(dag_to_cpdag(learned.dag), truth_cpdag);
                rec.n_tests = skel.n_tests;
                rec.skeleton_seconds = skel.runtime;
                rec.total_seconds = skel.runtime + learned.runtime;
                if (out) {
                    std::lock_guard<std::mutex> lock(stream_mutex);
                    (*out) << bench_csv_row(rec) << "\n" << std::flush;
                }
                per_rep[static_cast<size_t>(rep)].push_back(std::move(rec));
            }
        }
    });

    std::vector<BenchRecord> records;
    for (auto& chunk : per_rep)
        for (auto& rec : chunk) records.push_back(std::move(rec));
    std::sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
        return std::tuple(a.algorithm, a.n, a.seed) < std::tuple(b.algorithm, b.n, b.seed);
    });
    return records;
}

}  // namespace fedhc
