#include "fedhc/skeleton.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fedhc/errors.hpp"
#include "fedhc/parallel.hpp"

namespace fedhc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Tester {
    const CiEngine& engine;
    const SkeletonConfig& cfg;
    long long count = 0;

    CiEngine::Outcome operator()(int i, int j, std::span<const int> z) {
        ++count;
        if (cfg.on_test) cfg.on_test(i, j, static_cast<int>(z.size()));
        return engine.test(i, j, z);
    }
};

bool significant(const CiEngine::Outcome& out, double log_alpha) {
    return out.informative && out.result.log_pvalue < log_alpha;
}

// Candidate comparison for the forward phases: larger |statistic| first, then
// smaller log p, then smaller index.
struct Candidate {
    int var = -1;
    double statistic = 0.0;
    double log_pvalue = 0.0;

    bool better_than(const Candidate& other) const {
        if (statistic != other.statistic) return statistic > other.statistic;
        if (log_pvalue != other.log_pvalue) return log_pvalue < other.log_pvalue;
        return var < other.var;
    }
};

struct PerTarget {
    std::vector<int> selected;
    std::vector<TestResult> initial;
    long long n_tests = 0;
};

SkeletonResult assemble_and_rule(const CiEngine& engine, const std::vector<PerTarget>& rows,
                                 double elapsed) {
    const int d = engine.dim();
    SkeletonResult res;
    res.skeleton = Skeleton(d);
    res.initial_stats = Eigen::MatrixXd::Zero(d, d);
    res.initial_logp = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXi claimed = Eigen::MatrixXi::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        res.n_tests += rows[static_cast<size_t>(i)].n_tests;
        for (int j : rows[static_cast<size_t>(i)].selected) claimed(i, j) = 1;
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            const TestResult& r = rows[static_cast<size_t>(i)].initial[static_cast<size_t>(j)];
            res.initial_stats(i, j) = r.statistic;
            res.initial_logp(i, j) = r.log_pvalue;
        }
    }
    // Algorithm 2 step 6: asymmetric claims are zeroed (AND rule).
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (claimed(i, j) && claimed(j, i)) res.skeleton.set_edge(i, j, true);
    res.runtime = elapsed;
    return res;
}

}  // namespace

FbedResult fbed_forward(int target, const CiEngine& engine, const SkeletonConfig& cfg) {
    const int d = engine.dim();
    const double log_alpha = std::log(cfg.alpha);
    FbedResult out;
    out.initial.assign(static_cast<size_t>(d), TestResult{});
    Tester test{engine, cfg};

    std::vector<int> alive;
    alive.reserve(static_cast<size_t>(d) - 1);
    for (int v = 0; v < d; ++v)
        if (v != target) alive.push_back(v);
    std::vector<int> selected;
    std::vector<int> dropped;
    bool first_round = true;
    int extra_runs = cfg.fbed_runs;

    for (;;) {
        const size_t selected_before = selected.size();
        // One forward sweep: each round tests all alive candidates given the
        // current selection, drops the non-significant ones and promotes the
        // strongest survivor.
        while (!alive.empty()) {
            std::vector<Candidate> survivors;
            survivors.reserve(alive.size());
            for (int v : alive) {
                const auto outt = test(target, v, selected);
                if (first_round) out.initial[static_cast<size_t>(v)] = outt.result;
                if (significant(outt, log_alpha)) {
                    survivors.push_back({v, outt.result.statistic, outt.result.log_pvalue});
                } else {
                    dropped.push_back(v);
                }
            }
            first_round = false;
            if (survivors.empty()) {
                alive.clear();
                break;
            }
            size_t best = 0;
            for (size_t k = 1; k < survivors.size(); ++k)
                if (survivors[k].better_than(survivors[best])) best = k;
            selected.push_back(survivors[best].var);
            alive.clear();
            for (size_t k = 0; k < survivors.size(); ++k)
                if (k != best) alive.push_back(survivors[k].var);
        }
        first_round = false;
        if (extra_runs <= 0 || dropped.empty() || selected.size() == selected_before) break;
        --extra_runs;
        alive.swap(dropped);
        dropped.clear();
        std::sort(alive.begin(), alive.end());
    }

    out.selected = std::move(selected);
    out.n_tests = test.count;
    return out;
}

std::vector<int> fbed_backward(int target, std::vector<int> selected, const CiEngine& engine,
                               const SkeletonConfig& cfg, long long* n_tests) {
    const double log_alpha = std::log(cfg.alpha);
    Tester test{engine, cfg};
    while (!selected.empty()) {
        int worst_pos = -1;
        double worst_logp = -std::numeric_limits<double>::infinity();
        std::vector<int> rest;
        rest.reserve(selected.size() - 1);
        for (size_t k = 0; k < selected.size(); ++k) {
            rest.clear();
            for (size_t m = 0; m < selected.size(); ++m)
                if (m != k) rest.push_back(selected[m]);
            const auto out = test(target, selected[k], rest);
            const double logp = out.informative ? out.result.log_pvalue : 0.0;
            if (logp > worst_logp) {
                worst_logp = logp;
                worst_pos = static_cast<int>(k);
            }
        }
        if (worst_logp < log_alpha) break;  // everyone significant
        selected.erase(selected.begin() + worst_pos);
    }
    if (n_tests) *n_tests += test.count;
    return selected;
}

SkeletonResult fedhc_skeleton(const CiEngine& engine, const SkeletonConfig& cfg) {
    const auto t0 = Clock::now();
    const int d = engine.dim();
    std::vector<PerTarget> rows(static_cast<size_t>(d));
    parallel_for(d, cfg.threads, [&](int target) {
        FbedResult fr = fbed_forward(target, engine, cfg);
        PerTarget& row = rows[static_cast<size_t>(target)];
        row.n_tests = fr.n_tests;
        row.initial = std::move(fr.initial);
        row.selected = cfg.with_backward
                           ? fbed_backward(target, std::move(fr.selected), engine, cfg,
                                           &row.n_tests)
                           : std::move(fr.selected);
    });
    return assemble_and_rule(engine, rows, seconds_since(t0));
}

SkeletonResult mmhc_skeleton(const CiEngine& engine, const SkeletonConfig& cfg) {
    const auto t0 = Clock::now();
    const int d = engine.dim();
    const double log_alpha = std::log(cfg.alpha);
    std::vector<PerTarget> rows(static_cast<size_t>(d));

    parallel_for(d, cfg.threads, [&](int target) {
        PerTarget& row = rows[static_cast<size_t>(target)];
        row.initial.assign(static_cast<size_t>(d), TestResult{});
        Tester test{engine, cfg};

        // Unconditional filter; the stored association of a candidate is its
        // worst (largest) log p-value over all conditioning subsets tried.
        struct Assoc {
            int var;
            double max_logp;
            double statistic;  // statistic at that worst test
        };
        std::vector<Assoc> cand;
        for (int v = 0; v < d; ++v) {
            if (v == target) continue;
            const auto out = test(target, v, {});
            row.initial[static_cast<size_t>(v)] = out.result;
            if (significant(out, log_alpha))
                cand.push_back({v, out.result.log_pvalue, out.result.statistic});
        }

        std::vector<int> selected;
        while (!cand.empty()) {
            // Max-Min: admit the candidate whose minimum association over the
            // tested subsets is strongest (smallest worst-case log p).
            size_t best = 0;
            for (size_t k = 1; k < cand.size(); ++k) {
                const auto& a = cand[k];
                const auto& b = cand[best];
                if (a.max_logp != b.max_logp ? a.max_logp < b.max_logp
                                             : (a.statistic != b.statistic
                                                    ? a.statistic > b.statistic
                                                    : a.var < b.var))
                    best = k;
            }
            const int admitted = cand[best].var;
            selected.push_back(admitted);
            cand.erase(cand.begin() + best);
            if (cand.empty()) break;

            // Re-screen the survivors against the subsets that contain the
            // newly admitted variable, with |Z| <= max_k.
            const std::vector<int> pool(selected.begin(), selected.end() - 1);
            std::vector<int> zset;
            std::vector<Assoc> still;
            still.reserve(cand.size());
            for (auto& a : cand) {
                bool dead = false;
                const int max_extra =
                    std::min<int>(cfg.max_k - 1, static_cast<int>(pool.size()));
                for (int extra = 0; extra <= max_extra && !dead; ++extra) {
                    // All size-`extra` subsets of pool, lexicographic, each
                    // augmented with the admitted variable.
                    std::vector<int> pick(static_cast<size_t>(extra));
                    std::function<void(int, int)> rec = [&](int start, int depth) {
                        if (dead) return;
                        if (depth == extra) {
                            zset.clear();
                            zset.push_back(admitted);
                            zset.insert(zset.end(), pick.begin(), pick.end());
                            std::sort(zset.begin(), zset.end());
                            const auto out = test(target, a.var, zset);
                            const double logp =
                                out.informative ? out.result.log_pvalue : 0.0;
                            if (logp > a.max_logp) {
                                a.max_logp = logp;
                                a.statistic = out.informative ? out.result.statistic : 0.0;
                            }
                            if (a.max_logp >= log_alpha) dead = true;
                            return;
                        }
                        for (int p = start; p < static_cast<int>(pool.size()); ++p) {
                            pick[static_cast<size_t>(depth)] = pool[static_cast<size_t>(p)];
                            rec(p + 1, depth + 1);
                        }
                    };
                    rec(0, 0);
                }
                if (!dead) still.push_back(a);
            }
            cand.swap(still);
        }
        row.selected = std::move(selected);
        row.n_tests = test.count;
    });
    return assemble_and_rule(engine, rows, seconds_since(t0));
}

SkeletonResult pchc_skeleton(const CiEngine& engine, const SkeletonConfig& cfg) {
    const auto t0 = Clock::now();
    const int d = engine.dim();
    const double log_alpha = std::log(cfg.alpha);

    SkeletonResult res;
    res.skeleton = Skeleton(d);
    res.initial_stats = Eigen::MatrixXd::Zero(d, d);
    res.initial_logp = Eigen::MatrixXd::Zero(d, d);

    // Level 0: every unordered pair, unconditionally.
    struct PairSlot {
        int i, j;
        CiEngine::Outcome out;
    };
    std::vector<PairSlot> pairs;
    pairs.reserve(static_cast<size_t>(d) * (d - 1) / 2);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) pairs.push_back({i, j, {}});
    std::vector<long long> counts(pairs.size(), 0);
    parallel_for(static_cast<int>(pairs.size()), cfg.threads, [&](int k) {
        Tester test{engine, cfg};
        auto& slot = pairs[static_cast<size_t>(k)];
        slot.out = test(slot.i, slot.j, {});
        counts[static_cast<size_t>(k)] = test.count;
    });
    for (size_t k = 0; k < pairs.size(); ++k) {
        const auto& slot = pairs[k];
        res.n_tests += counts[k];
        res.initial_stats(slot.i, slot.j) = res.initial_stats(slot.j, slot.i) =
            slot.out.result.statistic;
        res.initial_logp(slot.i, slot.j) = res.initial_logp(slot.j, slot.i) =
            slot.out.result.log_pvalue;
        if (significant(slot.out, log_alpha)) res.skeleton.set_edge(slot.i, slot.j, true);
    }

    // Levels k >= 1: ordered pairs sorted by ascending unconditional
    // association (test the least dependent pairs first), conditioning on
    // subsets of the strongest-associated current neighbours.
    for (int k = 1; k <= cfg.max_k; ++k) {
        std::vector<std::pair<int, int>> ordered;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j && res.skeleton.has_edge(i, j)) ordered.push_back({i, j});
        std::sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
            const double sa = res.initial_stats(a.first, a.second);
            const double sb = res.initial_stats(b.first, b.second);
            if (sa != sb) return sa < sb;
            return a < b;
        });

        bool any_supported = false;
        for (const auto& [i, j] : ordered) {
            if (!res.skeleton.has_edge(i, j)) continue;  // removed earlier this level
            std::vector<int> nbrs = res.skeleton.neighbors(i);
            nbrs.erase(std::remove(nbrs.begin(), nbrs.end(), j), nbrs.end());
            if (static_cast<int>(nbrs.size()) < k) continue;
            any_supported = true;
            std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
                const double sa = res.initial_stats(i, a);
                const double sb = res.initial_stats(i, b);
                if (sa != sb) return sa > sb;  // strongest first
                return a < b;
            });

            bool removed = false;
            std::vector<int> pick(static_cast<size_t>(k));
            std::function<void(int, int)> rec = [&](int start, int depth) {
                if (removed) return;
                if (depth == k) {
                    std::vector<int> zset = pick;
                    std::sort(zset.begin(), zset.end());
                    ++res.n_tests;
                    if (cfg.on_test) cfg.on_test(i, j, k);
                    const auto out = engine.test(i, j, zset);
                    // A non-informative test must not delete the edge.
                    if (out.informative && out.result.log_pvalue >= log_alpha) {
                        res.skeleton.set_edge(i, j, false);
                        removed = true;
                    }
                    return;
                }
                for (int p = start; p < static_cast<int>(nbrs.size()); ++p) {
                    pick[static_cast<size_t>(depth)] = nbrs[static_cast<size_t>(p)];
                    rec(p + 1, depth + 1);
                    if (removed) return;
                }
            };
            rec(0, 0);
        }
        if (!any_supported) break;
    }
    res.runtime = seconds_since(t0);
    return res;
}

SkeletonResult fedhc_skeleton(const ContinuousDataset& data, const SkeletonConfig& cfg,
                              std::optional<CorrelationMatrix> R) {
    return fedhc_skeleton(CiEngine(data, cfg.test, std::move(R), cfg.null_ref), cfg);
}
SkeletonResult fedhc_skeleton(const CategoricalDataset& data, const SkeletonConfig& cfg) {
    return fedhc_skeleton(CiEngine(data, cfg.test), cfg);
}
SkeletonResult mmhc_skeleton(const ContinuousDataset& data, const SkeletonConfig& cfg,
                             std::optional<CorrelationMatrix> R) {
    return mmhc_skeleton(CiEngine(data, cfg.test, std::move(R), cfg.null_ref), cfg);
}
SkeletonResult mmhc_skeleton(const CategoricalDataset& data, const SkeletonConfig& cfg) {
    return mmhc_skeleton(CiEngine(data, cfg.test), cfg);
}
SkeletonResult pchc_skeleton(const ContinuousDataset& data, const SkeletonConfig& cfg,
                             std::optional<CorrelationMatrix> R) {
    return pchc_skeleton(CiEngine(data, cfg.test, std::move(R), cfg.null_ref), cfg);
}
SkeletonResult pchc_skeleton(const CategoricalDataset& data, const SkeletonConfig& cfg) {
    return pchc_skeleton(CiEngine(data, cfg.test), cfg);
}

}  // namespace fedhc
