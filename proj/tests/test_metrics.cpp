#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "fedhc/errors.hpp"
#include "fedhc/metrics.hpp"
#include "fedhc/simulate.hpp"

using namespace fedhc;

namespace {

// Enumerate all DAGs on d labelled nodes (d <= 4: 543 graphs).
std::vector<Dag> all_dags(int d) {
    std::vector<Edge> slots;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) slots.push_back({i, j});
    std::vector<Dag> out;
    const size_t m = slots.size();
    for (uint64_t mask = 0; mask < (1ULL << m); ++mask) {
        Dag g(d);
        bool two_cycle = false;
        for (size_t k = 0; k < m && !two_cycle; ++k) {
            if (!(mask & (1ULL << k))) continue;
            const auto [i, j] = slots[k];
            if (g.has_arrow(j, i)) two_cycle = true;
            else g.add_arrow(i, j);
        }
        if (!two_cycle && g.is_acyclic()) out.push_back(g);
    }
    return out;
}

// (skeleton, v-structures) signature of a DAG: the Markov-equivalence key.
std::pair<std::set<Edge>, std::set<std::tuple<int, int, int>>> equivalence_key(const Dag& g) {
    std::set<Edge> skel;
    for (const auto& [i, j] : g.arrows()) skel.insert({std::min(i, j), std::max(i, j)});
    std::set<std::tuple<int, int, int>> vstructs;
    const int d = g.dim();
    for (int k = 0; k < d; ++k) {
        const auto parents = g.parents(k);
        for (size_t a = 0; a < parents.size(); ++a)
            for (size_t b = a + 1; b < parents.size(); ++b) {
                const int i = std::min(parents[a], parents[b]);
                const int j = std::max(parents[a], parents[b]);
                if (!skel.count({i, j})) vstructs.insert({i, k, j});
            }
    }
    return {skel, vstructs};
}

// Oracle CPDAG: union of the orientations over the brute-force equivalence
// class.
Cpdag oracle_cpdag(const Dag& g, const std::vector<Dag>& universe) {
    const auto key = equivalence_key(g);
    Cpdag out;
    out.d = g.dim();
    std::map<Edge, std::set<int>> directions;  // (min,max) -> set of orientations seen
    for (const Dag& other : universe) {
        if (equivalence_key(other) != key) continue;
        for (const auto& [i, j] : other.arrows()) {
            const Edge e{std::min(i, j), std::max(i, j)};
            directions[e].insert(i < j ? 0 : 1);
        }
    }
    for (const auto& [e, dirs] : directions) {
        if (dirs.size() == 2) out.undirected.insert(e);
        else if (dirs.count(0)) out.directed.insert(e);
        else out.directed.insert({e.second, e.first});
    }
    return out;
}

}  // namespace

TEST_CASE("dag_to_cpdag handles the canonical small cases") {
    // V-structure stays directed.
    Dag v(3);
    v.add_arrow(0, 2);
    v.add_arrow(1, 2);
    const Cpdag cv = dag_to_cpdag(v);
    CHECK(cv.directed == std::set<Edge>{{0, 2}, {1, 2}});
    CHECK(cv.undirected.empty());

    // Chain loses both orientations.
    Dag chain(3);
    chain.add_arrow(0, 1);
    chain.add_arrow(1, 2);
    const Cpdag cc = dag_to_cpdag(chain);
    CHECK(cc.directed.empty());
    CHECK(cc.undirected == std::set<Edge>{{0, 1}, {1, 2}});

    // Single edge is reversible.
    Dag one(2);
    one.add_arrow(0, 1);
    const Cpdag co = dag_to_cpdag(one);
    CHECK(co.directed.empty());
    CHECK(co.undirected == std::set<Edge>{{0, 1}});
}

TEST_CASE("dag_to_cpdag matches the enumeration oracle on every DAG up to 4 nodes") {
    for (int d = 2; d <= 4; ++d) {
        const std::vector<Dag> universe = all_dags(d);
        if (d == 4) CHECK(universe.size() == 543);
        for (const Dag& g : universe) {
            const Cpdag got = dag_to_cpdag(g);
            const Cpdag want = oracle_cpdag(g, universe);
            CHECK(got == want);
        }
    }
}

TEST_CASE("equivalent DAGs map to the identical CPDAG and conversion is stable") {
    const std::vector<Dag> universe = all_dags(4);
    std::map<std::pair<std::set<Edge>, std::set<std::tuple<int, int, int>>>, Cpdag> seen;
    for (const Dag& g : universe) {
        const Cpdag c = dag_to_cpdag(g);
        const auto key = equivalence_key(g);
        auto it = seen.find(key);
        if (it == seen.end()) seen.emplace(key, c);
        else CHECK(it->second == c);
        // Skeleton and v-structures preserved by the conversion.
        std::set<Edge> cpdag_skel;
        for (const auto& [i, j] : c.directed) cpdag_skel.insert({std::min(i, j), std::max(i, j)});
        for (const auto& e : c.undirected) cpdag_skel.insert(e);
        CHECK(cpdag_skel == key.first);
    }
}

TEST_CASE("shd counts one edit per differing pair state") {
    Dag a(3);
    a.add_arrow(0, 2);
    a.add_arrow(1, 2);
    const Cpdag ca = dag_to_cpdag(a);
    CHECK(shd(ca, ca) == 0);

    // Truth A->B (as part of a v-structure so the arrow is compelled),
    // estimate undirected: one orientation edit.
    Dag est(3);
    est.add_arrow(0, 2);
    const Cpdag ce = dag_to_cpdag(est);  // single edge: undirected
    // ca has 0->2, 1->2 directed; ce has 0-2 undirected. Pairs: (0,2) one
    // orientation edit, (1,2) one insertion.
    CHECK(shd(ce, ca) == 2);

    Cpdag empty;
    empty.d = 3;
    CHECK(shd(empty, ca) == 2);
    CHECK(shd(ca, empty) == 2);
}

TEST_CASE("shd is a metric on the 4-node CPDAG universe") {
    const std::vector<Dag> universe = all_dags(4);
    std::vector<Cpdag> cpdags;
    std::set<std::pair<std::set<Edge>, std::set<Edge>>> distinct;
    for (const Dag& g : universe) {
        const Cpdag c = dag_to_cpdag(g);
        if (distinct.insert({c.directed, c.undirected}).second) cpdags.push_back(c);
    }
    CHECK(cpdags.size() == 185);

    for (size_t a = 0; a < cpdags.size(); ++a) {
        CHECK(shd(cpdags[a], cpdags[a]) == 0);
        for (size_t b = a + 1; b < cpdags.size(); ++b) {
            const int ab = shd(cpdags[a], cpdags[b]);
            CHECK(ab == shd(cpdags[b], cpdags[a]));  // symmetry
            CHECK(ab > 0);                           // identity of indiscernibles
        }
    }
    // Triangle inequality on a pseudo-random third of the triples.
    size_t counter = 0;
    for (size_t a = 0; a < cpdags.size(); ++a)
        for (size_t b = a + 1; b < cpdags.size(); ++b)
            for (size_t c = b + 1; c < cpdags.size(); ++c) {
                if (++counter % 3 != 0) continue;
                const int ab = shd(cpdags[a], cpdags[b]);
                const int bc = shd(cpdags[b], cpdags[c]);
                const int ac = shd(cpdags[a], cpdags[c]);
                CHECK(ac <= ab + bc);
            }
}

TEST_CASE("skeleton precision/recall/f1") {
    Skeleton truth(4);
    truth.set_edge(0, 1, true);
    truth.set_edge(1, 2, true);
    truth.set_edge(2, 3, true);
    truth.set_edge(0, 3, true);

    const SkeletonMetrics perfect = skeleton_metrics(truth, truth);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    Skeleton empty(4);
    const SkeletonMetrics none = skeleton_metrics(empty, truth);
    CHECK(none.precision == 1.0);  // empty-estimate convention
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);
    const SkeletonMetrics both_empty = skeleton_metrics(empty, Skeleton(4));
    CHECK(both_empty.precision == 1.0);
    CHECK(both_empty.recall == 1.0);
    CHECK(both_empty.f1 == 1.0);

    Skeleton est(4);
    est.set_edge(0, 1, true);
    est.set_edge(1, 2, true);
    est.set_edge(2, 3, true);
    est.set_edge(1, 3, true);  // one wrong, three right
    const SkeletonMetrics m = skeleton_metrics(est, truth);
    CHECK(m.precision == doctest::Approx(0.75));
    CHECK(m.recall == doctest::Approx(0.75));
    CHECK(m.f1 == doctest::Approx(0.75));
}

TEST_CASE("run_benchmark: record shape, determinism and CSV") {
    BenchScenario scenario;
    scenario.D = 8;
    scenario.avg_neighbors = 2.0;
    scenario.sample_sizes = {500};
    scenario.replicates = 1;
    scenario.algorithms = {"fedhc"};
    scenario.seed = 42;
    scenario.search.restarts = 2;

    std::ostringstream csv;
    const auto records = run_benchmark(scenario, &csv);
    REQUIRE(records.size() == 1);
    const BenchRecord& r = records.front();
    CHECK(r.algorithm == "fedhc");
    CHECK(r.D == 8);
    CHECK(r.n == 500);
    CHECK(r.shd >= 0);
    CHECK(r.n_tests >= 8 * 7 / 2);
    CHECK(r.total_seconds >= r.skeleton_seconds);
    CHECK(csv.str().find("fedhc,8,2,500,") != std::string::npos);

    // Same seeds, same shd/n_tests.
    const auto again = run_benchmark(scenario, nullptr);
    CHECK(again.front().shd == r.shd);
    CHECK(again.front().n_tests == r.n_tests);
    CHECK(again.front().seed == r.seed);

    CHECK(bench_csv_header() ==
          "algorithm,D,avg_neighbors,n,seed,shd,n_tests,skeleton_seconds,total_seconds");

    // All algorithms, two sizes, sorted output.
    scenario.algorithms = {"fedhc", "pchc", "mmhc"};
    scenario.sample_sizes = {300, 600};
    scenario.replicates = 2;
    const auto full = run_benchmark(scenario, nullptr);
    CHECK(full.size() == 12);
    for (size_t k = 1; k < full.size(); ++k) {
        const auto ka = std::tuple(full[k - 1].algorithm, full[k - 1].n, full[k - 1].seed);
        const auto kb = std::tuple(full[k].algorithm, full[k].n, full[k].seed);
        CHECK(ka <= kb);
    }
    CHECK_THROWS_AS(
        run_benchmark(BenchScenario{.D = 5,
                                    .avg_neighbors = 2,
                                    .sample_sizes = {100},
                                    .replicates = 1,
                                    .algorithms = {"nope"},
                                    .seed = 0,
                                    .skeleton = {},
                                    .score = {},
                                    .search = {},
                                    .threads = 1},
                      nullptr),
        InputError);
}

TEST_CASE("benchmark records are identical across thread counts") {
    BenchScenario scenario;
    scenario.D = 7;
    scenario.avg_neighbors = 2.0;
    scenario.sample_sizes = {400};
    scenario.replicates = 4;
    scenario.algorithms = {"fedhc", "mmhc"};
    scenario.seed = 7;
    scenario.search.restarts = 1;
    scenario.threads = 1;
    const auto seq = run_benchmark(scenario, nullptr);
    scenario.threads = 2;
    const auto par = run_benchmark(scenario, nullptr);
    REQUIRE(seq.size() == par.size());
    for (size_t k = 0; k < seq.size(); ++k) {
        CHECK(seq[k].shd == par[k].shd);
        CHECK(seq[k].n_tests == par[k].n_tests);
        CHECK(seq[k].seed == par[k].seed);
        CHECK(seq[k].algorithm == par[k].algorithm);
    }
}
