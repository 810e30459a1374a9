// fedhc: hybrid Bayesian-network structure learning from the command line.
//
// Subcommands:
//   learn     fit a BN to a CSV dataset (FEDHC / PCHC / MMHC-2)
//   outliers  RMCD outlier report for a continuous CSV
//   simulate  draw a random Gaussian BN and a sample from it
//   bench     Monte-Carlo comparison harness, CSV output

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedhc/ci.hpp"
#include "fedhc/dataset.hpp"
#include "fedhc/errors.hpp"
#include "fedhc/graph.hpp"
#include "fedhc/metrics.hpp"
#include "fedhc/robust.hpp"
#include "fedhc/score.hpp"
#include "fedhc/simulate.hpp"
#include "fedhc/skeleton.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConstraints = 3;
constexpr int kExitInternal = 4;

struct LearnOptions {
    std::string input;
    std::string algorithm = "fedhc";
    std::string method = "pearson";
    double alpha = 0.05;
    bool robust = false;
    int restart = 10;
    std::string score;  // default depends on method
    std::string blacklist_path;
    std::string whitelist_path;
    int max_k = 3;
    int fbed_runs = 0;
    uint64_t seed = 0;
    int threads = 0;
    bool tabu = false;
    std::string null_ref = "normal";
    std::string out_dot;
    std::string out_json;
    std::string report;
    std::string corr_matrix;
    std::string out_corr;
};

fedhc::CiTestKind test_kind(const std::string& method) {
    if (method == "pearson") return fedhc::CiTestKind::pearson;
    if (method == "spearman") return fedhc::CiTestKind::spearman;
    if (method == "cat") return fedhc::CiTestKind::g2;
    throw fedhc::InputError("unknown method: " + method);
}

fedhc::ScoreSpec score_spec(const std::string& name, bool categorical) {
    fedhc::ScoreSpec spec;
    std::string s = name;
    if (s.empty()) s = categorical ? "bic" : "bic-g";
    if (s == "bic-g") spec.name = fedhc::ScoreName::bic_g;
    else if (s == "loglik-g") spec.name = fedhc::ScoreName::loglik_g;
    else if (s == "aic-g") spec.name = fedhc::ScoreName::aic_g;
    else if (s == "bic") spec.name = fedhc::ScoreName::bic_cat;
    else if (s == "loglik") spec.name = fedhc::ScoreName::loglik_cat;
    else if (s == "bde" || s == "bdeu") spec.name = fedhc::ScoreName::bdeu;
    else throw fedhc::InputError("unknown score: " + s);
    const bool is_cat_score = spec.name == fedhc::ScoreName::bic_cat ||
                              spec.name == fedhc::ScoreName::loglik_cat ||
                              spec.name == fedhc::ScoreName::bdeu;
    if (is_cat_score != categorical)
        throw fedhc::InputError("score '" + s + "' does not fit method family");
    return spec;
}

// Two-column from,to CSV, names resolved against the dataset header.
std::set<fedhc::Edge> load_arrow_list(const std::string& path,
                                      const std::vector<std::string>& names) {
    std::map<std::string, int> index;
    for (size_t j = 0; j < names.size(); ++j) index[names[j]] = static_cast<int>(j);
    const auto rows = fedhc::read_csv_rows(path);
    if (rows.front().size() != 2)
        throw fedhc::InputError(path + ": expected two columns (from,to)");
    std::set<fedhc::Edge> out;
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto from = index.find(row[0]);
        auto to = index.find(row[1]);
        if (from == index.end())
            throw fedhc::InputError(path + ":" + std::to_string(r + 1) +
                                    ": unknown variable '" + row[0] + "'");
        if (to == index.end())
            throw fedhc::InputError(path + ":" + std::to_string(r + 1) +
                                    ": unknown variable '" + row[1] + "'");
        if (from->second == to->second)
            throw fedhc::InputError(path + ":" + std::to_string(r + 1) + ": self loop");
        out.insert({from->second, to->second});
    }
    return out;
}

fedhc::CorrelationMatrix load_corr_matrix(const std::string& path, int d,
                                          fedhc::CorrelationKind kind) {
    const auto rows = fedhc::read_csv_rows(path);
    if (static_cast<int>(rows.size()) != d + 1 || static_cast<int>(rows.front().size()) != d)
        throw fedhc::InputError(path + ": expected a " + std::to_string(d) + "x" +
                                std::to_string(d) + " matrix with header");
    fedhc::CorrelationMatrix corr;
    corr.kind = kind;
    corr.R.resize(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            try {
                corr.R(i, j) = std::stod(rows[static_cast<size_t>(i + 1)][static_cast<size_t>(j)]);
            } catch (const std::exception&) {
                throw fedhc::ParseError(path, i + 2, j + 1, "not a number");
            }
        }
    return corr;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw fedhc::InputError("cannot write file: " + path);
    out << text;
}

void write_corr_csv(const std::string& path, const fedhc::CorrelationMatrix& corr,
                    const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw fedhc::InputError("cannot write file: " + path);
    out.precision(17);
    for (size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << "\n";
    for (long i = 0; i < corr.R.rows(); ++i) {
        for (long j = 0; j < corr.R.cols(); ++j) out << (j ? "," : "") << corr.R(i, j);
        out << "\n";
    }
}

int cmd_learn(const LearnOptions& opt) {
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const bool categorical = opt.method == "cat";
    if (opt.robust && categorical)
        throw fedhc::InputError("--robust applies to continuous data only");
    if (opt.robust && !opt.corr_matrix.empty())
        throw fedhc::InputError("--corr-matrix cannot be combined with --robust "
                                "(the matrix belongs to the raw rows)");

    fedhc::SkeletonConfig skel_cfg;
    skel_cfg.alpha = opt.alpha;
    skel_cfg.max_k = opt.max_k;
    skel_cfg.fbed_runs = opt.fbed_runs;
    skel_cfg.test = test_kind(opt.method);
    skel_cfg.threads = opt.threads;
    skel_cfg.null_ref = opt.null_ref == "t" ? fedhc::NullReference::student_t
                                            : fedhc::NullReference::normal;
    fedhc::SearchConfig search_cfg;
    search_cfg.restarts = opt.restart;
    search_cfg.seed = opt.seed;
    const fedhc::ScoreSpec spec = score_spec(opt.score, categorical);

    auto run_skeleton = [&](const fedhc::CiEngine& engine) {
        if (opt.algorithm == "fedhc") return fedhc::fedhc_skeleton(engine, skel_cfg);
        if (opt.algorithm == "pchc") return fedhc::pchc_skeleton(engine, skel_cfg);
        if (opt.algorithm == "mmhc") return fedhc::mmhc_skeleton(engine, skel_cfg);
        throw fedhc::InputError("unknown algorithm: " + opt.algorithm);
    };

    const fedhc::Dataset loaded = fedhc::load_csv(
        opt.input, categorical ? fedhc::CsvMode::categorical : fedhc::CsvMode::continuous);

    std::vector<std::string> names;
    long rows_total = 0, rows_used = 0;
    fedhc::SkeletonResult skel{};
    fedhc::LearnedBn learned;
    std::optional<fedhc::CorrelationMatrix> corr_used;

    if (categorical) {
        const auto& data = std::get<fedhc::CategoricalDataset>(loaded);
        names = data.names();
        rows_total = rows_used = data.n();
        const fedhc::CiEngine engine(data, skel_cfg.test);
        skel = run_skeleton(engine);
        const fedhc::LocalScorer scorer(data, spec);
        const fedhc::EdgeConstraints constraints(
            opt.blacklist_path.empty() ? std::set<fedhc::Edge>{}
                                       : load_arrow_list(opt.blacklist_path, names),
            opt.whitelist_path.empty() ? std::set<fedhc::Edge>{}
                                       : load_arrow_list(opt.whitelist_path, names));
        learned = opt.tabu ? fedhc::tabu_search(skel.skeleton, scorer, constraints, search_cfg)
                           : fedhc::hc_search(skel.skeleton, scorer, constraints, search_cfg);
    } else {
        const auto* data = &std::get<fedhc::ContinuousDataset>(loaded);
        names = data->names();
        rows_total = data->n();
        std::optional<fedhc::CleanedDataset> cleaned;
        long removed = 0;
        if (opt.robust) {
            const fedhc::OutlierReport report = fedhc::rmcd_outliers(*data, opt.seed,
                                                                     opt.threads);
            removed = static_cast<long>(report.outlier_indices.size());
            cleaned = fedhc::remove_outliers(*data, report);
            data = &cleaned->data;
        }
        rows_used = data->n();
        (void)removed;
        std::optional<fedhc::CorrelationMatrix> pre;
        const fedhc::CorrelationKind kind = skel_cfg.test == fedhc::CiTestKind::pearson
                                                ? fedhc::CorrelationKind::pearson
                                                : fedhc::CorrelationKind::spearman;
        if (!opt.corr_matrix.empty())
            pre = load_corr_matrix(opt.corr_matrix, data->dim(), kind);
        const fedhc::CiEngine engine(*data, skel_cfg.test, pre, skel_cfg.null_ref);
        corr_used = engine.correlation();
        skel = run_skeleton(engine);
        const fedhc::LocalScorer scorer(*data, spec);
        const fedhc::EdgeConstraints constraints(
            opt.blacklist_path.empty() ? std::set<fedhc::Edge>{}
                                       : load_arrow_list(opt.blacklist_path, names),
            opt.whitelist_path.empty() ? std::set<fedhc::Edge>{}
                                       : load_arrow_list(opt.whitelist_path, names));
        learned = opt.tabu ? fedhc::tabu_search(skel.skeleton, scorer, constraints, search_cfg)
                           : fedhc::hc_search(skel.skeleton, scorer, constraints, search_cfg);
    }

    const double total_seconds =
        std::chrono::duration<double>(Clock::now() - t0).count();

    if (!opt.out_dot.empty()) write_text(opt.out_dot, fedhc::graph_to_dot(learned.dag, names));
    if (!opt.out_json.empty())
        write_text(opt.out_json, fedhc::graph_to_json(learned.dag, names));
    if (!opt.out_corr.empty()) {
        if (!corr_used) throw fedhc::InputError("--out-corr applies to continuous data only");
        write_corr_csv(opt.out_corr, *corr_used, names);
    }

    nlohmann::ordered_json report;
    report["algorithm"] = opt.algorithm;
    report["method"] = opt.method;
    report["score"] = opt.score.empty() ? (categorical ? "bic" : "bic-g") : opt.score;
    report["search"] = opt.tabu ? "tabu" : "hc";
    report["alpha"] = opt.alpha;
    report["seed"] = opt.seed;
    report["n_rows"] = rows_total;
    report["n_rows_used"] = rows_used;
    report["rows_removed"] = rows_total - rows_used;
    report["D"] = static_cast<int>(names.size());
    report["edges_skeleton"] = skel.skeleton.edge_count();
    report["arrows"] = learned.dag.arrow_count();
    report["score_value"] = learned.score;
    report["n_tests"] = skel.n_tests;
    report["local_scores_evaluated"] = learned.local_scores_evaluated;
    report["skeleton_seconds"] = skel.runtime;
    report["search_seconds"] = learned.runtime;
    report["total_seconds"] = total_seconds;
    if (!opt.report.empty()) write_text(opt.report, report.dump(2) + "\n");

    std::cout << "learned " << learned.dag.arrow_count() << " arrows over "
              << report["D"].get<int>() << " variables (skeleton "
              << skel.skeleton.edge_count() << " edges, " << skel.n_tests << " CI tests)\n"
              << "score " << learned.score << ", rows used " << rows_used << "/" << rows_total
              << ", " << total_seconds << " s\n";
    return kExitOk;
}

struct OutlierOptions {
    std::string input;
    uint64_t seed = 0;
    int threads = 0;
    std::string out;
};

int cmd_outliers(const OutlierOptions& opt) {
    const fedhc::Dataset loaded = fedhc::load_csv(opt.input, fedhc::CsvMode::continuous);
    const auto& data = std::get<fedhc::ContinuousDataset>(loaded);
    const fedhc::OutlierReport report = fedhc::rmcd_outliers(data, opt.seed, opt.threads);

    std::ostringstream csv;
    csv.precision(17);
    csv << "index,distance,weight,flagged\n";
    std::vector<uint8_t> flagged(static_cast<size_t>(data.n()), 0);
    for (long i : report.outlier_indices) flagged[static_cast<size_t>(i)] = 1;
    for (long i = 0; i < data.n(); ++i)
        csv << i << ',' << report.distances[i] << ',' << report.weights[static_cast<size_t>(i)]
            << ',' << static_cast<int>(flagged[static_cast<size_t>(i)]) << "\n";
    if (opt.out.empty())
        std::cout << csv.str();
    else
        write_text(opt.out, csv.str());

    std::cerr << "flagged " << report.outlier_indices.size() << " of " << data.n()
              << " rows (w=" << report.w << ", cutoffs " << report.cutoff_w1 << " / "
              << report.cutoff_w0 << ")\n";
    return kExitOk;
}

struct SimulateOptions {
    int D = 20;
    double avg_neighbors = 3.0;
    long n = 1000;
    uint64_t seed = 0;
    std::string out_data;
    std::string out_dag;
    std::string out_cpdag;
};

int cmd_simulate(const SimulateOptions& opt) {
    const fedhc::Dag dag = fedhc::random_dag(opt.D, opt.avg_neighbors, opt.seed);
    const fedhc::GaussianBn bn = fedhc::random_gaussian_bn(dag, opt.seed + 1);
    const fedhc::ContinuousDataset data = fedhc::sample_gaussian(bn, opt.n, opt.seed + 2);
    if (!opt.out_data.empty()) fedhc::write_csv(opt.out_data, data);
    if (!opt.out_dag.empty())
        write_text(opt.out_dag, fedhc::graph_to_json(dag, data.names()));
    if (!opt.out_cpdag.empty())
        write_text(opt.out_cpdag, fedhc::graph_to_json(fedhc::dag_to_cpdag(dag), data.names()));
    std::cout << "simulated " << opt.n << " rows over " << opt.D << " variables, "
              << dag.arrow_count() << " true arrows\n";
    return kExitOk;
}

struct BenchOptions {
    int D = 20;
    double avg_neighbors = 3.0;
    std::vector<long> sample_sizes;
    int replicates = 1;
    std::string algorithms = "fedhc,pchc,mmhc";
    double alpha = 0.05;
    int max_k = 3;
    int restart = 10;
    uint64_t seed = 0;
    int threads = 1;
    std::string out;
};

int cmd_bench(const BenchOptions& opt) {
    fedhc::BenchScenario scenario;
    scenario.D = opt.D;
    scenario.avg_neighbors = opt.avg_neighbors;
    scenario.sample_sizes = opt.sample_sizes;
    scenario.replicates = opt.replicates;
    scenario.seed = opt.seed;
    scenario.threads = opt.threads;
    scenario.skeleton.alpha = opt.alpha;
    scenario.skeleton.max_k = opt.max_k;
    scenario.search.restarts = opt.restart;
    std::stringstream algs(opt.algorithms);
    std::string tok;
    while (std::getline(algs, tok, ',')) scenario.algorithms.push_back(tok);

    std::ofstream file;
    std::ostream* stream = &std::cout;
    if (!opt.out.empty()) {
        file.open(opt.out);
        if (!file) throw fedhc::InputError("cannot write file: " + opt.out);
        stream = &file;
    }
    (*stream) << fedhc::bench_csv_header() << "\n";
    fedhc::run_benchmark(scenario, stream);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FEDHC hybrid Bayesian-network structure learning"};
    app.require_subcommand(1);

    LearnOptions learn;
    auto* learn_cmd = app.add_subcommand("learn", "fit a Bayesian network to a CSV dataset");
    learn_cmd->add_option("input", learn.input, "dataset CSV (header row required)")
        ->required();
    learn_cmd->add_option("--algorithm", learn.algorithm, "fedhc|pchc|mmhc")
        ->check(CLI::IsMember({"fedhc", "pchc", "mmhc"}));
    learn_cmd->add_option("--method", learn.method, "pearson|spearman|cat")
        ->check(CLI::IsMember({"pearson", "spearman", "cat"}));
    learn_cmd->add_option("--alpha", learn.alpha, "significance level")
        ->check(CLI::Range(1e-12, 0.999999));
    learn_cmd->add_flag("--robust", learn.robust, "remove RMCD outliers first");
    learn_cmd->add_option("--restart", learn.restart, "random restarts for the HC search");
    learn_cmd->add_option("--score", learn.score,
                          "bic-g|loglik-g|aic-g (continuous), bic|loglik|bde (categorical)");
    learn_cmd->add_option("--blacklist", learn.blacklist_path, "forbidden arrows CSV (from,to)");
    learn_cmd->add_option("--whitelist", learn.whitelist_path, "required arrows CSV (from,to)");
    learn_cmd->add_option("--max-k", learn.max_k, "conditioning cap for mmhc/pchc");
    learn_cmd->add_option("--fbed-runs", learn.fbed_runs, "extra FBED sweeps");
    learn_cmd->add_option("--seed", learn.seed, "RNG seed");
    learn_cmd->add_option("--threads", learn.threads, "worker cap (0 = hardware)");
    learn_cmd->add_flag("--tabu", learn.tabu, "use tabu search instead of restarts");
    learn_cmd->add_option("--null-ref", learn.null_ref, "normal|t reference for Fisher-z")
        ->check(CLI::IsMember({"normal", "t"}));
    learn_cmd->add_option("--out-dot", learn.out_dot, "write the learned DAG as DOT");
    learn_cmd->add_option("--out-json", learn.out_json, "write the learned DAG as JSON");
    learn_cmd->add_option("--report", learn.report, "write the run report JSON");
    learn_cmd->add_option("--corr-matrix", learn.corr_matrix,
                          "reuse a precomputed correlation matrix CSV");
    learn_cmd->add_option("--out-corr", learn.out_corr,
                          "write the correlation matrix used (continuous)");

    OutlierOptions outliers;
    auto* outliers_cmd =
        app.add_subcommand("outliers", "RMCD outlier report for a continuous CSV");
    outliers_cmd->add_option("input", outliers.input, "dataset CSV")->required();
    outliers_cmd->add_option("--seed", outliers.seed, "RNG seed");
    outliers_cmd->add_option("--threads", outliers.threads, "worker cap (0 = hardware)");
    outliers_cmd->add_option("--out", outliers.out, "report CSV path (default stdout)");

    SimulateOptions simulate;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "sample a random Gaussian BN and dataset");
    simulate_cmd->add_option("--D", simulate.D, "variable count")->required();
    simulate_cmd->add_option("--avg-neighbors", simulate.avg_neighbors,
                             "expected neighbours per node");
    simulate_cmd->add_option("--n", simulate.n, "rows to sample")->required();
    simulate_cmd->add_option("--seed", simulate.seed, "RNG seed");
    simulate_cmd->add_option("--out-data", simulate.out_data, "dataset CSV path");
    simulate_cmd->add_option("--out-dag", simulate.out_dag, "true DAG JSON path");
    simulate_cmd->add_option("--out-cpdag", simulate.out_cpdag, "true CPDAG JSON path");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Monte-Carlo benchmark harness");
    bench_cmd->add_option("--D", bench.D, "variable count");
    bench_cmd->add_option("--avg-neighbors", bench.avg_neighbors,
                          "expected neighbours per node");
    bench_cmd->add_option("--n", bench.sample_sizes, "sample sizes (repeatable)")->required();
    bench_cmd->add_option("--replicates", bench.replicates, "replicates per configuration");
    bench_cmd->add_option("--algorithms", bench.algorithms, "comma list: fedhc,pchc,mmhc");
    bench_cmd->add_option("--alpha", bench.alpha, "significance level");
    bench_cmd->add_option("--max-k", bench.max_k, "conditioning cap for mmhc/pchc");
    bench_cmd->add_option("--restart", bench.restart, "random restarts for the HC search");
    bench_cmd->add_option("--seed", bench.seed, "RNG seed");
    bench_cmd->add_option("--threads", bench.threads, "replicates in flight");
    bench_cmd->add_option("--out", bench.out, "output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
        if (*learn_cmd) return cmd_learn(learn);
        if (*outliers_cmd) return cmd_outliers(outliers);
        if (*simulate_cmd) return cmd_simulate(simulate);
        if (*bench_cmd) return cmd_bench(bench);
        return kExitInput;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    } catch (const fedhc::InconsistentConstraints& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConstraints;
    } catch (const fedhc::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const fedhc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const fedhc::InvariantViolation& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
