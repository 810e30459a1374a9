#include "fedhc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedhc/errors.hpp"

namespace fedhc {

namespace {

std::vector<std::string> default_names(int d) {
    std::vector<std::string> names(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) names[static_cast<size_t>(j)] = "V" + std::to_string(j + 1);
    return names;
}

// Strides for parent configurations: first parent (by index) fastest.
std::vector<long> parent_strides(const CategoricalBn& bn, const std::vector<int>& parents,
                                 long& q_out) {
    std::vector<long> stride(parents.size());
    long q = 1;
    for (size_t k = 0; k < parents.size(); ++k) {
        stride[k] = q;
        q *= bn.levels[static_cast<size_t>(parents[k])];
    }
    q_out = q;
    return stride;
}

}  // namespace

Dag random_dag(int d, double avg_neighbors, uint64_t seed) {
    if (d < 2) throw InputError("random_dag needs D >= 2");
    if (!(avg_neighbors > 0.0) || avg_neighbors >= static_cast<double>(d - 1))
        throw InputError("random_dag needs avg_neighbors in (0, D-1)");
    std::mt19937_64 rng(seed);
    std::vector<int> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const double p = avg_neighbors / static_cast<double>(d - 1);
    std::bernoulli_distribution coin(p);
    Dag g(d);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            if (coin(rng)) g.add_arrow(order[static_cast<size_t>(a)],
                                       order[static_cast<size_t>(b)]);
    return g;
}

GaussianBn random_gaussian_bn(const Dag& dag, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution sign(0.5);
    GaussianBn bn;
    bn.dag = dag;
    const int d = dag.dim();
    bn.beta = Eigen::MatrixXd::Zero(d, d);
    bn.intercepts = Eigen::VectorXd::Zero(d);
    bn.noise_sd = Eigen::VectorXd::Ones(d);
    for (const auto& [i, j] : dag.arrows())
        bn.beta(i, j) = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    return bn;
}

ContinuousDataset sample_gaussian(const GaussianBn& bn, long n, uint64_t seed) {
    if (n < 1) throw InputError("sample_gaussian needs n >= 1");
    const int d = bn.dag.dim();
    if (bn.beta.rows() != d || bn.beta.cols() != d || bn.intercepts.size() != d ||
        bn.noise_sd.size() != d)
        throw InputError("GaussianBn fields do not match its DAG dimension");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if ((bn.beta(i, j) != 0.0) != bn.dag.has_arrow(i, j))
                throw InputError("GaussianBn has a coefficient/arrow mismatch");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd values(n, d);
    for (int v : topological_order(bn.dag)) {
        Eigen::VectorXd col(n);
        for (long r = 0; r < n; ++r) col[r] = gauss(rng);
        col *= bn.noise_sd[v];
        col.array() += bn.intercepts[v];
        for (int p : bn.dag.parents(v)) col += bn.beta(p, v) * values.col(p);
        values.col(v) = col;
    }
    return ContinuousDataset(std::move(values), default_names(d));
}

CategoricalDataset sample_categorical(const CategoricalBn& bn, long n, uint64_t seed) {
    if (n < 1) throw InputError("sample_categorical needs n >= 1");
    const int d = bn.dag.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXi codes(n, d);
    for (int v : topological_order(bn.dag)) {
        const std::vector<int> parents = bn.dag.parents(v);
        long q = 0;
        const std::vector<long> stride = parent_strides(bn, parents, q);
        const int r = bn.levels[static_cast<size_t>(v)];
        const auto& cpt = bn.cpts[static_cast<size_t>(v)];
        if (static_cast<long>(cpt.size()) != q * r)
            throw InputError("CPT size mismatch for node " + std::to_string(v));
        for (long row = 0; row < n; ++row) {
            long cfg = 0;
            for (size_t k = 0; k < parents.size(); ++k)
                cfg += stride[k] * codes(row, parents[k]);
            const double u = unif(rng);
            double acc = 0.0;
            int drawn = r - 1;
            for (int level = 0; level < r; ++level) {
                acc += cpt[static_cast<size_t>(cfg * r + level)];
                if (u < acc) {
                    drawn = level;
                    break;
                }
            }
            codes(row, v) = drawn;
        }
    }
    std::vector<std::string> names =
        bn.names.empty() ? default_names(d) : bn.names;
    return CategoricalDataset(std::move(codes), bn.levels, std::move(names), {},
                              CategoricalDataset::Levels::declared);
}

ContaminatedDataset inject_outliers(const ContinuousDataset& data, double fraction,
                                    double magnitude, uint64_t seed) {
    if (!(fraction > 0.0) || fraction >= 0.5)
        throw InputError("inject_outliers needs fraction in (0, 0.5)");
    if (!(magnitude > 0.0)) throw InputError("inject_outliers needs magnitude > 0");
    const long n = data.n();
    const int d = data.dim();
    const long m = static_cast<long>(std::ceil(fraction * static_cast<double>(n)));

    Eigen::VectorXd sd(d);
    for (int j = 0; j < d; ++j) {
        const double mean = data.values().col(j).mean();
        sd[j] = std::sqrt((data.values().col(j).array() - mean).square().sum() /
                          static_cast<double>(n - 1));
    }

    std::mt19937_64 rng(seed);
    std::vector<long> rows(static_cast<size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<size_t>(m));
    std::sort(rows.begin(), rows.end());

    std::bernoulli_distribution sign(0.5);
    Eigen::MatrixXd values = data.values();
    for (long r : rows)
        for (int j = 0; j < d; ++j)
            values(r, j) += (sign(rng) ? 1.0 : -1.0) * magnitude * sd[j];
    return {ContinuousDataset(std::move(values), data.names()), std::move(rows)};
}

CategoricalBn load_categorical_bn(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad BN JSON: ") + e.what());
    }

    if (!j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty())
        throw InputError("BN JSON lacks a non-empty \"nodes\" array");
    CategoricalBn bn;
    for (const auto& node : j["nodes"]) {
        if (!node.contains("name") || !node.contains("levels"))
            throw InputError("BN JSON node entries need \"name\" and \"levels\"");
        bn.names.push_back(node["name"].get<std::string>());
        const int lv = node["levels"].get<int>();
        if (lv < 2) throw InputError("node '" + bn.names.back() + "' needs at least 2 levels");
        bn.levels.push_back(lv);
    }
    const int d = static_cast<int>(bn.names.size());

    std::vector<Edge> arrows;
    if (j.contains("arrows"))
        for (const auto& e : j["arrows"]) {
            if (!e.is_array() || e.size() != 2)
                throw InputError("BN JSON: malformed arrow entry");
            const int a = e[0].get<int>(), b = e[1].get<int>();
            if (a < 0 || a >= d || b < 0 || b >= d)
                throw InputError("BN JSON: arrow endpoint out of range");
            arrows.emplace_back(a, b);
        }
    bn.dag = Dag::from_arrows(d, arrows);  // throws CycleDetected on a cycle

    if (!j.contains("cpts") || !j["cpts"].is_object())
        throw InputError("BN JSON lacks a \"cpts\" object");
    bn.cpts.resize(static_cast<size_t>(d));
    for (int v = 0; v < d; ++v) {
        const std::string& name = bn.names[static_cast<size_t>(v)];
        if (!j["cpts"].contains(name))
            throw InputError("BN JSON: no CPT for node '" + name + "'");
        const auto& entry = j["cpts"][name];
        const std::vector<int> parents = bn.dag.parents(v);
        long q = 0;
        const std::vector<long> stride = parent_strides(bn, parents, q);
        const int r = bn.levels[static_cast<size_t>(v)];
        auto& cpt = bn.cpts[static_cast<size_t>(v)];
        cpt.assign(static_cast<size_t>(q * r), -1.0);
        if (static_cast<long>(entry.size()) != q)
            throw InputError("BN JSON: node '" + name + "' needs " + std::to_string(q) +
                             " CPT rows, got " + std::to_string(entry.size()));
        for (const auto& [key, probs] : entry.items()) {
            // key = comma-joined parent level codes, parent-index order
            long cfg = 0;
            if (!parents.empty()) {
                std::istringstream ks(key);
                std::string tok;
                size_t k = 0;
                while (std::getline(ks, tok, ',')) {
                    if (k >= parents.size())
                        throw InputError("BN JSON: CPT key '" + key + "' has too many codes");
                    const int code = std::stoi(tok);
                    const int lv = bn.levels[static_cast<size_t>(parents[k])];
                    if (code < 0 || code >= lv)
                        throw InputError("BN JSON: CPT key '" + key + "' code out of range");
                    cfg += stride[k] * code;
                    ++k;
                }
                if (k != parents.size())
                    throw InputError("BN JSON: CPT key '" + key + "' has too few codes");
            } else if (!key.empty()) {
                throw InputError("BN JSON: root node '" + name + "' expects the key \"\"");
            }
            if (!probs.is_array() || static_cast<int>(probs.size()) != r)
                throw InputError("BN JSON: CPT row '" + key + "' of node '" + name +
                                 "' needs " + std::to_string(r) + " probabilities");
            double sum = 0.0;
            for (int level = 0; level < r; ++level) {
                const double pr = probs[static_cast<size_t>(level)].get<double>();
                if (pr < 0.0) throw CptNotNormalized(name, key);
                cpt[static_cast<size_t>(cfg * r + level)] = pr;
                sum += pr;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw CptNotNormalized(name, key);
        }
        for (double pr : cpt)
            if (pr < 0.0)
                throw InputError("BN JSON: node '" + name + "' is missing a CPT row");
    }
    return bn;
}

std::string categorical_bn_to_json(const CategoricalBn& bn) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::json::array();
    const int d = bn.dag.dim();
    for (int v = 0; v < d; ++v)
        j["nodes"].push_back({{"name", bn.names[static_cast<size_t>(v)]},
                              {"levels", bn.levels[static_cast<size_t>(v)]}});
    j["arrows"] = nlohmann::json::array();
    for (const auto& [a, b] : bn.dag.arrows()) j["arrows"].push_back({a, b});
    j["cpts"] = nlohmann::json::object();
    for (int v = 0; v < d; ++v) {
        const std::vector<int> parents = bn.dag.parents(v);
        long q = 0;
        const std::vector<long> stride = parent_strides(bn, parents, q);
        const int r = bn.levels[static_cast<size_t>(v)];
        nlohmann::ordered_json rows = nlohmann::json::object();
        for (long cfg = 0; cfg < q; ++cfg) {
            std::string key;
            for (size_t k = 0; k < parents.size(); ++k) {
                const long code = (cfg / stride[k]) %
                                  bn.levels[static_cast<size_t>(parents[k])];
                key += (k ? "," : "") + std::to_string(code);
            }
            std::vector<double> probs(static_cast<size_t>(r));
            for (int level = 0; level < r; ++level)
                probs[static_cast<size_t>(level)] =
                    bn.cpts[static_cast<size_t>(v)][static_cast<size_t>(cfg * r + level)];
            rows[key] = probs;
        }
        j["cpts"][bn.names[static_cast<size_t>(v)]] = rows;
    }
    return j.dump(2) + "\n";
}

}  // namespace fedhc
