#include "fedhc/score.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <random>

#include "fedhc/errors.hpp"

namespace fedhc {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Score deltas closer than this count as ties (score-equivalent orientations
// land here); improvements must clear it.
constexpr double kScoreEps = 1e-7;

std::string cache_key(int node, std::span<const int> parents) {
    std::string key;
    key.reserve(4 + parents.size() * 4);
    auto push = [&key](int v) {
        key.append(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    push(node);
    for (int p : parents) push(p);
    return key;
}

}  // namespace

LocalScorer::LocalScorer(const ContinuousDataset& data, ScoreSpec spec)
    : spec_(spec), dim_(data.dim()), n_(data.n()) {
    if (spec.name != ScoreName::bic_g && spec.name != ScoreName::loglik_g &&
        spec.name != ScoreName::aic_g)
        throw InputError("continuous data needs a Gaussian score (bic-g, loglik-g, aic-g)");
    Eigen::MatrixXd centred = data.values();
    for (int j = 0; j < dim_; ++j) centred.col(j).array() -= centred.col(j).mean();
    moments_ = centred.transpose() * centred / static_cast<double>(n_);
}

LocalScorer::LocalScorer(const CategoricalDataset& data, ScoreSpec spec)
    : spec_(spec), dim_(data.dim()), n_(data.n()), cat_(&data) {
    if (spec.name != ScoreName::bic_cat && spec.name != ScoreName::loglik_cat &&
        spec.name != ScoreName::bdeu)
        throw InputError("categorical data needs a categorical score (bic, loglik, bdeu)");
    if (spec.name == ScoreName::bdeu && !(spec.iss > 0.0))
        throw InputError("BDeu needs an imaginary sample size > 0");
}

double LocalScorer::operator()(int node, std::span<const int> parents) const {
    std::vector<int> sorted(parents.begin(), parents.end());
    std::sort(sorted.begin(), sorted.end());
    const std::string key = cache_key(node, sorted);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    const double value = evaluate(node, sorted);
    std::lock_guard<std::mutex> lock(mutex_);
    ++evaluations_;
    cache_.emplace(key, value);
    return value;
}

long long LocalScorer::evaluations() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return evaluations_;
}

long long LocalScorer::cache_hits() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return hits_;
}

double LocalScorer::evaluate(int node, std::span<const int> parents) const {
    for (int p : parents)
        if (p == node) throw InvariantViolation("local score: node among its own parents");
    if (cat_) return categorical_score(node, parents);

    const double loglik = gaussian_loglik(node, parents);
    if (loglik == kNegInf) return kNegInf;
    const double k = static_cast<double>(parents.size()) + 2.0;  // slopes + intercept + variance
    switch (spec_.name) {
        case ScoreName::loglik_g: return loglik;
        case ScoreName::bic_g: return loglik - 0.5 * k * std::log(static_cast<double>(n_));
        case ScoreName::aic_g: return loglik - k;
        default: throw InvariantViolation("bad Gaussian score");
    }
}

double LocalScorer::gaussian_loglik(int node, std::span<const int> parents) const {
    const double n = static_cast<double>(n_);
    double sigma2 = moments_(node, node);
    if (!parents.empty()) {
        const int m = static_cast<int>(parents.size());
        Eigen::MatrixXd pp(m, m);
        Eigen::VectorXd pv(m);
        for (int a = 0; a < m; ++a) {
            pv[a] = moments_(parents[static_cast<size_t>(a)], node);
            for (int b = 0; b < m; ++b)
                pp(a, b) = moments_(parents[static_cast<size_t>(a)],
                                    parents[static_cast<size_t>(b)]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(pp);
        const double dmax = ldlt.vectorD().maxCoeff();
        if (ldlt.info() != Eigen::Success || !(dmax > 0.0) ||
            ldlt.vectorD().minCoeff() < 1e-10 * dmax)
            return kNegInf;  // SingularRegression: never selected
        sigma2 -= pv.dot(ldlt.solve(pv));
    }
    if (!(sigma2 > 0.0)) return kNegInf;
    return -0.5 * n * (std::log(2.0 * M_PI * sigma2) + 1.0);
}

double LocalScorer::categorical_score(int node, std::span<const int> parents) const {
    const auto& data = *cat_;
    const auto& codes = data.codes();
    const int r = data.levels()[static_cast<size_t>(node)];
    double q = 1.0;
    std::vector<long> stride(parents.size());
    long q_long = 1;
    for (size_t k = 0; k < parents.size(); ++k) {
        stride[k] = q_long;
        q_long *= data.levels()[static_cast<size_t>(parents[k])];
        q *= static_cast<double>(data.levels()[static_cast<size_t>(parents[k])]);
    }

    // Counts per observed parent configuration.
    std::unordered_map<long, std::vector<long>> table;
    table.reserve(static_cast<size_t>(std::min<long>(q_long, n_)));
    for (long row = 0; row < n_; ++row) {
        long cfg = 0;
        for (size_t k = 0; k < parents.size(); ++k) cfg += stride[k] * codes(row, parents[k]);
        auto& cell = table[cfg];
        if (cell.empty()) cell.assign(static_cast<size_t>(r), 0);
        ++cell[static_cast<size_t>(codes(row, node))];
    }

    if (spec_.name == ScoreName::bdeu) {
        const double alpha_cfg = spec_.iss / q;
        const double alpha_cell = spec_.iss / (q * static_cast<double>(r));
        double score = 0.0;
        for (const auto& [cfg, counts] : table) {
            long total = 0;
            for (long c : counts) total += c;
            score += std::lgamma(alpha_cfg) - std::lgamma(alpha_cfg + static_cast<double>(total));
            for (long c : counts)
                if (c > 0)
                    score += std::lgamma(alpha_cell + static_cast<double>(c)) -
                             std::lgamma(alpha_cell);
        }
        return score;
    }

    double loglik = 0.0;
    for (const auto& [cfg, counts] : table) {
        long total = 0;
        for (long c : counts) total += c;
        for (long c : counts)
            if (c > 0)
                loglik += static_cast<double>(c) *
                          std::log(static_cast<double>(c) / static_cast<double>(total));
    }
    if (spec_.name == ScoreName::loglik_cat) return loglik;
    // bic_cat penalises with the full theoretical parameter count.
    return loglik -
           0.5 * static_cast<double>(r - 1) * q * std::log(static_cast<double>(n_));
}

double local_score(int node, std::span<const int> parents, const ContinuousDataset& data,
                   const ScoreSpec& spec) {
    return LocalScorer(data, spec)(node, parents);
}

double local_score(int node, std::span<const int> parents, const CategoricalDataset& data,
                   const ScoreSpec& spec) {
    return LocalScorer(data, spec)(node, parents);
}

double total_score(const Dag& dag, const LocalScorer& scorer) {
    double total = 0.0;
    for (int v = 0; v < dag.dim(); ++v) {
        const auto parents = dag.parents(v);
        total += scorer(v, parents);
    }
    return total;
}

namespace {

enum class MoveType : int { add = 0, remove = 1, reverse = 2 };

struct Move {
    MoveType type;
    int from;
    int to;

    bool operator<(const Move& other) const {
        return std::tuple(static_cast<int>(type), from, to) <
               std::tuple(static_cast<int>(other.type), other.from, other.to);
    }
};

// Shared state for both searches.
struct SearchState {
    const Skeleton& skeleton;
    const LocalScorer& scorer;
    const EdgeConstraints& constraints;
    Dag dag;
    std::vector<double> node_score;  // local score of each node's current parent set
    double score = 0.0;

    SearchState(const Skeleton& skel, const LocalScorer& sc, const EdgeConstraints& cons)
        : skeleton(skel), scorer(sc), constraints(cons), dag(skel.dim()) {
        for (const auto& [i, j] : cons.whitelist()) {
            if (!skel.has_edge(i, j))
                throw InconsistentConstraints(
                    "whitelisted arrow " + std::to_string(i) + "->" + std::to_string(j) +
                    " has no skeleton edge to orient");
            if (!dag.can_add(i, j))
                throw InconsistentConstraints("whitelist arrows force a directed cycle");
            dag.add_arrow(i, j);
        }
        node_score.resize(static_cast<size_t>(skel.dim()));
        score = 0.0;
        for (int v = 0; v < skel.dim(); ++v) {
            node_score[static_cast<size_t>(v)] = scorer(v, dag.parents(v));
            score += node_score[static_cast<size_t>(v)];
        }
    }

    bool reverse_keeps_acyclic(int i, int j) const {
        // Reversing i->j is legal iff no other directed path i ~> j exists.
        const int d = dag.dim();
        std::vector<uint8_t> seen(static_cast<size_t>(d), 0);
        std::vector<int> stack{i};
        seen[static_cast<size_t>(i)] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < d; ++w) {
                if (!dag.has_arrow(v, w)) continue;
                if (v == i && w == j) continue;  // the arrow being reversed
                if (w == j) return false;
                if (!seen[static_cast<size_t>(w)]) {
                    seen[static_cast<size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
        return true;
    }

    // Moves legal w.r.t. skeleton, constraints and acyclicity.
    std::vector<Move> legal_moves() const {
        std::vector<Move> moves;
        const int d = dag.dim();
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (i == j) continue;
                if (dag.has_arrow(i, j)) {
                    if (constraints.requires_arrow(i, j)) continue;
                    moves.push_back({MoveType::remove, i, j});
                    if (!constraints.forbids(j, i) && reverse_keeps_acyclic(i, j))
                        moves.push_back({MoveType::reverse, i, j});
                } else if (skeleton.has_edge(i, j) && !dag.has_arrow(j, i) &&
                           !constraints.forbids(i, j) && dag.can_add(i, j)) {
                    moves.push_back({MoveType::add, i, j});
                }
            }
        }
        std::sort(moves.begin(), moves.end());
        return moves;
    }

    double delta(const Move& m) const {
        auto with = [&](int node, int parent, bool add) {
            std::vector<int> ps = dag.parents(node);
            if (add) {
                ps.push_back(parent);
            } else {
                ps.erase(std::remove(ps.begin(), ps.end(), parent), ps.end());
            }
            return scorer(node, ps);
        };
        switch (m.type) {
            case MoveType::add:
                return with(m.to, m.from, true) - node_score[static_cast<size_t>(m.to)];
            case MoveType::remove:
                return with(m.to, m.from, false) - node_score[static_cast<size_t>(m.to)];
            case MoveType::reverse:
                return (with(m.to, m.from, false) - node_score[static_cast<size_t>(m.to)]) +
                       (with(m.from, m.to, true) - node_score[static_cast<size_t>(m.from)]);
        }
        return 0.0;
    }

    void apply(const Move& m) {
        switch (m.type) {
            case MoveType::add: dag.add_arrow(m.from, m.to); break;
            case MoveType::remove: dag.remove_arrow(m.from, m.to); break;
            case MoveType::reverse:
                dag.remove_arrow(m.from, m.to);
                dag.add_arrow(m.to, m.from);
                break;
        }
        refresh(m.to);
        if (m.type == MoveType::reverse) refresh(m.from);
    }

    void refresh(int node) {
        const double fresh = scorer(node, dag.parents(node));
        score += fresh - node_score[static_cast<size_t>(node)];
        node_score[static_cast<size_t>(node)] = fresh;
    }

    void restore(const Dag& snapshot) {
        dag = snapshot;
        score = 0.0;
        for (int v = 0; v < dag.dim(); ++v) {
            node_score[static_cast<size_t>(v)] = scorer(v, dag.parents(v));
            score += node_score[static_cast<size_t>(v)];
        }
    }

    // Best move by score delta with the lexicographic tie rule. Returns false
    // when no move improves by more than kScoreEps.
    bool best_improving(Move& out, double& out_delta) const {
        bool found = false;
        for (const Move& m : legal_moves()) {
            const double dd = delta(m);
            if (!std::isfinite(dd)) continue;
            if (!found || dd > out_delta + kScoreEps) {
                out = m;
                out_delta = dd;
                found = true;
            }
        }
        return found && out_delta > kScoreEps;
    }

    void greedy_descent() {
        for (;;) {
            Move m{MoveType::add, 0, 0};
            double dd = 0.0;
            if (!best_improving(m, dd)) return;
            apply(m);
        }
    }
};

}  // namespace

LearnedBn hc_search(const Skeleton& skeleton, const LocalScorer& scorer,
                    const EdgeConstraints& constraints, const SearchConfig& cfg) {
    const auto t0 = Clock::now();
    SearchState state(skeleton, scorer, constraints);
    std::mt19937_64 rng(cfg.seed);

    state.greedy_descent();
    Dag best_dag = state.dag;
    double best_score = state.score;

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        state.restore(best_dag);
        for (int p = 0; p < cfg.perturb_edges; ++p) {
            // Drawn moves are checked for acyclicity (legal_moves already
            // guarantees it); a draw that turns out inapplicable is redrawn
            // up to 10 times, then the slot is skipped.
            for (int attempt = 0; attempt < 10; ++attempt) {
                const auto moves = state.legal_moves();
                if (moves.empty()) break;
                std::uniform_int_distribution<size_t> pick(0, moves.size() - 1);
                const Move m = moves[pick(rng)];
                if (!std::isfinite(state.delta(m))) continue;
                state.apply(m);
                break;
            }
        }
        state.greedy_descent();
        if (state.score > best_score + kScoreEps) {
            best_score = state.score;
            best_dag = state.dag;
        }
    }

    LearnedBn out{best_dag, best_score, scorer.evaluations(), 0.0};
    out.runtime = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

LearnedBn tabu_search(const Skeleton& skeleton, const LocalScorer& scorer,
                      const EdgeConstraints& constraints, const SearchConfig& cfg) {
    if (cfg.tabu_len < 1 || cfg.stall_limit < 1)
        throw InputError("tabu search needs tabu_len >= 1 and stall_limit >= 1");
    const auto t0 = Clock::now();
    SearchState state(skeleton, scorer, constraints);

    std::deque<uint64_t> window;  // recently visited structures
    auto remember = [&](uint64_t h) {
        window.push_back(h);
        if (static_cast<int>(window.size()) > cfg.tabu_len) window.pop_front();
    };
    remember(state.dag.hash());

    Dag best_dag = state.dag;
    double best_score = state.score;
    int stall = 0;

    while (stall < cfg.stall_limit) {
        // Best legal move whose destination is not on the window, even if it
        // lowers the score.
        bool found = false;
        Move chosen{MoveType::add, 0, 0};
        double chosen_delta = 0.0;
        for (const Move& m : state.legal_moves()) {
            const double dd = state.delta(m);
            if (!std::isfinite(dd)) continue;
            if (found && dd <= chosen_delta + kScoreEps) continue;
            Dag probe = state.dag;
            switch (m.type) {
                case MoveType::add: probe.add_arrow(m.from, m.to); break;
                case MoveType::remove: probe.remove_arrow(m.from, m.to); break;
                case MoveType::reverse:
                    probe.remove_arrow(m.from, m.to);
                    probe.add_arrow(m.to, m.from);
                    break;
            }
            const uint64_t h = probe.hash();
            if (std::find(window.begin(), window.end(), h) != window.end()) continue;
            chosen = m;
            chosen_delta = dd;
            found = true;
        }
        if (!found) break;
        state.apply(chosen);
        remember(state.dag.hash());
        if (state.score > best_score + kScoreEps) {
            best_score = state.score;
            best_dag = state.dag;
            stall = 0;
        } else {
            ++stall;
        }
    }

    LearnedBn out{best_dag, best_score, scorer.evaluations(), 0.0};
    out.runtime = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

}  // namespace fedhc
