#ifndef FEDHC_SCORE_HPP
#define FEDHC_SCORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "fedhc/dataset.hpp"
#include "fedhc/graph.hpp"

namespace fedhc {

enum class ScoreName { bic_g, loglik_g, aic_g, bic_cat, loglik_cat, bdeu };

struct ScoreSpec {
    ScoreName name = ScoreName::bic_g;
    double iss = 1.0;  // BDeu imaginary sample size
};

struct SearchConfig {
    int restarts = 10;      // random-restart count for hc_search
    int tabu_len = 100;     // visited-structure window for tabu_search
    int stall_limit = 15;   // non-improving moves before tabu stops
    int perturb_edges = 5;  // random moves per restart perturbation
    uint64_t seed = 0;
};

struct LearnedBn {
    Dag dag{1};
    double score = 0.0;
    long long local_scores_evaluated = 0;
    double runtime = 0.0;  // seconds
};

// Decomposable local scores with an internal (node, parents) cache. Gaussian
// scores come from the centred second-moment matrix, so one O(nD^2) pass
// makes every subsequent evaluation O(|parents|^3). A rank-deficient parent
// set scores -inf and is never selected by the searches.
class LocalScorer {
public:
    LocalScorer(const ContinuousDataset& data, ScoreSpec spec);
    LocalScorer(const CategoricalDataset& data, ScoreSpec spec);

    double operator()(int node, std::span<const int> parents) const;
    int dim() const { return dim_; }
    long n() const { return n_; }
    long long evaluations() const;  // cache misses
    long long cache_hits() const;

private:
    double evaluate(int node, std::span<const int> parents) const;
    double gaussian_loglik(int node, std::span<const int> parents) const;
    double categorical_score(int node, std::span<const int> parents) const;

    ScoreSpec spec_;
    int dim_ = 0;
    long n_ = 0;
    Eigen::MatrixXd moments_;  // centred covariance (MLE, /n), Gaussian family
    const CategoricalDataset* cat_ = nullptr;

    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, double> cache_;
    mutable long long evaluations_ = 0;
    mutable long long hits_ = 0;
};

// One-off local score (the cached path is LocalScorer).
double local_score(int node, std::span<const int> parents, const ContinuousDataset& data,
                   const ScoreSpec& spec);
double local_score(int node, std::span<const int> parents, const CategoricalDataset& data,
                   const ScoreSpec& spec);

double total_score(const Dag& dag, const LocalScorer& scorer);

// Greedy hill climbing over add/delete/reverse moves restricted to the
// skeleton, plus cfg.restarts random perturbations each followed by greedy
// descent. Whitelisted arrows are seeded into the start graph and never
// touched; blacklisted directions are never added.
LearnedBn hc_search(const Skeleton& skeleton, const LocalScorer& scorer,
                    const EdgeConstraints& constraints, const SearchConfig& cfg);

// Tabu variant: keeps the recent-structure window and applies the best move
// leading off the window even when the score drops; stops after
// cfg.stall_limit consecutive non-improving moves.
LearnedBn tabu_search(const Skeleton& skeleton, const LocalScorer& scorer,
                      const EdgeConstraints& constraints, const SearchConfig& cfg);

}  // namespace fedhc

#endif
