#ifndef FEDHC_SIMULATE_HPP
#define FEDHC_SIMULATE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "fedhc/dataset.hpp"
#include "fedhc/graph.hpp"

namespace fedhc {

// Linear-Gaussian structural equation model: child = intercept + sum of
// beta * parent + noise. beta(i, j) is the coefficient on arrow i -> j and is
// zero exactly where no arrow exists.
struct GaussianBn {
    Dag dag{1};
    Eigen::MatrixXd beta;
    Eigen::VectorXd intercepts;  // default zero
    Eigen::VectorXd noise_sd;    // default one
};

// Discrete BN: per node a CPT with one distribution row per parent
// configuration (parent-index order, first parent fastest stride).
struct CategoricalBn {
    Dag dag{1};
    std::vector<int> levels;
    std::vector<std::string> names;
    // cpts[v] is a (prod parent levels) x levels[v] row-major table.
    std::vector<std::vector<double>> cpts;
};

// Random topological order; each forward pair becomes an arrow independently
// with probability avg_neighbors/(D-1), so the expected undirected degree is
// avg_neighbors.
Dag random_dag(int d, double avg_neighbors, uint64_t seed);

// Coefficients drawn uniformly from [-1,-0.1] u [0.1,1], unit noise, zero
// intercepts.
GaussianBn random_gaussian_bn(const Dag& dag, uint64_t seed);

// Ancestral sampling; parentless nodes are standard normal.
ContinuousDataset sample_gaussian(const GaussianBn& bn, long n, uint64_t seed);

CategoricalDataset sample_categorical(const CategoricalBn& bn, long n, uint64_t seed);

struct ContaminatedDataset {
    ContinuousDataset data;
    std::vector<long> outlier_rows;  // sorted true labels
};

// Replaces ceil(fraction*n) rows by the clean row shifted magnitude
// column-sd units with a random sign per cell.
ContaminatedDataset inject_outliers(const ContinuousDataset& data, double fraction,
                                    double magnitude, uint64_t seed);

// JSON CPT model loader; validates levels, acyclicity and row normalization.
CategoricalBn load_categorical_bn(const std::string& path);
std::string categorical_bn_to_json(const CategoricalBn& bn);

}  // namespace fedhc

#endif
