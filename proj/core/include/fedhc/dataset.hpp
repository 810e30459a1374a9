#ifndef FEDHC_DATASET_HPP
#define FEDHC_DATASET_HPP

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace fedhc {

// All-real data table. Immutable after construction; construction validates
// finiteness, positive column variance and n >= 5.
class ContinuousDataset {
public:
    ContinuousDataset(Eigen::MatrixXd values, std::vector<std::string> names);

    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }
    long n() const { return values_.rows(); }
    int dim() const { return static_cast<int>(values_.cols()); }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
};

// Integer-coded categorical table. `levels[j]` is the number of categories of
// column j; codes lie in {0, ..., levels[j]-1}. When levels are inferred from
// the data (CSV ingestion) code 0 is observed in every column by construction;
// datasets sampled from a known model may leave high codes unobserved, so they
// declare their level counts explicitly.
class CategoricalDataset {
public:
    enum class Levels { inferred, declared };

    CategoricalDataset(Eigen::MatrixXi codes, std::vector<int> levels,
                       std::vector<std::string> names,
                       std::vector<std::vector<std::string>> labels = {},
                       Levels mode = Levels::inferred);

    const Eigen::MatrixXi& codes() const { return codes_; }
    const std::vector<int>& levels() const { return levels_; }
    const std::vector<std::string>& names() const { return names_; }
    long n() const { return codes_.rows(); }
    int dim() const { return static_cast<int>(codes_.cols()); }

    // Original string of code `code` in column `col`; synthesized datasets
    // without label maps fall back to the decimal code.
    std::string decode(int col, int code) const;
    bool has_labels() const { return !labels_.empty(); }

private:
    Eigen::MatrixXi codes_;
    std::vector<int> levels_;
    std::vector<std::string> names_;
    std::vector<std::vector<std::string>> labels_;
};

using Dataset = std::variant<ContinuousDataset, CategoricalDataset>;

enum class CsvMode { continuous, categorical };

// Parses a header-first CSV (RFC-4180 subset: quoted fields, doubled quotes,
// CRLF tolerated). Continuous mode parses every cell as a real; categorical
// mode maps each column's distinct strings to codes 0..k-1 in first-appearance
// order and keeps the mapping for decode().
Dataset load_csv(const std::string& path, CsvMode mode);

// Low-level CSV reader shared with the constraint-file loader: header + rows.
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path);

void write_csv(const std::string& path, const ContinuousDataset& data);
void write_csv(const std::string& path, const CategoricalDataset& data);

}  // namespace fedhc

#endif
