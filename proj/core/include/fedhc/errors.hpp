#ifndef FEDHC_ERRORS_HPP
#define FEDHC_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace fedhc {

// Base for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unusable input: bad CSV cells, schema violations, bad flags.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(std::string file, long row, long column, const std::string& what)
        : InputError(file + ":" + std::to_string(row) + ":" + std::to_string(column) + ": " + what),
          file_(std::move(file)), row_(row), column_(column) {}
    const std::string& file() const { return file_; }
    long row() const { return row_; }
    long column() const { return column_; }

private:
    std::string file_;
    long row_;
    long column_;
};

class ConstantColumn : public InputError {
public:
    ConstantColumn(const std::string& name, long column)
        : InputError("column '" + name + "' (index " + std::to_string(column) +
                     ") is constant; every variable needs positive variance"),
          column_(column) {}
    long column() const { return column_; }

private:
    long column_;
};

class CycleDetected : public Error {
public:
    explicit CycleDetected(std::vector<int> cycle)
        : Error(describe(cycle)), cycle_(std::move(cycle)) {}
    // One witnessed cycle, as a node sequence with front() == back().
    const std::vector<int>& cycle() const { return cycle_; }

private:
    static std::string describe(const std::vector<int>& cycle);
    std::vector<int> cycle_;
};

class SingularConditioningSet : public Error {
public:
    SingularConditioningSet() : Error("conditioning set is collinear; test is non-informative") {}
};

class InsufficientSample : public Error {
public:
    InsufficientSample(long n, long nz)
        : Error("sample size " + std::to_string(n) + " too small for |Z|=" + std::to_string(nz) +
                " (need n - |Z| - 3 >= 1)") {}
};

class DegenerateTable : public Error {
public:
    DegenerateTable() : Error("every contingency cell has zero expected count") {}
};

class SingularRegression : public Error {
public:
    SingularRegression() : Error("parent design matrix is rank-deficient") {}
};

class InconsistentConstraints : public InputError {
public:
    using InputError::InputError;
};

class ExactFit : public Error {
public:
    ExactFit() : Error("data lie on a lower-dimensional subspace; covariance is singular") {}
};

class DegenerateReweighting : public Error {
public:
    DegenerateReweighting(long w, long d)
        : Error("reweighted sample has w=" + std::to_string(w) + " rows but needs w > D+1 = " +
                std::to_string(d + 1)) {}
};

class EmptyResult : public Error {
public:
    EmptyResult() : Error("all rows were flagged as outliers") {}
};

class CptNotNormalized : public InputError {
public:
    CptNotNormalized(const std::string& node, const std::string& key)
        : InputError("CPT row for node '" + node + "', parent configuration '" + key +
                     "' does not sum to 1") {}
};

// A programming-contract breach inside the library; callers map this to exit code 4.
class InvariantViolation : public std::logic_error {
public:
    explicit InvariantViolation(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace fedhc

#endif
