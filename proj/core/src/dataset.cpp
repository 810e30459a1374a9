#include "fedhc/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fedhc/errors.hpp"

namespace fedhc {

namespace {

// One CSV record; handles quoted fields and doubled quotes. Returns false on
// a dangling open quote.
bool split_record(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return !quoted;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += "\"\"";
        q += c;
    }
    q += '"';
    return q;
}

}  // namespace

ContinuousDataset::ContinuousDataset(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
    const long n = values_.rows();
    const long d = values_.cols();
    if (static_cast<long>(names_.size()) != d)
        throw InputError("column name count does not match data width");
    if (n < 5)
        throw InputError("continuous dataset needs at least 5 rows, got " + std::to_string(n));
    if (!values_.allFinite())
        throw InputError("continuous dataset contains missing or non-finite entries");
    for (long j = 0; j < d; ++j) {
        const double mean = values_.col(j).mean();
        const double var = (values_.col(j).array() - mean).square().sum() / static_cast<double>(n);
        if (!(var > 0.0)) throw ConstantColumn(names_[static_cast<size_t>(j)], j);
    }
}

CategoricalDataset::CategoricalDataset(Eigen::MatrixXi codes, std::vector<int> levels,
                                       std::vector<std::string> names,
                                       std::vector<std::vector<std::string>> labels, Levels mode)
    : codes_(std::move(codes)),
      levels_(std::move(levels)),
      names_(std::move(names)),
      labels_(std::move(labels)) {
    const long n = codes_.rows();
    const long d = codes_.cols();
    if (static_cast<long>(levels_.size()) != d || static_cast<long>(names_.size()) != d)
        throw InputError("levels/name count does not match data width");
    if (n < 1) throw InputError("categorical dataset is empty");
    for (long j = 0; j < d; ++j) {
        const int lv = levels_[static_cast<size_t>(j)];
        if (lv < 2) throw ConstantColumn(names_[static_cast<size_t>(j)], j);
        int lo = codes_(0, j), hi = codes_(0, j);
        for (long i = 0; i < n; ++i) {
            lo = std::min(lo, codes_(i, j));
            hi = std::max(hi, codes_(i, j));
        }
        if (lo < 0 || hi >= lv)
            throw InputError("column '" + names_[static_cast<size_t>(j)] +
                             "' has codes outside {0,...," + std::to_string(lv - 1) + "}");
        if (mode == Levels::inferred && lo != 0)
            throw InputError("column '" + names_[static_cast<size_t>(j)] +
                             "' does not use code 0; categorical codes must start at 0");
    }
}

std::string CategoricalDataset::decode(int col, int code) const {
    if (col < 0 || col >= dim() || code < 0 || code >= levels_[static_cast<size_t>(col)])
        throw InvariantViolation("decode: column or code out of range");
    if (labels_.empty()) return std::to_string(code);
    return labels_[static_cast<size_t>(col)][static_cast<size_t>(code)];
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() && in.peek() == EOF) break;  // trailing newline
        std::vector<std::string> fields;
        if (!split_record(line, fields)) throw ParseError(path, lineno, 1, "unterminated quote");
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw InputError("file has no header row: " + path);
    const size_t width = rows.front().size();
    for (size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width)
            throw ParseError(path, static_cast<long>(r + 1), 1,
                             "expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(rows[r].size()));
    }
    return rows;
}

Dataset load_csv(const std::string& path, CsvMode mode) {
    auto rows = read_csv_rows(path);
    const std::vector<std::string> names = rows.front();
    const long n = static_cast<long>(rows.size()) - 1;
    const long d = static_cast<long>(names.size());
    if (n < 1) throw InputError("file has a header but no data rows: " + path);

    if (mode == CsvMode::continuous) {
        Eigen::MatrixXd values(n, d);
        for (long i = 0; i < n; ++i) {
            const auto& row = rows[static_cast<size_t>(i + 1)];
            for (long j = 0; j < d; ++j) {
                const std::string& cell = row[static_cast<size_t>(j)];
                if (cell.empty()) throw ParseError(path, i + 2, j + 1, "missing cell");
                double v = 0.0;
                const char* first = cell.data();
                const char* last = cell.data() + cell.size();
                auto [ptr, ec] = std::from_chars(first, last, v);
                if (ec != std::errc() || ptr != last)
                    throw ParseError(path, i + 2, j + 1, "not a number: '" + cell + "'");
                if (!std::isfinite(v))
                    throw ParseError(path, i + 2, j + 1, "non-finite value: '" + cell + "'");
                values(i, j) = v;
            }
        }
        return ContinuousDataset(std::move(values), names);
    }

    Eigen::MatrixXi codes(n, d);
    std::vector<std::vector<std::string>> labels(static_cast<size_t>(d));
    std::vector<std::unordered_map<std::string, int>> maps(static_cast<size_t>(d));
    for (long i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<size_t>(i + 1)];
        for (long j = 0; j < d; ++j) {
            const std::string& cell = row[static_cast<size_t>(j)];
            if (cell.empty()) throw ParseError(path, i + 2, j + 1, "missing cell");
            auto& map = maps[static_cast<size_t>(j)];
            auto it = map.find(cell);
            if (it == map.end()) {
                const int code = static_cast<int>(map.size());
                it = map.emplace(cell, code).first;
                labels[static_cast<size_t>(j)].push_back(cell);
            }
            codes(i, j) = it->second;
        }
    }
    std::vector<int> levels(static_cast<size_t>(d));
    for (long j = 0; j < d; ++j)
        levels[static_cast<size_t>(j)] = static_cast<int>(labels[static_cast<size_t>(j)].size());
    return CategoricalDataset(std::move(codes), std::move(levels), names, std::move(labels));
}

void write_csv(const std::string& path, const ContinuousDataset& data) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    for (int j = 0; j < data.dim(); ++j)
        out << (j ? "," : "") << quote_if_needed(data.names()[static_cast<size_t>(j)]);
    out << "\n";
    out.precision(17);
    for (long i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.dim(); ++j) out << (j ? "," : "") << data.values()(i, j);
        out << "\n";
    }
}

void write_csv(const std::string& path, const CategoricalDataset& data) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    for (int j = 0; j < data.dim(); ++j)
        out << (j ? "," : "") << quote_if_needed(data.names()[static_cast<size_t>(j)]);
    out << "\n";
    for (long i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.dim(); ++j)
            out << (j ? "," : "") << quote_if_needed(data.decode(j, data.codes()(i, j)));
        out << "\n";
    }
}

}  // namespace fedhc
