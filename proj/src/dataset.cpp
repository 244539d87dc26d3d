#include "iloco/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace iloco {

const char* task_name(TaskKind task) {
    return task == TaskKind::Regression ? "regression" : "classification";
}

TaskKind task_from_name(const std::string& name) {
    if (name == "regression" || name == "reg") return TaskKind::Regression;
    if (name == "classification" || name == "clf") return TaskKind::Classification;
    throw ConfigError("unknown task '" + name + "' (expected reg|clf)");
}

Dataset::Dataset(std::vector<double> x, std::vector<double> y,
                 std::vector<std::string> feature_names, TaskKind task)
    : x_(std::move(x)),
      y_(std::move(y)),
      feature_names_(std::move(feature_names)),
      task_(task) {
    n_rows_ = y_.size();
    n_cols_ = feature_names_.size();
    if (n_rows_ == 0 || n_cols_ == 0) {
        throw EmptyDataError("dataset has no rows or no feature columns");
    }
    if (x_.size() != n_rows_ * n_cols_) {
        throw DataError("feature matrix size does not match rows*cols");
    }
    for (double v : x_) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    for (double v : y_) {
        if (!std::isfinite(v)) throw DataError("non-finite response value");
        if (task_ == TaskKind::Classification && v != 0.0 && v != 1.0) {
            throw NonBinaryLabelsError("classification labels must be 0 or 1");
        }
    }
    std::set<std::string> seen;
    for (const auto& name : feature_names_) {
        if (!seen.insert(name).second) {
            throw DataError("duplicate feature name '" + name + "'");
        }
    }
}

Dataset Dataset::subset_rows(const std::vector<std::size_t>& rows) const {
    std::vector<double> x;
    x.reserve(rows.size() * n_cols_);
    std::vector<double> y;
    y.reserve(rows.size());
    for (std::size_t r : rows) {
        const auto rr = row(r);
        x.insert(x.end(), rr.begin(), rr.end());
        y.push_back(y_[r]);
    }
    return Dataset(std::move(x), std::move(y), feature_names_, task_);
}

namespace {

// One CSV record, honoring quoted fields. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    int c;
    while ((c = in.get()) != EOF) {
        saw_any = true;
        const char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get();
            fields.push_back(std::move(field));
            return true;
        } else if (ch == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(ch);
        }
    }
    if (!saw_any) return false;
    fields.push_back(std::move(field));
    return true;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end != begin + s.size()) return false;
    return true;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target,
                 TaskKind task, bool encode_categoricals) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::vector<std::string> header;
    if (!read_record(in, header) || header.empty()) {
        throw EmptyDataError("'" + path + "' has no header row");
    }
    // Tolerate a UTF-8 BOM on the first header cell.
    if (header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
        header[0].erase(0, 3);
    }

    std::ptrdiff_t target_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == target) {
            if (target_col >= 0) throw DataError("duplicate target column '" + target + "'");
            target_col = static_cast<std::ptrdiff_t>(j);
        }
    }
    if (target_col < 0) {
        throw MissingTargetError("target column '" + target + "' not found in '" + path + "'");
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> record;
    while (read_record(in, record)) {
        if (record.size() == 1 && record[0].empty()) continue;  // blank line
        if (record.size() != header.size()) {
            throw DataError("row " + std::to_string(rows.size() + 2) + " has " +
                            std::to_string(record.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        rows.push_back(record);
    }
    if (rows.size() < 2) throw EmptyDataError("need at least 2 data rows");

    const std::size_t n_rows = rows.size();
    const std::size_t n_raw_cols = header.size();

    // Column typing pass: a column is numeric when every cell parses fully.
    std::vector<bool> numeric(n_raw_cols, true);
    std::vector<std::vector<double>> parsed(n_raw_cols, std::vector<double>(n_rows));
    for (std::size_t j = 0; j < n_raw_cols; ++j) {
        for (std::size_t i = 0; i < n_rows; ++i) {
            const std::string& cell = rows[i][j];
            if (cell.empty()) {
                throw DataError("missing value at row " + std::to_string(i + 2) +
                                ", column '" + header[j] + "'");
            }
            double v;
            if (!parse_double(cell, v)) {
                numeric[j] = false;
                break;
            }
            if (!std::isfinite(v)) {
                throw DataError("non-finite value at row " + std::to_string(i + 2) +
                                ", column '" + header[j] + "'");
            }
            parsed[j][i] = v;
        }
    }

    // Response column. Classification maps the observed raw levels to {0,1}.
    std::vector<double> y(n_rows);
    const std::size_t tc = static_cast<std::size_t>(target_col);
    if (task == TaskKind::Classification) {
        std::set<std::string> levels;
        for (std::size_t i = 0; i < n_rows; ++i) levels.insert(rows[i][tc]);
        if (levels.size() > 2) {
            throw NonBinaryLabelsError("classification target has " +
                                       std::to_string(levels.size()) + " levels (max 2)");
        }
        std::map<std::string, double> code;
        double next = 0.0;
        for (const auto& level : levels) code[level] = next++;
        if (levels.size() == 1) {
            // A single observed level keeps its numeric identity when it already
            // is 0 or 1; anything else cannot be coded unambiguously.
            double v;
            if (parse_double(*levels.begin(), v) && (v == 0.0 || v == 1.0)) {
                code[*levels.begin()] = v;
            } else {
                throw NonBinaryLabelsError("single non-binary label level '" +
                                           *levels.begin() + "'");
            }
        }
        for (std::size_t i = 0; i < n_rows; ++i) y[i] = code[rows[i][tc]];
    } else {
        if (!numeric[tc]) {
            throw NonNumericColumnError("regression target '" + header[tc] +
                                        "' is not numeric");
        }
        y = parsed[tc];
    }

    // Feature columns in original order, one-hot blocks in level-sorted order.
    std::vector<double> x;
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < n_raw_cols; ++j) {
        if (j == tc) continue;
        if (numeric[j]) {
            names.push_back(header[j]);
            cols.push_back(parsed[j]);
        } else {
            if (!encode_categoricals) {
                throw NonNumericColumnError("column '" + header[j] +
                                            "' is not numeric (pass --encode-categoricals "
                                            "to one-hot encode)");
            }
            std::set<std::string> levels;
            for (std::size_t i = 0; i < n_rows; ++i) levels.insert(rows[i][j]);
            for (const auto& level : levels) {
                names.push_back(header[j] + "=" + level);
                std::vector<double> col(n_rows, 0.0);
                for (std::size_t i = 0; i < n_rows; ++i) {
                    if (rows[i][j] == level) col[i] = 1.0;
                }
                cols.push_back(std::move(col));
            }
        }
    }
    if (cols.size() < 2) throw EmptyDataError("need at least 2 feature columns");

    x.resize(n_rows * cols.size());
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            x[i * cols.size() + j] = cols[j][i];
        }
    }
    return Dataset(std::move(x), std::move(y), std::move(names), task);
}

void save_csv(const Dataset& data, const std::string& path,
              const std::string& target_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (const auto& name : data.feature_names()) {
        out << quote_if_needed(name) << ',';
    }
    out << quote_if_needed(target_name) << '\n';
    char buf[64];
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (std::size_t j = 0; j < data.n_cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
            out << buf << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", data.y(i));
        out << buf << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

SplitPair split(const Dataset& data, double train_frac, RngStream rng) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw InvalidSpecError("train_frac must be in (0,1)");
    }
    const std::size_t n = data.n_rows();
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_frac * static_cast<double>(n)));
    if (n_train < 1 || n - n_train < 2) {
        throw TooFewRowsError("split of " + std::to_string(n) + " rows at frac " +
                              std::to_string(train_frac) +
                              " leaves too few rows (need train>=1, test>=2)");
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> test_rows(order.begin() + n_train, order.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return SplitPair{data.subset_rows(train_rows), data.subset_rows(test_rows),
                     rng.seed()};
}

}  // namespace iloco
