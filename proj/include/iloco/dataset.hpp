#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iloco/errors.hpp"
#include "iloco/rng.hpp"

namespace iloco {

enum class TaskKind { Regression, Classification };

const char* task_name(TaskKind task);
TaskKind task_from_name(const std::string& name);

// Immutable N x M feature matrix with a response vector. Row-major storage.
// Safe to share across threads after construction.
class Dataset {
public:
    Dataset(std::vector<double> x, std::vector<double> y,
            std::vector<std::string> feature_names, TaskKind task);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }
    TaskKind task() const { return task_; }

    double x(std::size_t row, std::size_t col) const {
        return x_[row * n_cols_ + col];
    }
    std::span<const double> row(std::size_t i) const {
        return {x_.data() + i * n_cols_, n_cols_};
    }
    double y(std::size_t i) const { return y_[i]; }
    const std::vector<double>& labels() const { return y_; }
    const std::vector<double>& values() const { return x_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    Dataset subset_rows(const std::vector<std::size_t>& rows) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<std::string> feature_names_;
    TaskKind task_;
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
};

struct SplitPair {
    Dataset train;  // D1, models are fit here
    Dataset test;   // D2, scores are evaluated here
    std::uint64_t split_seed = 0;
};

// Reads an RFC-4180 style CSV (header row, '.' decimal separator, UTF-8).
// Categorical columns expand to one-hot indicator columns named
// "<col>=<level>", levels in lexicographic order, placed at the original
// column position. Classification targets map their two observed levels to
// {0,1} in lexicographic order; more than two levels is an error. Missing
// cells and non-finite values are hard errors.
Dataset load_csv(const std::string& path, const std::string& target,
                 TaskKind task, bool encode_categoricals = false);

// Writes with enough digits that reloading reproduces X and y bit-exactly.
void save_csv(const Dataset& data, const std::string& path,
              const std::string& target_name = "target");

// Uniformly random row partition into floor(train_frac*N) train rows and the
// rest. Pure function of (data, train_frac, rng stream identity).
SplitPair split(const Dataset& data, double train_frac, RngStream rng);

}  // namespace iloco
