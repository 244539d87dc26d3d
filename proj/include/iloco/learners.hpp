#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iloco/dataset.hpp"
#include "iloco/rng.hpp"

namespace iloco {

enum class LearnerKind { CartTree, Ridge, KernelRidgeRbf, Knn };

const char* learner_name(LearnerKind kind);
LearnerKind learner_from_name(const std::string& name);

// Base-learner choice plus hyperparameters. Everything downstream consumes
// learners only through fit/predict/error, so swapping kinds never touches
// estimator code.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::CartTree;
    TaskKind task = TaskKind::Regression;

    int max_depth = 6;        // CartTree
    int min_leaf = 5;         // CartTree
    double lambda = 1e-3;     // Ridge / KernelRidgeRbf
    double bandwidth = 0.0;   // KernelRidgeRbf; 0 = sqrt(#model features)
    int k = 5;                // Knn

    static LearnerSpec cart(TaskKind task, int max_depth = 6, int min_leaf = 5);
    static LearnerSpec ridge(TaskKind task, double lambda = 1e-3);
    static LearnerSpec kernel_ridge(TaskKind task, double lambda = 1e-2,
                                    double bandwidth = 0.0);
    static LearnerSpec knn(TaskKind task, int k = 5);

    void validate() const;  // throws InvalidSpecError on out-of-range values
};

// A trained predictor over a declared feature subset. predict() reads only
// feature_set columns of the full-width row; classification outputs are
// clamped to [0,1]. Immutable after fit, safe for concurrent predict calls.
class Model {
public:
    virtual ~Model() = default;

    double predict(std::span<const double> row) const;

    const std::vector<int>& feature_set() const { return features_; }
    TaskKind task() const { return task_; }

protected:
    Model(std::vector<int> features, TaskKind task)
        : features_(std::move(features)), task_(task) {}

    virtual double predict_impl(std::span<const double> row) const = 0;

    std::vector<int> features_;
    TaskKind task_;
};

using FittedModel = std::shared_ptr<const Model>;

// Trains spec's learner on data restricted to (rows, cols). Deterministic
// given (spec, data, rows, cols, rng stream identity).
FittedModel fit(const LearnerSpec& spec, const Dataset& data,
                std::span<const std::size_t> rows, std::span<const int> cols,
                RngStream rng);

// Squared error for regression, absolute error for classification.
inline double error(TaskKind task, double y, double yhat) {
    if (task == TaskKind::Regression) {
        const double d = y - yhat;
        return d * d;
    }
    return std::abs(y - yhat);
}

// Process-wide monotonic counters; tests assert zero-refit behavior by
// differencing them around an operation.
namespace instrumentation {
std::uint64_t fit_count();
std::uint64_t predict_count();
}  // namespace instrumentation

}  // namespace iloco
