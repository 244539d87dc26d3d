#include "iloco/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>

#include "iloco/errors.hpp"

namespace iloco {

namespace {

std::atomic<std::uint64_t> g_fit_count{0};
std::atomic<std::uint64_t> g_predict_count{0};

}  // namespace

namespace instrumentation {
std::uint64_t fit_count() { return g_fit_count.load(std::memory_order_relaxed); }
std::uint64_t predict_count() { return g_predict_count.load(std::memory_order_relaxed); }
}  // namespace instrumentation

const char* learner_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::CartTree: return "cart";
        case LearnerKind::Ridge: return "ridge";
        case LearnerKind::KernelRidgeRbf: return "krr";
        case LearnerKind::Knn: return "knn";
    }
    return "?";
}

LearnerKind learner_from_name(const std::string& name) {
    if (name == "cart") return LearnerKind::CartTree;
    if (name == "ridge") return LearnerKind::Ridge;
    if (name == "krr" || name == "kernel_ridge") return LearnerKind::KernelRidgeRbf;
    if (name == "knn") return LearnerKind::Knn;
    throw ConfigError("unknown learner '" + name + "' (expected cart|ridge|krr|knn)");
}

LearnerSpec LearnerSpec::cart(TaskKind task, int max_depth, int min_leaf) {
    LearnerSpec s;
    s.kind = LearnerKind::CartTree;
    s.task = task;
    s.max_depth = max_depth;
    s.min_leaf = min_leaf;
    return s;
}

LearnerSpec LearnerSpec::ridge(TaskKind task, double lambda) {
    LearnerSpec s;
    s.kind = LearnerKind::Ridge;
    s.task = task;
    s.lambda = lambda;
    return s;
}

LearnerSpec LearnerSpec::kernel_ridge(TaskKind task, double lambda, double bandwidth) {
    LearnerSpec s;
    s.kind = LearnerKind::KernelRidgeRbf;
    s.task = task;
    s.lambda = lambda;
    s.bandwidth = bandwidth;
    return s;
}

LearnerSpec LearnerSpec::knn(TaskKind task, int k) {
    LearnerSpec s;
    s.kind = LearnerKind::Knn;
    s.task = task;
    s.k = k;
    return s;
}

void LearnerSpec::validate() const {
    switch (kind) {
        case LearnerKind::CartTree:
            if (max_depth < 0) throw InvalidSpecError("cart max_depth must be >= 0");
            if (min_leaf < 1) throw InvalidSpecError("cart min_leaf must be >= 1");
            break;
        case LearnerKind::Ridge:
            if (lambda < 0) throw InvalidSpecError("ridge lambda must be >= 0");
            break;
        case LearnerKind::KernelRidgeRbf:
            if (lambda < 0) throw InvalidSpecError("krr lambda must be >= 0");
            if (bandwidth < 0) throw InvalidSpecError("krr bandwidth must be > 0 (or 0 for auto)");
            break;
        case LearnerKind::Knn:
            if (k < 1) throw InvalidSpecError("knn k must be >= 1");
            break;
    }
}

double Model::predict(std::span<const double> row) const {
    g_predict_count.fetch_add(1, std::memory_order_relaxed);
    double p = predict_impl(row);
    if (task_ == TaskKind::Classification) {
        p = std::clamp(p, 0.0, 1.0);
    }
    return p;
}

// ============================================================================
// CART
// ============================================================================

namespace {

struct CartNode {
    int feature = -1;      // -1 for leaves
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;      // leaf mean / class-1 fraction
};

class CartModel final : public Model {
public:
    CartModel(std::vector<int> features, TaskKind task, std::vector<CartNode> nodes)
        : Model(std::move(features), task), nodes_(std::move(nodes)) {}

protected:
    double predict_impl(std::span<const double> row) const override {
        int idx = 0;
        while (nodes_[idx].feature >= 0) {
            const CartNode& n = nodes_[idx];
            idx = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                          : n.right;
        }
        return nodes_[idx].value;
    }

private:
    std::vector<CartNode> nodes_;
};

class CartBuilder {
public:
    CartBuilder(const Dataset& data, std::span<const int> cols, int max_depth,
                int min_leaf)
        : data_(data), cols_(cols.begin(), cols.end()), max_depth_(max_depth),
          min_leaf_(min_leaf) {
        std::sort(cols_.begin(), cols_.end());  // tie-break scans lowest index first
    }

    std::vector<CartNode> build(std::vector<std::size_t> rows) {
        grow(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    // Impurity sums: variance*n for regression, Gini*n for classification.
    // Both reduce to sum/sum-of-squares bookkeeping on 0/1 labels.
    static double impurity_times_n(double sum, double sum_sq, double n) {
        // variance*n = sum_sq - sum^2/n; for 0/1 labels sum_sq == sum and
        // 2*p*(1-p)*n = 2*(sum - sum^2/n), same minimizer either way.
        return sum_sq - sum * sum / n;
    }

    int grow(std::vector<std::size_t> rows, int depth) {
        const double n = static_cast<double>(rows.size());
        double sum = 0, sum_sq = 0;
        for (std::size_t r : rows) {
            const double v = data_.y(r);
            sum += v;
            sum_sq += v * v;
        }
        const int node_idx = static_cast<int>(nodes_.size());
        nodes_.push_back(CartNode{});
        nodes_[node_idx].value = sum / n;

        if (depth >= max_depth_ || rows.size() < 2 * static_cast<std::size_t>(min_leaf_) ||
            impurity_times_n(sum, sum_sq, n) <= 0.0) {
            return node_idx;
        }

        // Exhaustive scan over midpoints of sorted unique values; ties broken
        // by lowest feature index then lowest threshold.
        int best_feature = -1;
        double best_threshold = 0;
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<std::pair<double, double>> xy(rows.size());
        for (int col : cols_) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                xy[i] = {data_.x(rows[i], static_cast<std::size_t>(col)),
                         data_.y(rows[i])};
            }
            std::sort(xy.begin(), xy.end());
            double left_sum = 0, left_sq = 0;
            for (std::size_t i = 0; i + 1 < xy.size(); ++i) {
                left_sum += xy[i].second;
                left_sq += xy[i].second * xy[i].second;
                if (xy[i].first == xy[i + 1].first) continue;  // not a boundary
                const std::size_t n_left = i + 1;
                const std::size_t n_right = xy.size() - n_left;
                if (n_left < static_cast<std::size_t>(min_leaf_) ||
                    n_right < static_cast<std::size_t>(min_leaf_)) {
                    continue;
                }
                const double score =
                    impurity_times_n(left_sum, left_sq, static_cast<double>(n_left)) +
                    impurity_times_n(sum - left_sum, sum_sq - left_sq,
                                     static_cast<double>(n_right));
                if (score < best_score) {
                    best_score = score;
                    best_feature = col;
                    best_threshold = (xy[i].first + xy[i + 1].first) / 2.0;
                }
            }
        }
        if (best_feature < 0 || best_score >= impurity_times_n(sum, sum_sq, n)) {
            return node_idx;  // no admissible or improving split
        }

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            if (data_.x(r, static_cast<std::size_t>(best_feature)) <= best_threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        rows.clear();
        rows.shrink_to_fit();
        nodes_[node_idx].feature = best_feature;
        nodes_[node_idx].threshold = best_threshold;
        const int left = grow(std::move(left_rows), depth + 1);
        nodes_[node_idx].left = left;
        const int right = grow(std::move(right_rows), depth + 1);
        nodes_[node_idx].right = right;
        return node_idx;
    }

    const Dataset& data_;
    std::vector<int> cols_;
    int max_depth_;
    int min_leaf_;
    std::vector<CartNode> nodes_;
};

// ============================================================================
// Ridge
// ============================================================================

class LinearModel final : public Model {
public:
    LinearModel(std::vector<int> features, TaskKind task, std::vector<double> coef,
                double intercept)
        : Model(std::move(features), task), coef_(std::move(coef)),
          intercept_(intercept) {}

protected:
    double predict_impl(std::span<const double> row) const override {
        double p = intercept_;
        for (std::size_t j = 0; j < features_.size(); ++j) {
            p += coef_[j] * row[static_cast<std::size_t>(features_[j])];
        }
        return p;
    }

private:
    std::vector<double> coef_;
    double intercept_;
};

// SPD solve with a jitter retry; the last resort LDLT never throws, matching
// the "fall back, never crash" degeneracy contract.
Eigen::VectorXd solve_spd(Eigen::MatrixXd a, const Eigen::VectorXd& b) {
    const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        Eigen::VectorXd x = llt.solve(b);
        if (x.allFinite()) return x;
    }
    a.diagonal().array() += (jitter > 0 ? jitter : 1e-12);
    llt.compute(a);
    if (llt.info() == Eigen::Success) {
        Eigen::VectorXd x = llt.solve(b);
        if (x.allFinite()) return x;
    }
    Eigen::VectorXd x = a.ldlt().solve(b);
    if (!x.allFinite()) x.setZero();
    return x;
}

FittedModel fit_ridge(const LearnerSpec& spec, const Dataset& data,
                      std::span<const std::size_t> rows, std::span<const int> cols) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = data.row(rows[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < p; ++j) {
            x(i, j) = row[static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])];
        }
        y(i) = data.y(rows[static_cast<std::size_t>(i)]);
    }
    // Centered fit keeps the intercept unpenalized.
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    x.rowwise() -= x_mean;
    y.array() -= y_mean;

    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += spec.lambda;
    Eigen::VectorXd beta;
    if (gram.trace() <= 0.0) {
        beta = Eigen::VectorXd::Zero(p);  // constant features: intercept-only
    } else {
        beta = solve_spd(std::move(gram), x.transpose() * y);
    }
    const double intercept = y_mean - x_mean.dot(beta);
    return std::make_shared<LinearModel>(
        std::vector<int>(cols.begin(), cols.end()), spec.task,
        std::vector<double>(beta.data(), beta.data() + beta.size()), intercept);
}

// ============================================================================
// RBF kernel ridge
// ============================================================================

class KernelRidgeModel final : public Model {
public:
    KernelRidgeModel(std::vector<int> features, TaskKind task,
                     std::vector<double> train_x, std::vector<double> alpha,
                     double bandwidth)
        : Model(std::move(features), task), train_x_(std::move(train_x)),
          alpha_(std::move(alpha)), inv_two_bw_sq_(1.0 / (2.0 * bandwidth * bandwidth)) {}

protected:
    double predict_impl(std::span<const double> row) const override {
        const std::size_t p = features_.size();
        double out = 0;
        for (std::size_t i = 0; i < alpha_.size(); ++i) {
            const double* xi = train_x_.data() + i * p;
            double d2 = 0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = xi[j] - row[static_cast<std::size_t>(features_[j])];
                d2 += d * d;
            }
            out += alpha_[i] * std::exp(-d2 * inv_two_bw_sq_);
        }
        return out;
    }

private:
    std::vector<double> train_x_;  // |rows| x |features|, selected columns only
    std::vector<double> alpha_;
    double inv_two_bw_sq_;
};

FittedModel fit_kernel_ridge(const LearnerSpec& spec, const Dataset& data,
                             std::span<const std::size_t> rows,
                             std::span<const int> cols) {
    const std::size_t n = rows.size();
    const std::size_t p = cols.size();
    const double bw = spec.bandwidth > 0 ? spec.bandwidth
                                         : std::sqrt(static_cast<double>(p));
    std::vector<double> train_x(n * p);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = data.row(rows[i]);
        for (std::size_t j = 0; j < p; ++j) {
            train_x[i * p + j] = row[static_cast<std::size_t>(cols[j])];
        }
        y(static_cast<Eigen::Index>(i)) = data.y(rows[i]);
    }
    Eigen::MatrixXd kmat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const double inv = 1.0 / (2.0 * bw * bw);
    for (std::size_t i = 0; i < n; ++i) {
        kmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
        for (std::size_t l = i + 1; l < n; ++l) {
            double d2 = 0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = train_x[i * p + j] - train_x[l * p + j];
                d2 += d * d;
            }
            const double k = std::exp(-d2 * inv);
            kmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = k;
            kmat(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) = k;
        }
    }
    kmat.diagonal().array() += spec.lambda;
    Eigen::VectorXd alpha = solve_spd(std::move(kmat), y);
    return std::make_shared<KernelRidgeModel>(
        std::vector<int>(cols.begin(), cols.end()), spec.task, std::move(train_x),
        std::vector<double>(alpha.data(), alpha.data() + alpha.size()), bw);
}

// ============================================================================
// k-NN
// ============================================================================

class KnnModel final : public Model {
public:
    KnnModel(std::vector<int> features, TaskKind task, std::vector<double> train_x,
             std::vector<double> train_y, int k)
        : Model(std::move(features), task), train_x_(std::move(train_x)),
          train_y_(std::move(train_y)), k_(static_cast<std::size_t>(k)) {}

protected:
    double predict_impl(std::span<const double> row) const override {
        const std::size_t p = features_.size();
        const std::size_t n = train_y_.size();
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = train_x_.data() + i * p;
            double d2 = 0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = xi[j] - row[static_cast<std::size_t>(features_[j])];
                d2 += d * d;
            }
            dist[i] = {d2, i};  // pair ordering breaks distance ties by row index
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_),
                          dist.end());
        double sum = 0;
        for (std::size_t i = 0; i < k_; ++i) sum += train_y_[dist[i].second];
        return sum / static_cast<double>(k_);
    }

private:
    std::vector<double> train_x_;
    std::vector<double> train_y_;
    std::size_t k_;
};

}  // namespace

FittedModel fit(const LearnerSpec& spec, const Dataset& data,
                std::span<const std::size_t> rows, std::span<const int> cols,
                RngStream rng) {
    (void)rng;  // current learners are deterministic; kept in the contract
    g_fit_count.fetch_add(1, std::memory_order_relaxed);
    spec.validate();
    if (rows.size() < 2) throw TooFewRowsError("fit needs at least 2 rows");
    if (cols.empty()) throw InvalidSpecError("fit needs at least 1 column");
    for (int c : cols) {
        if (c < 0 || static_cast<std::size_t>(c) >= data.n_cols()) {
            throw InvalidSpecError("fit column index out of range");
        }
    }

    switch (spec.kind) {
        case LearnerKind::CartTree: {
            CartBuilder builder(data, cols, spec.max_depth, spec.min_leaf);
            auto nodes = builder.build({rows.begin(), rows.end()});
            return std::make_shared<CartModel>(
                std::vector<int>(cols.begin(), cols.end()), spec.task,
                std::move(nodes));
        }
        case LearnerKind::Ridge:
            return fit_ridge(spec, data, rows, cols);
        case LearnerKind::KernelRidgeRbf:
            return fit_kernel_ridge(spec, data, rows, cols);
        case LearnerKind::Knn:
            if (static_cast<std::size_t>(spec.k) > rows.size()) {
                throw InvalidSpecError("knn k exceeds the number of training rows");
            }
            {
                const std::size_t p = cols.size();
                std::vector<double> tx(rows.size() * p);
                std::vector<double> ty(rows.size());
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const auto row = data.row(rows[i]);
                    for (std::size_t j = 0; j < p; ++j) {
                        tx[i * p + j] = row[static_cast<std::size_t>(cols[j])];
                    }
                    ty[i] = data.y(rows[i]);
                }
                return std::make_shared<KnnModel>(
                    std::vector<int>(cols.begin(), cols.end()), spec.task,
                    std::move(tx), std::move(ty), spec.k);
            }
    }
    throw InvalidSpecError("unknown learner kind");
}

}  // namespace iloco
