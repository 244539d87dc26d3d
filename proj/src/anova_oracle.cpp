#include "iloco/anova_oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include "iloco/errors.hpp"
#include "iloco/learners.hpp"
#include "iloco/threads.hpp"

namespace iloco {

void AnovaModel::validate() const {
    if (n_features < 1) throw InvalidSpecError("anova model needs n_features >= 1");
    std::set<FeatureSet> seen;
    for (const auto& c : components) {
        if (c.vars.empty()) {
            throw InvalidSpecError("anova component needs at least one variable "
                                   "(constants go into the intercept)");
        }
        for (std::size_t i = 0; i < c.vars.size(); ++i) {
            if (c.vars[i] < 0 || c.vars[i] >= n_features) {
                throw InvalidSpecError("anova component variable out of range");
            }
            if (i + 1 < c.vars.size() && c.vars[i] >= c.vars[i + 1]) {
                throw InvalidSpecError("anova component variables must be sorted "
                                       "and distinct");
            }
        }
        if (!seen.insert(c.vars).second) {
            throw InvalidSpecError("duplicate anova component " +
                                   feature_set_to_string(c.vars));
        }
    }
    if (clip && !(clip->first < clip->second)) {
        throw InvalidSpecError("anova clip range must satisfy lo < hi");
    }
}

double AnovaModel::reduced_predict(std::span<const double> x,
                                   const FeatureSet& excluded) const {
    double out = intercept;
    for (const auto& c : components) {
        bool removed = false;
        for (int v : c.vars) {
            if (std::binary_search(excluded.begin(), excluded.end(), v)) {
                removed = true;
                break;
            }
        }
        if (removed) continue;
        double term = c.coef;
        for (int v : c.vars) term *= x[static_cast<std::size_t>(v)];
        out += term;
    }
    if (clip) out = std::clamp(out, clip->first, clip->second);
    return out;
}

AnovaModel AnovaModel::clipped(double lo, double hi) const {
    AnovaModel m = *this;
    m.clip = {lo, hi};
    return m;
}

namespace {

void check_interaction_set(const AnovaModel& model, const FeatureSet& s) {
    if (s.size() < 2) throw InvalidSpecError("interaction sets need at least 2 features");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < 0 || s[i] >= model.n_features) {
            throw InvalidSpecError("interaction feature out of range");
        }
        if (i + 1 < s.size() && s[i] >= s[i + 1]) {
            throw InvalidSpecError("interaction set must be sorted and distinct");
        }
    }
}

std::vector<FeatureSet> nonempty_subsets(const FeatureSet& s) {
    std::vector<FeatureSet> subsets;
    const unsigned n = 1u << s.size();
    for (unsigned mask = 1; mask < n; ++mask) {
        FeatureSet t;
        for (std::size_t b = 0; b < s.size(); ++b) {
            if (mask & (1u << b)) t.push_back(s[b]);
        }
        subsets.push_back(std::move(t));
    }
    return subsets;
}

double subset_sign(const FeatureSet& t) {
    return (t.size() % 2 == 1) ? 1.0 : -1.0;
}

}  // namespace

McEstimate population_iloco_mc(const AnovaModel& model, const FeatureSet& s,
                               TaskKind task, std::size_t n_mc, RngStream rng) {
    model.validate();
    check_interaction_set(model, s);
    if (n_mc < 2) throw InvalidSpecError("population MC needs n_mc >= 2");

    AnovaModel effective = model;
    if (task == TaskKind::Classification && !effective.clip) {
        effective.clip = {0.01, 0.99};
    }
    const auto subsets = nonempty_subsets(s);

    // Fixed chunk layout: partial moments are combined in chunk order, so the
    // estimate does not depend on how many threads ran.
    const std::size_t n_chunks = std::min<std::size_t>(64, n_mc);
    std::vector<double> chunk_sum(n_chunks, 0.0);
    std::vector<double> chunk_sum_sq(n_chunks, 0.0);

    threads::parallel_for(n_chunks, [&](std::size_t c) {
        RngStream chunk_rng = rng.substream(c);
        const std::size_t lo = c * n_mc / n_chunks;
        const std::size_t hi = (c + 1) * n_mc / n_chunks;
        const auto m = static_cast<std::size_t>(effective.n_features);
        std::vector<double> x(m);
        double sum = 0, sum_sq = 0;
        for (std::size_t it = lo; it < hi; ++it) {
            for (std::size_t j = 0; j < m; ++j) x[j] = chunk_rng.next_gaussian();
            const double f_star = effective.full_predict(x);
            double y;
            if (task == TaskKind::Regression) {
                y = f_star + chunk_rng.next_gaussian();
            } else {
                y = chunk_rng.next_bernoulli(f_star) ? 1.0 : 0.0;
            }
            const double err_full = error(task, y, f_star);
            double h = 0;
            for (const auto& t : subsets) {
                const double err_t = error(task, y, effective.reduced_predict(x, t));
                h += subset_sign(t) * (err_t - err_full);
            }
            sum += h;
            sum_sq += h * h;
        }
        chunk_sum[c] = sum;
        chunk_sum_sq[c] = sum_sq;
    });

    double sum = 0, sum_sq = 0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        sum += chunk_sum[c];
        sum_sq += chunk_sum_sq[c];
    }
    const double n = static_cast<double>(n_mc);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return McEstimate{mean, std::sqrt(var / n)};
}

double closed_form_iloco(const AnovaModel& model, const FeatureSet& s, TaskKind task) {
    model.validate();
    check_interaction_set(model, s);
    if (model.clip) {
        throw ClippedModelUnsupportedError(
            "closed form is exact only for unclipped monomial models; "
            "use the quadrature oracle");
    }
    double total = 0;
    for (const auto& c : model.components) {
        const bool superset = std::includes(c.vars.begin(), c.vars.end(),
                                            s.begin(), s.end());
        if (superset) total += c.coef * c.coef;
    }
    return task == TaskKind::Classification ? 2.0 * total : total;
}

namespace {

// Gauss-Hermite nodes/weights for the standard normal density via
// Golub-Welsch on the probabilists' Hermite recurrence.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = std::sqrt(static_cast<double>(i));
        jacobi(i - 1, i) = b;
        jacobi(i, i - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    nodes.resize(static_cast<std::size_t>(n));
    weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        weights[static_cast<std::size_t>(i)] = v0 * v0;
    }
}

}  // namespace

double population_iloco_quadrature(const AnovaModel& model, const FeatureSet& s,
                                   TaskKind task, int points_per_dim) {
    model.validate();
    check_interaction_set(model, s);
    if (points_per_dim < 2) throw InvalidSpecError("quadrature needs >= 2 points per dim");

    AnovaModel effective = model;
    if (task == TaskKind::Classification && !effective.clip) {
        effective.clip = {0.01, 0.99};
    }

    // Only variables that appear in some component move the integrand.
    FeatureSet active;
    for (const auto& c : effective.components) {
        for (int v : c.vars) active.push_back(v);
    }
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    const std::size_t d = active.size();
    if (d == 0) return 0.0;

    double total_points = 1;
    for (std::size_t i = 0; i < d; ++i) total_points *= points_per_dim;
    if (total_points > 4e7) {
        throw InvalidSpecError("quadrature grid too large; reduce points_per_dim "
                               "or the number of active variables");
    }

    std::vector<double> nodes, weights;
    gauss_hermite(points_per_dim, nodes, weights);

    const auto subsets = nonempty_subsets(s);
    std::vector<double> delta(subsets.size(), 0.0);

    std::vector<int> idx(d, 0);
    std::vector<double> x(static_cast<std::size_t>(effective.n_features), 0.0);
    bool done = false;
    while (!done) {
        double w = 1;
        for (std::size_t i = 0; i < d; ++i) {
            const auto node = static_cast<std::size_t>(idx[i]);
            x[static_cast<std::size_t>(active[i])] = nodes[node];
            w *= weights[node];
        }
        const double f_star = effective.full_predict(x);
        for (std::size_t t = 0; t < subsets.size(); ++t) {
            const double q_t = effective.reduced_predict(x, subsets[t]);
            if (task == TaskKind::Regression) {
                // E[(Y - q_T)^2] - E[(Y - f*)^2] integrates to (f* - q_T)^2.
                const double diff = f_star - q_t;
                delta[t] += w * diff * diff;
            } else {
                // E_Y|Y~Bern(p) of |Y - q| = p + q - 2 p q, so the difference
                // against q = f* collapses to (q_T - f*)(1 - 2 f*).
                delta[t] += w * (q_t - f_star) * (1.0 - 2.0 * f_star);
            }
        }
        // Advance the multi-index.
        for (std::size_t i = 0;; ++i) {
            if (i == d) {
                done = true;
                break;
            }
            if (++idx[i] < points_per_dim) break;
            idx[i] = 0;
        }
    }

    double result = 0;
    for (std::size_t t = 0; t < subsets.size(); ++t) {
        result += subset_sign(subsets[t]) * delta[t];
    }
    return result;
}

}  // namespace iloco
