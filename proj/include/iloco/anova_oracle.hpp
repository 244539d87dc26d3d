#pragma once

#include <optional>
#include <span>
#include <vector>

#include "iloco/dataset.hpp"
#include "iloco/occlusion.hpp"
#include "iloco/rng.hpp"

namespace iloco {

// One multilinear monomial coef * prod_{j in vars} x_j. Under independent
// standard-normal features these terms are zero-mean and mutually
// uncorrelated, with E[term^2] = coef^2.
struct AnovaComponent {
    FeatureSet vars;
    double coef = 0;
};

// Ground-truth mean function f*(x) = intercept + sum of components, optionally
// clamped into [lo, hi] so it can serve as a Bernoulli probability.
struct AnovaModel {
    std::vector<AnovaComponent> components;
    double intercept = 0;
    int n_features = 0;
    std::optional<std::pair<double, double>> clip;

    void validate() const;

    // Sum over components untouched by the excluded set, plus the intercept;
    // an empty exclusion gives f* itself. Clamped when clip is set.
    double reduced_predict(std::span<const double> x, const FeatureSet& excluded) const;
    double full_predict(std::span<const double> x) const {
        return reduced_predict(x, {});
    }

    AnovaModel clipped(double lo = 0.01, double hi = 0.99) const;
};

struct McEstimate {
    double estimate = 0;
    double se = 0;
};

// Monte-Carlo population interaction score for the set S against the oracle
// reduced predictors: regression draws y = f* + N(0,1), classification draws
// y ~ Bernoulli(f*) with f* clamped into [0.01, 0.99] when the model carries
// no clip of its own. Chunked so the result is identical at any thread count.
McEstimate population_iloco_mc(const AnovaModel& model, const FeatureSet& s,
                               TaskKind task, std::size_t n_mc, RngStream rng);

// Exact value for unclipped monomial models: sum of coef^2 over components
// containing all of S, doubled for classification. Clipped models are
// rejected; use the quadrature oracle for those.
double closed_form_iloco(const AnovaModel& model, const FeatureSet& s, TaskKind task);

// Deterministic Gauss-Hermite tensor quadrature over the model's active
// variables; handles clipped models where the closed form does not apply.
double population_iloco_quadrature(const AnovaModel& model, const FeatureSet& s,
                                   TaskKind task, int points_per_dim = 64);

}  // namespace iloco
