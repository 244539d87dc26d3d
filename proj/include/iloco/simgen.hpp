#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iloco/dataset.hpp"
#include "iloco/occlusion.hpp"

namespace iloco {

// The three benchmark mean functions. The snr factor scales the focal
// interaction term: S1 = snr*(X1*X2) + X*beta, S2 adds the chain
// X2*X3 + X3*X4 + X4*X5, S3 = snr*(X1*X2*X3) + X*beta.
enum class Scenario { S1, S2, S3 };

const char* scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct CorrelationSpec {
    enum class Kind {
        Identity,  // independent standard normal features
        Ar,        // tridiagonal precision with rho off-diagonal, PD-repaired
        Pair       // corr(X1, X2) = rho, everything else independent
    };
    Kind kind = Kind::Identity;
    double rho = 0.0;
};

struct ScenarioSpec {
    Scenario scenario = Scenario::S1;
    double snr = 1.0;
    bool nonlinear = false;  // tanh applied to every interaction term
    TaskKind task = TaskKind::Regression;
    std::size_t n_rows = 500;
    std::size_t n_features = 10;  // >= 10 so both signal and null blocks exist
    CorrelationSpec correlation;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedData {
    Dataset data;
    std::vector<double> beta;       // the replicate's main-effect coefficients
    std::string sigma_description;  // metadata echo of the covariance used
};

// Draws beta_j ~ N(2, 0.5) for j<5 (zero elsewhere), X rows i.i.d. N(0, Sigma),
// and y by the task rule (regression: f + N(0,1) noise; classification:
// Bernoulli(sigmoid(f))). Deterministic given the seed; beta is redrawn on
// every call.
GeneratedData generate(const ScenarioSpec& spec);

// 0-indexed truly interacting sets, focal set first.
std::vector<FeatureSet> true_interacting_sets(Scenario scenario);

// Important-but-correlated pair design for the correlation sweep:
// corr(X1,X2) = rho and f = pair_weight*(X1+X2) + beta_3 X3 + beta_4 X4
// + beta_5 X5, so the pair matters jointly while either feature alone is
// nearly redundant at high rho.
struct CorrelatedPairSpec {
    double rho = 0.9;
    double pair_weight = 3.0;
    TaskKind task = TaskKind::Regression;
    std::size_t n_rows = 500;
    std::size_t n_features = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

GeneratedData generate_correlated_pair(const CorrelatedPairSpec& spec);

}  // namespace iloco
