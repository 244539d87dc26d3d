#pragma once

#include <cstddef>

#include "iloco/occlusion.hpp"

namespace iloco {

// Point estimate with a normal-approximation confidence interval. The width
// always satisfies hi - lo = 2 * z_{(alpha/multiplicity)/2} * sd / sqrt(n_eval).
struct InteractionResult {
    FeatureSet features;
    double estimate = 0;
    double sd = 0;      // sample SD, n-1 denominator
    double ci_lo = 0;
    double ci_hi = 0;
    double alpha = 0.1;
    std::size_t n_eval = 0;
    std::size_t multiplicity = 1;  // Bonferroni count; 1 = unadjusted
    EstimatorTag tag = EstimatorTag::Minipatch;
    bool degenerate_variance = false;  // sd == 0, interval collapsed to a point
};

// Inverse standard-normal CDF, absolute error below 1e-9. Acklam's rational
// approximation polished by one Newton step on erfc.
double normal_quantile(double p);

// Standard normal CDF via erfc.
double normal_cdf(double z);

double interval_half_width(double alpha, std::size_t multiplicity, double sd,
                           std::size_t n_eval);

InteractionResult ci_normal(const InteractionScoreSamples& scores, double alpha,
                            std::size_t multiplicity = 1);

// True iff the interval excludes zero (either side).
bool significant(const InteractionResult& result);

}  // namespace iloco
