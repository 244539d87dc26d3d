#include "iloco/inference.hpp"

#include <cmath>

#include "iloco/errors.hpp"

namespace iloco {

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

namespace {

// Acklam's rational approximation to the probit function (~1.15e-9 relative).
double probit_acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidSpecError("normal_quantile needs p in (0,1)");
    }
    double x = probit_acklam(p);
    // One Newton step against the exact CDF pushes the error to ~1e-15.
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf > 0.0) x -= (normal_cdf(x) - p) / pdf;
    return x;
}

double interval_half_width(double alpha, std::size_t multiplicity, double sd,
                           std::size_t n_eval) {
    const double adj_alpha = alpha / static_cast<double>(multiplicity);
    const double z = normal_quantile(1.0 - adj_alpha / 2.0);
    return z * sd / std::sqrt(static_cast<double>(n_eval));
}

InteractionResult ci_normal(const InteractionScoreSamples& scores, double alpha,
                            std::size_t multiplicity) {
    if (scores.scores.size() < 2) {
        throw InvalidSpecError("ci_normal needs at least 2 score samples");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidSpecError("alpha must be in (0,1)");
    }
    if (multiplicity < 1) throw InvalidSpecError("multiplicity must be >= 1");

    const std::size_t n = scores.scores.size();
    double sum = 0;
    for (double v : scores.scores) sum += v;
    const double mean = sum / static_cast<double>(n);
    double ss = 0;
    for (double v : scores.scores) {
        const double d = v - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    InteractionResult r;
    r.features = scores.features;
    r.tag = scores.tag;
    r.estimate = mean;
    r.sd = sd;
    r.alpha = alpha;
    r.n_eval = n;
    r.multiplicity = multiplicity;
    r.degenerate_variance = (sd == 0.0);
    const double half = interval_half_width(alpha, multiplicity, sd, n);
    r.ci_lo = mean - half;
    r.ci_hi = mean + half;
    return r;
}

bool significant(const InteractionResult& result) {
    return result.ci_lo > 0.0 || result.ci_hi < 0.0;
}

}  // namespace iloco
