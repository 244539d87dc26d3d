#include <doctest.h>

#include <cmath>

#include "iloco/simgen.hpp"

using namespace iloco;

namespace {

// corr(X1, X2) under the M=10, rho=0.8 repaired precision design, frozen from
// the exact covariance algebra (delta = |lambda_min| + 0.05 = 0.58519).
constexpr double kFrozenArCorr01 = -0.696752091463;

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> column(const Dataset& d, std::size_t j) {
    std::vector<double> out(d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i) out[i] = d.x(i, j);
    return out;
}

}  // namespace

TEST_CASE("true interacting sets per scenario") {
    CHECK(true_interacting_sets(Scenario::S1) == std::vector<FeatureSet>{{0, 1}});
    CHECK(true_interacting_sets(Scenario::S2) ==
          std::vector<FeatureSet>{{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    CHECK(true_interacting_sets(Scenario::S3) == std::vector<FeatureSet>{{0, 1, 2}});
}

TEST_CASE("generation is deterministic given the seed") {
    ScenarioSpec spec;
    spec.scenario = Scenario::S2;
    spec.snr = 3;
    spec.n_rows = 50;
    spec.seed = 99;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.data.values() == b.data.values());
    CHECK(a.data.labels() == b.data.labels());
    CHECK(a.beta == b.beta);

    spec.seed = 100;
    const auto c = generate(spec);
    CHECK(a.data.values() != c.data.values());
}

TEST_CASE("snr zero leaves the interaction signal uncorrelated with y") {
    ScenarioSpec spec;
    spec.snr = 0;
    spec.n_rows = 10000;
    spec.seed = 4;
    const auto gen = generate(spec);
    std::vector<double> signal(spec.n_rows);
    std::vector<double> resid(spec.n_rows);
    for (std::size_t i = 0; i < spec.n_rows; ++i) {
        signal[i] = gen.data.x(i, 0) * gen.data.x(i, 1);
        double xb = 0;
        for (std::size_t j = 0; j < spec.n_features; ++j) {
            xb += gen.beta[j] * gen.data.x(i, j);
        }
        resid[i] = gen.data.y(i) - xb;
    }
    CHECK(std::abs(corr(signal, resid)) < 0.05);
}

TEST_CASE("variance of y matches the moment identity at large N") {
    // var(y) = snr^2 * E[(X1 X2)^2] + sum beta_j^2 + 1 with identity covariance.
    ScenarioSpec spec;
    spec.snr = 4;
    spec.n_rows = 100000;
    spec.seed = 12;
    const auto gen = generate(spec);
    double beta_sq = 0;
    for (double b : gen.beta) beta_sq += b * b;
    const double theory = 16.0 + beta_sq + 1.0;

    const auto& y = gen.data.labels();
    const double m = mean_of(y);
    double s2 = 0, m4 = 0;
    for (double v : y) {
        const double d = v - m;
        s2 += d * d;
        m4 += d * d * d * d;
    }
    const auto n = static_cast<double>(y.size());
    s2 /= n - 1;
    m4 /= n;
    const double se_var = std::sqrt((m4 - s2 * s2) / n);
    CHECK(std::abs(s2 - theory) <= 3.0 * se_var);
}

TEST_CASE("classification outputs are bernoulli labels") {
    ScenarioSpec spec;
    spec.task = TaskKind::Classification;
    spec.snr = 2;
    spec.n_rows = 4000;
    spec.seed = 21;
    const auto gen = generate(spec);
    for (double v : gen.data.labels()) CHECK((v == 0.0 || v == 1.0));
    const double m = mean_of(gen.data.labels());
    CHECK(m > 0.0);
    CHECK(m < 1.0);
}

TEST_CASE("identity covariance is near the identity empirically") {
    ScenarioSpec spec;
    spec.n_rows = 100000;
    spec.seed = 31;
    const auto gen = generate(spec);
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < spec.n_features; ++j) cols.push_back(column(gen.data, j));
    for (std::size_t a = 0; a < spec.n_features; ++a) {
        for (std::size_t b = a; b < spec.n_features; ++b) {
            double cov = 0;
            const double ma = mean_of(cols[a]), mb = mean_of(cols[b]);
            for (std::size_t i = 0; i < spec.n_rows; ++i) {
                cov += (cols[a][i] - ma) * (cols[b][i] - mb);
            }
            cov /= static_cast<double>(spec.n_rows - 1);
            const double target = a == b ? 1.0 : 0.0;
            CHECK(std::abs(cov - target) < 0.02);
        }
    }
}

TEST_CASE("pair correlation design hits the requested rho") {
    ScenarioSpec spec;
    spec.correlation.kind = CorrelationSpec::Kind::Pair;
    spec.correlation.rho = 0.9;
    spec.n_rows = 50000;
    spec.seed = 44;
    const auto gen = generate(spec);
    CHECK(corr(column(gen.data, 0), column(gen.data, 1)) ==
          doctest::Approx(0.9).epsilon(0.02));
    CHECK(std::abs(corr(column(gen.data, 0), column(gen.data, 2))) < 0.03);
}

TEST_CASE("ar precision design is repaired, rescaled, and stable") {
    ScenarioSpec spec;
    spec.correlation.kind = CorrelationSpec::Kind::Ar;
    spec.correlation.rho = 0.8;
    spec.n_rows = 100000;
    spec.seed = 8;
    const auto gen = generate(spec);
    CHECK(gen.sigma_description.find("pd-repair") != std::string::npos);
    // Unit diagonal after rescaling.
    for (std::size_t j = 0; j < 3; ++j) {
        const auto col = column(gen.data, j);
        const double m = mean_of(col);
        double var = 0;
        for (double v : col) var += (v - m) * (v - m);
        var /= static_cast<double>(col.size() - 1);
        CHECK(var == doctest::Approx(1.0).epsilon(0.03));
    }
    // Frozen regression value for corr(X1, X2) under the repaired design:
    // positive precision off-diagonal forces a negative correlation.
    const double c01 = corr(column(gen.data, 0), column(gen.data, 1));
    CHECK(c01 < 0.0);
    CHECK(c01 == doctest::Approx(kFrozenArCorr01).epsilon(0.03));
}

TEST_CASE("nonlinear variant bounds the interaction contribution") {
    ScenarioSpec spec;
    spec.snr = 4;
    spec.nonlinear = true;
    spec.n_rows = 60000;
    spec.seed = 87;
    const auto gen = generate(spec);
    // y - X*beta = snr*tanh(x0 x1) + eps, so its variance is at most snr^2 + 1
    // and strictly below the linear variant's snr^2 * E[(x0 x1)^2] + 1.
    std::vector<double> resid(spec.n_rows);
    for (std::size_t i = 0; i < spec.n_rows; ++i) {
        double xb = 0;
        for (std::size_t j = 0; j < spec.n_features; ++j) {
            xb += gen.beta[j] * gen.data.x(i, j);
        }
        resid[i] = gen.data.y(i) - xb;
    }
    const double m = mean_of(resid);
    double var = 0;
    for (double v : resid) var += (v - m) * (v - m);
    var /= static_cast<double>(resid.size() - 1);
    CHECK(var < 16.0 + 1.0);
    CHECK(var > 1.0);
}

TEST_CASE("correlated pair design weights the pair and three mains") {
    CorrelatedPairSpec spec;
    spec.rho = 0.6;
    spec.pair_weight = 3.0;
    spec.n_rows = 40000;
    spec.seed = 5;
    const auto gen = generate_correlated_pair(spec);
    CHECK(gen.beta[0] == 3.0);
    CHECK(gen.beta[1] == 3.0);
    CHECK(gen.beta[2] != 0.0);
    CHECK(gen.beta[5] == 0.0);
    CHECK(corr(column(gen.data, 0), column(gen.data, 1)) ==
          doctest::Approx(0.6).epsilon(0.03));
}

TEST_CASE("scenario spec validation") {
    ScenarioSpec spec;
    spec.n_features = 5;
    CHECK_THROWS_AS(generate(spec), InvalidSpecError);
    ScenarioSpec neg;
    neg.snr = -1;
    CHECK_THROWS_AS(generate(neg), InvalidSpecError);
}
