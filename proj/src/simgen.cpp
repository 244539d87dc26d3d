#include "iloco/simgen.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <sstream>

#include "iloco/errors.hpp"

namespace iloco {

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::S1: return "i";
        case Scenario::S2: return "ii";
        case Scenario::S3: return "iii";
    }
    return "?";
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "i" || name == "1" || name == "s1") return Scenario::S1;
    if (name == "ii" || name == "2" || name == "s2") return Scenario::S2;
    if (name == "iii" || name == "3" || name == "s3") return Scenario::S3;
    throw ConfigError("unknown scenario '" + name + "' (expected i|ii|iii)");
}

void ScenarioSpec::validate() const {
    if (n_features < 10) throw InvalidSpecError("scenario needs at least 10 features");
    if (n_rows < 2) throw InvalidSpecError("scenario needs at least 2 rows");
    if (snr < 0) throw InvalidSpecError("snr must be >= 0");
    if (correlation.kind != CorrelationSpec::Kind::Identity) {
        if (!(correlation.rho >= 0.0 && correlation.rho < 1.0)) {
            throw InvalidSpecError("correlation rho must be in [0,1)");
        }
    }
}

void CorrelatedPairSpec::validate() const {
    if (n_features < 10) throw InvalidSpecError("correlated design needs >= 10 features");
    if (n_rows < 2) throw InvalidSpecError("correlated design needs >= 2 rows");
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidSpecError("rho must be in [0,1)");
}

namespace {

constexpr double kBetaMean = 2.0;
constexpr double kBetaVariance = 0.5;
constexpr std::size_t kSignalFeatures = 5;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::vector<double> draw_beta(std::size_t m, RngStream& rng) {
    std::vector<double> beta(m, 0.0);
    for (std::size_t j = 0; j < kSignalFeatures && j < m; ++j) {
        beta[j] = rng.next_gaussian(kBetaMean, std::sqrt(kBetaVariance));
    }
    return beta;
}

// Row factor L with Sigma = L L^T, plus a human-readable description.
// The Ar design follows the tridiagonal-precision convention: if the
// precision matrix is indefinite it is repaired by adding |lambda_min|+0.05
// to the diagonal before inverting, and the covariance is rescaled to unit
// diagonal.
Eigen::MatrixXd covariance_factor(const CorrelationSpec& corr, std::size_t m,
                                  std::string& description) {
    const auto mi = static_cast<Eigen::Index>(m);
    switch (corr.kind) {
        case CorrelationSpec::Kind::Identity: {
            description = "identity";
            return Eigen::MatrixXd::Identity(mi, mi);
        }
        case CorrelationSpec::Kind::Pair: {
            std::ostringstream os;
            os << "pair(rho=" << corr.rho << ") between features 0 and 1";
            description = os.str();
            Eigen::MatrixXd l = Eigen::MatrixXd::Identity(mi, mi);
            l(1, 0) = corr.rho;
            l(1, 1) = std::sqrt(1.0 - corr.rho * corr.rho);
            return l;
        }
        case CorrelationSpec::Kind::Ar: {
            Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(mi, mi);
            for (Eigen::Index j = 0; j + 1 < mi; ++j) {
                omega(j, j + 1) = corr.rho;
                omega(j + 1, j) = corr.rho;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
            const double lambda_min = eig.eigenvalues().minCoeff();
            double delta = 0.0;
            if (lambda_min <= 0.0) {
                delta = std::abs(lambda_min) + 0.05;
                omega.diagonal().array() += delta;
            }
            Eigen::MatrixXd sigma = omega.inverse();
            const Eigen::VectorXd scale = sigma.diagonal().array().sqrt().inverse();
            sigma = scale.asDiagonal() * sigma * scale.asDiagonal();
            std::ostringstream os;
            os << "ar precision(rho=" << corr.rho << ", pd-repair delta=" << delta
               << "), covariance rescaled to unit diagonal";
            description = os.str();
            return Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
        }
    }
    throw InvalidSpecError("unknown correlation kind");
}

std::vector<std::string> default_names(std::size_t m) {
    std::vector<std::string> names(m);
    for (std::size_t j = 0; j < m; ++j) names[j] = "x" + std::to_string(j + 1);
    return names;
}

GeneratedData assemble(std::size_t n, std::size_t m, TaskKind task,
                       const Eigen::MatrixXd& factor, std::string sigma_desc,
                       std::vector<double> beta,
                       const std::function<double(const double*)>& mean_fn,
                       RngStream x_rng, RngStream y_rng) {
    std::vector<double> x(n * m);
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    const bool identity = factor.isIdentity(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            z(static_cast<Eigen::Index>(j)) = x_rng.next_gaussian();
        }
        if (identity) {
            for (std::size_t j = 0; j < m; ++j) x[i * m + j] = z(static_cast<Eigen::Index>(j));
        } else {
            const Eigen::VectorXd row = factor * z;
            for (std::size_t j = 0; j < m; ++j) x[i * m + j] = row(static_cast<Eigen::Index>(j));
        }
    }

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double f = mean_fn(x.data() + i * m);
        for (std::size_t j = 0; j < m; ++j) f += beta[j] * x[i * m + j];
        if (task == TaskKind::Regression) {
            y[i] = f + y_rng.next_gaussian();
        } else {
            y[i] = y_rng.next_bernoulli(sigmoid(f)) ? 1.0 : 0.0;
        }
    }

    Dataset data(std::move(x), std::move(y), default_names(m), task);
    return GeneratedData{std::move(data), std::move(beta), std::move(sigma_desc)};
}

}  // namespace

GeneratedData generate(const ScenarioSpec& spec) {
    spec.validate();
    RngStream root(spec.seed);
    RngStream beta_rng = root.substream(0);
    RngStream x_rng = root.substream(1);
    RngStream y_rng = root.substream(2);

    std::string desc;
    const Eigen::MatrixXd factor = covariance_factor(spec.correlation, spec.n_features, desc);
    std::vector<double> beta = draw_beta(spec.n_features, beta_rng);

    const double snr = spec.snr;
    const bool nonlinear = spec.nonlinear;
    const auto term = [nonlinear](double v) { return nonlinear ? std::tanh(v) : v; };
    std::function<double(const double*)> mean_fn;
    switch (spec.scenario) {
        case Scenario::S1:
            mean_fn = [snr, term](const double* x) { return snr * term(x[0] * x[1]); };
            break;
        case Scenario::S2:
            mean_fn = [snr, term](const double* x) {
                return snr * term(x[0] * x[1]) + term(x[1] * x[2]) +
                       term(x[2] * x[3]) + term(x[3] * x[4]);
            };
            break;
        case Scenario::S3:
            mean_fn = [snr, term](const double* x) {
                return snr * term(x[0] * x[1] * x[2]);
            };
            break;
    }
    return assemble(spec.n_rows, spec.n_features, spec.task, factor, std::move(desc),
                    std::move(beta), mean_fn, x_rng, y_rng);
}

std::vector<FeatureSet> true_interacting_sets(Scenario scenario) {
    switch (scenario) {
        case Scenario::S1: return {{0, 1}};
        case Scenario::S2: return {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
        case Scenario::S3: return {{0, 1, 2}};
    }
    return {};
}

GeneratedData generate_correlated_pair(const CorrelatedPairSpec& spec) {
    spec.validate();
    RngStream root(spec.seed);
    RngStream beta_rng = root.substream(0);
    RngStream x_rng = root.substream(1);
    RngStream y_rng = root.substream(2);

    CorrelationSpec corr;
    corr.kind = CorrelationSpec::Kind::Pair;
    corr.rho = spec.rho;
    std::string desc;
    const Eigen::MatrixXd factor = covariance_factor(corr, spec.n_features, desc);
    desc += "; mean = pair_weight*(x1+x2) + beta_3 x3 + beta_4 x4 + beta_5 x5";

    // The pair weight lives in beta slots 0 and 1 so the reported beta vector
    // fully describes the replicate's linear mean.
    std::vector<double> beta(spec.n_features, 0.0);
    beta[0] = spec.pair_weight;
    beta[1] = spec.pair_weight;
    for (std::size_t j = 2; j < kSignalFeatures && j < spec.n_features; ++j) {
        beta[j] = beta_rng.next_gaussian(kBetaMean, std::sqrt(kBetaVariance));
    }
    const auto mean_fn = [](const double*) { return 0.0; };
    return assemble(spec.n_rows, spec.n_features, spec.task, factor, std::move(desc),
                    std::move(beta), mean_fn, x_rng, y_rng);
}

}  // namespace iloco
