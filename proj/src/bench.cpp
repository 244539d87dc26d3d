#include "iloco/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iloco/errors.hpp"
#include "iloco/inference.hpp"
#include "iloco/split_estimator.hpp"

namespace iloco {

using nlohmann::json;

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Success: return "success";
        case Protocol::CorrelatedDetect: return "correlated";
        case Protocol::Coverage: return "coverage";
        case Protocol::Timing: return "timing";
    }
    return "?";
}

Protocol protocol_from_name(const std::string& name) {
    if (name == "success") return Protocol::Success;
    if (name == "correlated") return Protocol::CorrelatedDetect;
    if (name == "coverage") return Protocol::Coverage;
    if (name == "timing") return Protocol::Timing;
    throw ConfigError("unknown protocol '" + name + "'");
}

const char* method_name(Method m) {
    return m == Method::Minipatch ? "mp" : "split";
}

Method method_from_name(const std::string& name) {
    if (name == "mp") return Method::Minipatch;
    if (name == "split") return Method::Split;
    throw ConfigError("unknown method '" + name + "' (expected mp|split)");
}

void ExperimentSpec::validate() const {
    if (grid.empty()) throw InvalidSpecError("experiment grid must be non-empty");
    if (replicates < 1) throw InvalidSpecError("replicates must be >= 1");
    if (!(alpha > 0 && alpha < 1)) throw InvalidSpecError("alpha must be in (0,1)");
    if (order < 2 || order > 4) throw InvalidSpecError("scored order must be 2..4");
    if (coverage_pair.size() != 2 || coverage_pair[0] >= coverage_pair[1]) {
        throw InvalidSpecError("coverage_pair must be two sorted feature indices");
    }
    if (protocol == Protocol::Success) {
        const auto truth = true_interacting_sets(scenario.scenario);
        if (static_cast<int>(truth.front().size()) != order) {
            throw InvalidSpecError(
                "scored order must match the scenario's focal interaction order");
        }
    }
}

namespace {

double binomial_se(double p, std::size_t n) {
    if (n == 0) return 0;
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

std::uint64_t derive_seed(RngStream rep, std::uint64_t slot) {
    RngStream s = rep.substream(slot);
    return s.next_u64();
}

std::vector<FeatureSet> all_sets_of_order(std::size_t m, int order) {
    std::vector<FeatureSet> sets;
    if (order == 2) {
        for (int j = 0; j + 1 < static_cast<int>(m); ++j) {
            for (int k = j + 1; k < static_cast<int>(m); ++k) sets.push_back({j, k});
        }
    } else {
        FeatureSet current;
        std::function<void(int)> rec = [&](int start) {
            if (static_cast<int>(current.size()) == order) {
                sets.push_back(current);
                return;
            }
            for (int j = start; j < static_cast<int>(m); ++j) {
                current.push_back(j);
                rec(j + 1);
                current.pop_back();
            }
        };
        rec(0);
    }
    return sets;
}

MinipatchConfig make_mp_config(const ExperimentSpec& spec, std::uint64_t seed,
                               int order) {
    MinipatchConfig cfg = spec.mp;
    cfg.learner = spec.learner;
    cfg.seed = seed;
    cfg.max_order = std::max(cfg.max_order, order);
    return cfg;
}

// Mean scores for every set of the given order under the chosen method.
std::vector<SetScore> score_all_sets(const ExperimentSpec& spec, const Dataset& data,
                                     RngStream rep, int order) {
    std::vector<SetScore> means;
    if (spec.method == Method::Minipatch) {
        LearnerSpec learner = spec.learner;
        learner.task = data.task();
        ExperimentSpec local = spec;
        local.learner = learner;
        const auto ens =
            MinipatchEnsemble::train(data, make_mp_config(local, derive_seed(rep, 1), order));
        if (order == 2) {
            const PairScan scan = ens.all_pairs_scores();
            if (!scan.failures.empty()) {
                throw EstimatorError("pair scan failures: " +
                                     scan.failures.front().message);
            }
            means.reserve(scan.scores.size());
            for (const auto& s : scan.scores) {
                means.push_back({s.features, mean_score(s)});
            }
        } else {
            for (const auto& set : all_sets_of_order(data.n_cols(), order)) {
                means.push_back({set, mean_score(iloco_samples(ens, set))});
            }
        }
    } else {
        LearnerSpec learner = spec.learner;
        learner.task = data.task();
        const SplitPair sp = split(data, spec.train_frac, rep.substream(2));
        const auto targets = all_sets_of_order(data.n_cols(), order);
        const SplitFit sf = fit_split(sp, learner, targets, rep.substream(3));
        for (const auto& set : targets) {
            means.push_back({set, mean_score(iloco_samples(sf, set))});
        }
    }
    return means;
}

struct ReplicateTally {
    std::size_t completed = 0;
    std::size_t failures = 0;
    std::size_t hits = 0;
    std::size_t hits_secondary = 0;
    std::string last_failure;
};

void check_failure_budget(const ExperimentSpec& spec, const ReplicateTally& tally) {
    const double frac = static_cast<double>(tally.failures) /
                        static_cast<double>(spec.replicates);
    if (frac > spec.max_failure_rate) {
        throw EstimatorError("replicate failure rate " + std::to_string(frac) +
                             " exceeds budget " + std::to_string(spec.max_failure_rate) +
                             "; last failure: " + tally.last_failure);
    }
}

ExperimentReport make_report(const ExperimentSpec& spec, std::string grid_name) {
    ExperimentReport report;
    report.protocol = protocol_name(spec.protocol);
    report.method = method_name(spec.method);
    report.grid_name = std::move(grid_name);
    report.spec_json = experiment_spec_to_json(spec);
    return report;
}

}  // namespace

ExperimentReport run_success(const ExperimentSpec& spec) {
    spec.validate();
    const FeatureSet target = true_interacting_sets(spec.scenario.scenario).front();
    ExperimentReport report = make_report(spec, "snr");
    RngStream root(spec.seed);

    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        ReplicateTally tally;
        for (std::size_t r = 0; r < spec.replicates; ++r) {
            RngStream rep = root.substream(g * spec.replicates + r);
            ScenarioSpec scenario = spec.scenario;
            scenario.snr = spec.grid[g];
            scenario.seed = derive_seed(rep, 0);
            try {
                const GeneratedData gen = generate(scenario);
                const auto means = score_all_sets(spec, gen.data, rep, spec.order);
                const auto ranked = rank_pairs(means);
                ++tally.completed;
                if (ranked.front().features == target) ++tally.hits;
            } catch (const EstimatorError& e) {
                ++tally.failures;
                tally.last_failure = e.what();
            }
        }
        check_failure_budget(spec, tally);
        GridPointReport point;
        point.grid_value = spec.grid[g];
        point.replicates = tally.completed;
        point.failures = tally.failures;
        point.set_count = all_sets_of_order(spec.scenario.n_features, spec.order).size();
        point.rate = tally.completed
                         ? static_cast<double>(tally.hits) / static_cast<double>(tally.completed)
                         : 0.0;
        point.se = binomial_se(point.rate, tally.completed);
        report.points.push_back(point);
    }
    return report;
}

ExperimentReport run_correlated_detect(const ExperimentSpec& spec) {
    spec.validate();
    const FeatureSet target{0, 1};
    ExperimentReport report = make_report(spec, "rho");
    RngStream root(spec.seed);

    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        ReplicateTally tally;
        for (std::size_t r = 0; r < spec.replicates; ++r) {
            RngStream rep = root.substream(g * spec.replicates + r);
            CorrelatedPairSpec corr = spec.corr;
            corr.rho = spec.grid[g];
            corr.seed = derive_seed(rep, 0);
            try {
                const GeneratedData gen = generate_correlated_pair(corr);
                std::vector<SetScore> pair_means;
                std::vector<SetScore> feature_means;
                if (spec.method == Method::Minipatch) {
                    LearnerSpec learner = spec.learner;
                    learner.task = gen.data.task();
                    ExperimentSpec local = spec;
                    local.learner = learner;
                    const auto ens = MinipatchEnsemble::train(
                        gen.data, make_mp_config(local, derive_seed(rep, 1), 2));
                    const PairScan scan = ens.all_pairs_scores();
                    if (!scan.failures.empty()) {
                        throw EstimatorError("pair scan failures: " +
                                             scan.failures.front().message);
                    }
                    for (const auto& s : scan.scores) {
                        pair_means.push_back({s.features, mean_score(s)});
                    }
                    for (const auto& s : ens.all_feature_loco()) {
                        feature_means.push_back({s.features, mean_score(s)});
                    }
                } else {
                    LearnerSpec learner = spec.learner;
                    learner.task = gen.data.task();
                    const SplitPair sp = split(gen.data, spec.train_frac, rep.substream(2));
                    const auto targets = all_sets_of_order(gen.data.n_cols(), 2);
                    const SplitFit sf = fit_split(sp, learner, targets, rep.substream(3));
                    for (const auto& set : targets) {
                        pair_means.push_back({set, mean_score(iloco_samples(sf, set))});
                    }
                    for (std::size_t j = 0; j < gen.data.n_cols(); ++j) {
                        const FeatureSet single{static_cast<int>(j)};
                        const auto deltas = delta_samples(sf, single);
                        double mean = 0;
                        for (double v : deltas) mean += v;
                        mean /= static_cast<double>(deltas.size());
                        feature_means.push_back({single, mean});
                    }
                }
                ++tally.completed;
                if (detect_correlated_pair(pair_means).features == target) ++tally.hits;
                const auto ranked_features = rank_pairs(feature_means);
                std::set<int> top_two{ranked_features[0].features[0],
                                      ranked_features[1].features[0]};
                if (top_two == std::set<int>{0, 1}) ++tally.hits_secondary;
            } catch (const EstimatorError& e) {
                ++tally.failures;
                tally.last_failure = e.what();
            }
        }
        check_failure_budget(spec, tally);
        GridPointReport point;
        point.grid_value = spec.grid[g];
        point.replicates = tally.completed;
        point.failures = tally.failures;
        point.set_count = spec.corr.n_features * (spec.corr.n_features - 1) / 2;
        point.rate = tally.completed
                         ? static_cast<double>(tally.hits) / static_cast<double>(tally.completed)
                         : 0.0;
        point.se = binomial_se(point.rate, tally.completed);
        point.rate_secondary =
            tally.completed ? static_cast<double>(tally.hits_secondary) /
                                  static_cast<double>(tally.completed)
                            : 0.0;
        point.se_secondary = binomial_se(point.rate_secondary, tally.completed);
        report.points.push_back(point);
    }
    return report;
}

namespace {

// Per-sample interaction score from four aggregate predictions, evaluated in
// the same order as the estimators' own per-sample path.
double pair_score_from_aggregates(TaskKind task, double y, double p_full, double p_j,
                                  double p_k, double p_jk) {
    const double e_full = error(task, y, p_full);
    const double e_j = error(task, y, p_j);
    const double e_k = error(task, y, p_k);
    const double e_jk = error(task, y, p_jk);
    return (e_j - e_full) + (e_k - e_full) - (e_jk - e_full);
}

}  // namespace

ExperimentReport run_coverage(const ExperimentSpec& spec) {
    spec.validate();
    const int j = spec.coverage_pair[0];
    const int k = spec.coverage_pair[1];
    const FeatureSet pair{j, k};
    ExperimentReport report = make_report(spec, "n_rows");
    RngStream root(spec.seed);

    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        const auto n_train = static_cast<std::size_t>(spec.grid[g]);
        ReplicateTally tally;
        for (std::size_t r = 0; r < spec.replicates; ++r) {
            RngStream rep = root.substream(g * spec.replicates + r);
            ScenarioSpec scenario = spec.scenario;
            scenario.n_rows = n_train + spec.coverage_fresh;
            scenario.seed = derive_seed(rep, 0);
            try {
                const GeneratedData gen = generate(scenario);
                std::vector<std::size_t> train_rows(n_train);
                for (std::size_t i = 0; i < n_train; ++i) train_rows[i] = i;
                std::vector<std::size_t> fresh_rows(spec.coverage_fresh);
                for (std::size_t i = 0; i < spec.coverage_fresh; ++i) {
                    fresh_rows[i] = n_train + i;
                }
                const Dataset train_data = gen.data.subset_rows(train_rows);
                const Dataset fresh = gen.data.subset_rows(fresh_rows);

                LearnerSpec learner = spec.learner;
                learner.task = train_data.task();
                InteractionResult ci;
                double target_sum = 0;
                if (spec.method == Method::Split) {
                    const SplitPair sp = split(train_data, spec.train_frac,
                                               rep.substream(2));
                    const SplitFit sf = fit_split(sp, learner, {pair}, rep.substream(3));
                    ci = ci_normal(iloco_samples(sf, pair), spec.alpha, 1);
                    const FeatureSet none{};
                    const FeatureSet only_j{j};
                    const FeatureSet only_k{k};
                    for (std::size_t i = 0; i < fresh.n_rows(); ++i) {
                        const auto row = fresh.row(i);
                        target_sum += pair_score_from_aggregates(
                            fresh.task(), fresh.y(i),
                            sf.predict_row_excluding(row, none),
                            sf.predict_row_excluding(row, only_j),
                            sf.predict_row_excluding(row, only_k),
                            sf.predict_row_excluding(row, pair));
                    }
                } else {
                    ExperimentSpec local = spec;
                    local.learner = learner;
                    const auto ens = MinipatchEnsemble::train(
                        train_data, make_mp_config(local, derive_seed(rep, 1), 2));
                    ci = ci_normal(iloco_samples(ens, pair), spec.alpha, 1);
                    for (std::size_t i = 0; i < fresh.n_rows(); ++i) {
                        const auto agg = ens.fresh_pair_aggregates(fresh.row(i), j, k);
                        target_sum += pair_score_from_aggregates(
                            fresh.task(), fresh.y(i), agg[0], agg[1], agg[2], agg[3]);
                    }
                }
                const double target =
                    target_sum / static_cast<double>(fresh.n_rows());
                ++tally.completed;
                if (target >= ci.ci_lo && target <= ci.ci_hi) ++tally.hits;
            } catch (const EstimatorError& e) {
                ++tally.failures;
                tally.last_failure = e.what();
            }
        }
        check_failure_budget(spec, tally);
        GridPointReport point;
        point.grid_value = spec.grid[g];
        point.replicates = tally.completed;
        point.failures = tally.failures;
        point.set_count = 1;
        point.rate = tally.completed
                         ? static_cast<double>(tally.hits) / static_cast<double>(tally.completed)
                         : 0.0;
        point.se = binomial_se(point.rate, tally.completed);
        report.points.push_back(point);
    }
    return report;
}

ExperimentReport run_timing(const ExperimentSpec& spec) {
    spec.validate();
    using clock = std::chrono::steady_clock;
    ExperimentReport report = make_report(spec, "n_features");
    RngStream root(spec.seed);

    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        const auto m = static_cast<std::size_t>(spec.grid[g]);
        GridPointReport point;
        point.grid_value = spec.grid[g];
        point.set_count = m * (m - 1) / 2;
        point.seconds = std::numeric_limits<double>::infinity();
        point.train_seconds = std::numeric_limits<double>::infinity();

        for (std::size_t r = 0; r < spec.replicates; ++r) {
            RngStream rep = root.substream(g * spec.replicates + r);
            ScenarioSpec scenario = spec.scenario;
            scenario.n_features = m;
            scenario.seed = derive_seed(rep, 0);
            const GeneratedData gen = generate(scenario);
            LearnerSpec learner = spec.learner;
            learner.task = gen.data.task();

            if (spec.method == Method::Minipatch) {
                ExperimentSpec local = spec;
                local.learner = learner;
                const auto t0 = clock::now();
                const auto ens = MinipatchEnsemble::train(
                    gen.data, make_mp_config(local, derive_seed(rep, 1), 2));
                const auto t1 = clock::now();
                const std::uint64_t fits_before = instrumentation::fit_count();
                const PairScan scan = ens.all_pairs_scores();
                const auto t2 = clock::now();
                if (!scan.failures.empty()) {
                    throw EstimatorError("pair scan failures: " +
                                         scan.failures.front().message);
                }
                point.fits = instrumentation::fit_count() - fits_before;
                point.train_seconds =
                    std::min(point.train_seconds,
                             std::chrono::duration<double>(t1 - t0).count());
                point.seconds = std::min(
                    point.seconds, std::chrono::duration<double>(t2 - t1).count());
            } else {
                const std::uint64_t fits_before = instrumentation::fit_count();
                const auto t0 = clock::now();
                const SplitPair sp = split(gen.data, spec.train_frac, rep.substream(2));
                const auto targets = all_sets_of_order(m, 2);
                const SplitFit sf = fit_split(sp, learner, targets, rep.substream(3));
                const auto t1 = clock::now();
                for (const auto& set : targets) (void)iloco_samples(sf, set);
                const auto t2 = clock::now();
                point.fits = instrumentation::fit_count() - fits_before;
                point.train_seconds =
                    std::min(point.train_seconds,
                             std::chrono::duration<double>(t1 - t0).count());
                point.seconds = std::min(
                    point.seconds, std::chrono::duration<double>(t2 - t1).count());
            }
            ++point.replicates;
        }
        report.points.push_back(point);
    }
    return report;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
    switch (spec.protocol) {
        case Protocol::Success: return run_success(spec);
        case Protocol::CorrelatedDetect: return run_correlated_detect(spec);
        case Protocol::Coverage: return run_coverage(spec);
        case Protocol::Timing: return run_timing(spec);
    }
    throw InvalidSpecError("unknown protocol");
}

// ============================================================================
// Spec and report serialization
// ============================================================================

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& known) {
    for (const auto& item : obj.items()) {
        if (!known.count(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

json scenario_to_json(const ScenarioSpec& s) {
    const char* corr_kind = "identity";
    if (s.correlation.kind == CorrelationSpec::Kind::Ar) corr_kind = "ar";
    if (s.correlation.kind == CorrelationSpec::Kind::Pair) corr_kind = "pair";
    return json{{"scenario", scenario_name(s.scenario)},
                {"snr", s.snr},
                {"nonlinear", s.nonlinear},
                {"task", task_name(s.task)},
                {"n_rows", s.n_rows},
                {"n_features", s.n_features},
                {"correlation", json{{"kind", corr_kind}, {"rho", s.correlation.rho}}},
                {"seed", s.seed}};
}

ScenarioSpec scenario_from_json(const json& obj) {
    require_keys(obj, "scenario",
                 {"scenario", "snr", "nonlinear", "task", "n_rows", "n_features",
                  "correlation", "seed"});
    ScenarioSpec s;
    if (obj.contains("scenario")) s.scenario = scenario_from_name(obj["scenario"]);
    if (obj.contains("snr")) s.snr = obj["snr"];
    if (obj.contains("nonlinear")) s.nonlinear = obj["nonlinear"];
    if (obj.contains("task")) s.task = task_from_name(obj["task"]);
    if (obj.contains("n_rows")) s.n_rows = obj["n_rows"];
    if (obj.contains("n_features")) s.n_features = obj["n_features"];
    if (obj.contains("correlation")) {
        const json& c = obj["correlation"];
        require_keys(c, "scenario.correlation", {"kind", "rho"});
        std::string kind = c.value("kind", "identity");
        if (kind == "identity") s.correlation.kind = CorrelationSpec::Kind::Identity;
        else if (kind == "ar") s.correlation.kind = CorrelationSpec::Kind::Ar;
        else if (kind == "pair") s.correlation.kind = CorrelationSpec::Kind::Pair;
        else throw ConfigError("unknown correlation kind '" + kind + "'");
        s.correlation.rho = c.value("rho", 0.0);
    }
    if (obj.contains("seed")) s.seed = obj["seed"];
    return s;
}

json corr_to_json(const CorrelatedPairSpec& s) {
    return json{{"rho", s.rho},
                {"pair_weight", s.pair_weight},
                {"task", task_name(s.task)},
                {"n_rows", s.n_rows},
                {"n_features", s.n_features},
                {"seed", s.seed}};
}

CorrelatedPairSpec corr_from_json(const json& obj) {
    require_keys(obj, "corr",
                 {"rho", "pair_weight", "task", "n_rows", "n_features", "seed"});
    CorrelatedPairSpec s;
    if (obj.contains("rho")) s.rho = obj["rho"];
    if (obj.contains("pair_weight")) s.pair_weight = obj["pair_weight"];
    if (obj.contains("task")) s.task = task_from_name(obj["task"]);
    if (obj.contains("n_rows")) s.n_rows = obj["n_rows"];
    if (obj.contains("n_features")) s.n_features = obj["n_features"];
    if (obj.contains("seed")) s.seed = obj["seed"];
    return s;
}

json learner_to_json(const LearnerSpec& s) {
    return json{{"kind", learner_name(s.kind)}, {"max_depth", s.max_depth},
                {"min_leaf", s.min_leaf},       {"lambda", s.lambda},
                {"bandwidth", s.bandwidth},     {"k", s.k}};
}

LearnerSpec learner_from_json(const json& obj) {
    require_keys(obj, "learner",
                 {"kind", "max_depth", "min_leaf", "lambda", "bandwidth", "k"});
    LearnerSpec s;
    if (obj.contains("kind")) s.kind = learner_from_name(obj["kind"]);
    // Kind-specific defaults apply before explicit overrides.
    if (s.kind == LearnerKind::KernelRidgeRbf) s.lambda = 1e-2;
    if (obj.contains("max_depth")) s.max_depth = obj["max_depth"];
    if (obj.contains("min_leaf")) s.min_leaf = obj["min_leaf"];
    if (obj.contains("lambda")) s.lambda = obj["lambda"];
    if (obj.contains("bandwidth")) s.bandwidth = obj["bandwidth"];
    if (obj.contains("k")) s.k = obj["k"];
    return s;
}

json mp_to_json(const MinipatchConfig& s) {
    return json{{"b", s.n_patches},
                {"obs_fraction", s.obs_fraction},
                {"feat_fraction", s.feat_fraction},
                {"n_obs", s.n_obs},
                {"n_feats", s.n_feats},
                {"max_order", s.max_order},
                {"cache_budget_mb", s.cache_budget_bytes >> 20}};
}

MinipatchConfig mp_from_json(const json& obj) {
    require_keys(obj, "mp",
                 {"b", "obs_fraction", "feat_fraction", "n_obs", "n_feats",
                  "max_order", "cache_budget_mb"});
    MinipatchConfig s;
    if (obj.contains("b")) s.n_patches = obj["b"];
    if (obj.contains("obs_fraction")) s.obs_fraction = obj["obs_fraction"];
    if (obj.contains("feat_fraction")) s.feat_fraction = obj["feat_fraction"];
    if (obj.contains("n_obs")) s.n_obs = obj["n_obs"];
    if (obj.contains("n_feats")) s.n_feats = obj["n_feats"];
    if (obj.contains("max_order")) s.max_order = obj["max_order"];
    if (obj.contains("cache_budget_mb")) {
        s.cache_budget_bytes = static_cast<std::size_t>(obj["cache_budget_mb"]) << 20;
    }
    return s;
}

}  // namespace

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
    json obj{{"protocol", protocol_name(spec.protocol)},
             {"method", method_name(spec.method)},
             {"grid", spec.grid},
             {"replicates", spec.replicates},
             {"alpha", spec.alpha},
             {"order", spec.order},
             {"train_frac", spec.train_frac},
             {"coverage_pair", spec.coverage_pair},
             {"coverage_fresh", spec.coverage_fresh},
             {"max_failure_rate", spec.max_failure_rate},
             {"seed", spec.seed},
             {"scenario", scenario_to_json(spec.scenario)},
             {"corr", corr_to_json(spec.corr)},
             {"learner", learner_to_json(spec.learner)},
             {"mp", mp_to_json(spec.mp)}};
    return obj.dump(2);
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    require_keys(obj, "experiment",
                 {"protocol", "method", "grid", "replicates", "alpha", "order",
                  "train_frac", "coverage_pair", "coverage_fresh",
                  "max_failure_rate", "seed", "scenario", "corr", "learner", "mp"});
    ExperimentSpec spec;
    if (obj.contains("protocol")) spec.protocol = protocol_from_name(obj["protocol"]);
    if (obj.contains("method")) spec.method = method_from_name(obj["method"]);
    if (obj.contains("grid")) spec.grid = obj["grid"].get<std::vector<double>>();
    if (obj.contains("replicates")) spec.replicates = obj["replicates"];
    if (obj.contains("alpha")) spec.alpha = obj["alpha"];
    if (obj.contains("order")) spec.order = obj["order"];
    if (obj.contains("train_frac")) spec.train_frac = obj["train_frac"];
    if (obj.contains("coverage_pair")) {
        spec.coverage_pair = obj["coverage_pair"].get<FeatureSet>();
    }
    if (obj.contains("coverage_fresh")) spec.coverage_fresh = obj["coverage_fresh"];
    if (obj.contains("max_failure_rate")) spec.max_failure_rate = obj["max_failure_rate"];
    if (obj.contains("seed")) spec.seed = obj["seed"];
    if (obj.contains("scenario")) spec.scenario = scenario_from_json(obj["scenario"]);
    if (obj.contains("corr")) spec.corr = corr_from_json(obj["corr"]);
    if (obj.contains("learner")) spec.learner = learner_from_json(obj["learner"]);
    if (obj.contains("mp")) spec.mp = mp_from_json(obj["mp"]);
    spec.learner.task = spec.scenario.task;
    spec.corr.task = spec.protocol == Protocol::CorrelatedDetect ? spec.corr.task
                                                                 : spec.scenario.task;
    return spec;
}

std::string report_to_json(const ExperimentReport& report) {
    json points = json::array();
    for (const auto& p : report.points) {
        json row{{"grid", p.grid_value},     {"rate", p.rate},
                 {"se", p.se},               {"replicates", p.replicates},
                 {"failures", p.failures},   {"seconds", p.seconds},
                 {"train_seconds", p.train_seconds},
                 {"fits", p.fits},           {"set_count", p.set_count}};
        if (p.rate_secondary >= 0) {
            row["rate_loco"] = p.rate_secondary;
            row["se_loco"] = p.se_secondary;
        }
        points.push_back(row);
    }
    json obj{{"version", 1},
             {"protocol", report.protocol},
             {"method", report.method},
             {"grid_name", report.grid_name},
             {"points", points},
             {"spec", json::parse(report.spec_json)}};
    return obj.dump(2);
}

std::string report_to_csv(const ExperimentReport& report) {
    std::ostringstream os;
    os << "protocol,method,metric," << report.grid_name
       << ",value,se,replicates,failures,seconds,train_seconds,fits,set_count\n";
    char buf[64];
    const auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (const auto& p : report.points) {
        const std::string metric =
            report.protocol == "timing" ? "seconds"
            : report.protocol == "coverage" ? "coverage" : "detect_rate";
        const double value = report.protocol == "timing" ? p.seconds : p.rate;
        os << report.protocol << ',' << report.method << ',' << metric << ','
           << num(p.grid_value) << ',' << num(value) << ',' << num(p.se) << ','
           << p.replicates << ',' << p.failures << ',' << num(p.seconds) << ','
           << num(p.train_seconds) << ',' << p.fits << ',' << p.set_count << '\n';
        if (p.rate_secondary >= 0) {
            os << report.protocol << ',' << report.method << ",loco_top_two,"
               << num(p.grid_value) << ',' << num(p.rate_secondary) << ','
               << num(p.se_secondary) << ',' << p.replicates << ',' << p.failures
               << ',' << num(p.seconds) << ',' << num(p.train_seconds) << ','
               << p.fits << ',' << p.set_count << '\n';
        }
    }
    return os.str();
}

namespace {

struct SvgSeries {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;
};

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<SvgSeries>& series, double y_max) {
    const double width = 640, height = 420;
    const double left = 64, right = 24, top = 40, bottom = 48;
    double x_min = 0, x_max = 1;
    bool first = true;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (first) {
                x_min = x_max = x;
                first = false;
            } else {
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
            }
            (void)y;
        }
    }
    if (x_max == x_min) x_max = x_min + 1;
    const auto sx = [&](double x) {
        return left + (x - x_min) / (x_max - x_min) * (width - left - right);
    };
    const auto sy = [&](double y) {
        return height - bottom - y / y_max * (height - top - bottom);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
       << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    // Axes.
    os << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\""
       << width - right << "\" y2=\"" << height - bottom
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
       << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double y_val = y_max * tick / 4.0;
        const double y_pix = sy(y_val);
        os << "<line x1=\"" << left - 4 << "\" y1=\"" << y_pix << "\" x2=\"" << left
           << "\" y2=\"" << y_pix << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << y_pix + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
           << y_val << "</text>\n";
    }
    os << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << (top + height - bottom) / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
          "transform=\"rotate(-90 16 " << (top + height - bottom) / 2 << ")\">"
       << y_label << "</text>\n";

    double legend_y = top + 4;
    for (const auto& s : series) {
        std::ostringstream path;
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            path << (i == 0 ? "M" : "L") << sx(s.points[i].first) << " "
                 << sy(s.points[i].second) << " ";
        }
        os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << s.color
           << "\" stroke-width=\"2\"/>\n";
        for (const auto& [x, y] : s.points) {
            os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y)
               << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        }
        os << "<rect x=\"" << width - right - 150 << "\" y=\"" << legend_y
           << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
        os << "<text x=\"" << width - right - 134 << "\" y=\"" << legend_y + 9
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
           << "</text>\n";
        legend_y += 16;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace

std::string report_to_svg(const ExperimentReport& report) {
    std::vector<SvgSeries> series;
    double y_max = 1.0;
    if (report.protocol == "timing") {
        SvgSeries s{report.method + " scan seconds", "#c0392b", {}};
        for (const auto& p : report.points) {
            s.points.emplace_back(p.grid_value, p.seconds);
            y_max = std::max(y_max, p.seconds * 1.1);
        }
        series.push_back(std::move(s));
    } else {
        SvgSeries s{report.method + " " +
                        (report.protocol == "coverage" ? "coverage" : "detect rate"),
                    "#c0392b",
                    {}};
        for (const auto& p : report.points) s.points.emplace_back(p.grid_value, p.rate);
        series.push_back(std::move(s));
        bool has_secondary = false;
        for (const auto& p : report.points) has_secondary |= p.rate_secondary >= 0;
        if (has_secondary) {
            SvgSeries s2{"loco top-two rate", "#2980b9", {}};
            for (const auto& p : report.points) {
                s2.points.emplace_back(p.grid_value, std::max(0.0, p.rate_secondary));
            }
            series.push_back(std::move(s2));
        }
    }
    return render_line_chart(report.protocol + " (" + report.method + ")",
                             report.grid_name,
                             report.protocol == "timing" ? "seconds" : "rate", series,
                             y_max);
}

}  // namespace iloco
