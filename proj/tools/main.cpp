// Command-line front end: dataset analysis, simulation, benchmark protocols,
// and population-oracle checks. Subcommands accept a strict JSON config via
// --config; any flag passed explicitly overrides the config value.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "iloco/anova_oracle.hpp"
#include "iloco/bench.hpp"
#include "iloco/inference.hpp"
#include "iloco/minipatch.hpp"
#include "iloco/simgen.hpp"
#include "iloco/split_estimator.hpp"
#include "iloco/threads.hpp"

#define ILOCO_VERSION "1.0.0"

namespace {

using nlohmann::json;
using namespace iloco;

constexpr int kExitOk = 0;
constexpr int kExitDataError = 2;
constexpr int kExitRuntimeError = 3;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!known.count(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
    if (!out) throw DataError("write failed for '" + path + "'");
}

FeatureSet parse_index_list(const std::string& text) {
    FeatureSet out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size() || v < 0) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("bad feature index '" + item + "' in '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty feature list '" + text + "'");
    FeatureSet sorted = out;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("duplicate feature index in '" + text + "'");
    }
    return sorted;
}

// ============================================================================
// analyze
// ============================================================================

struct AnalyzeOpts {
    std::string data;
    std::string target;
    std::string task = "reg";
    std::string method = "mp";
    std::string learner = "cart";
    std::string out = "results.json";
    std::string config;
    std::string dump_ensemble;
    std::string load_ensemble;
    std::vector<std::string> pairs;
    std::string set;
    double alpha = 0.1;
    std::size_t b = 2000;
    double m_frac = 0.2;
    double n_frac = 0.2;
    std::size_t n_obs = 0;
    std::size_t n_feats = 0;
    std::uint64_t seed = 0;
    int max_depth = 6;
    int min_leaf = 5;
    double lambda = -1.0;  // -1 = learner-kind default
    double bandwidth = 0.0;
    int k = 5;
    bool encode_categoricals = false;
    double train_frac = 0.5;
    int threads = 0;
    std::size_t cache_budget_mb = 1024;
};

LearnerSpec make_learner(const std::string& name, TaskKind task, int max_depth,
                         int min_leaf, double lambda, double bandwidth, int k) {
    const LearnerKind kind = learner_from_name(name);
    LearnerSpec spec;
    spec.kind = kind;
    spec.task = task;
    spec.max_depth = max_depth;
    spec.min_leaf = min_leaf;
    spec.bandwidth = bandwidth;
    spec.k = k;
    spec.lambda = lambda >= 0 ? lambda
                  : kind == LearnerKind::KernelRidgeRbf ? 1e-2
                                                        : 1e-3;
    spec.validate();
    return spec;
}

void apply_analyze_config(AnalyzeOpts& o, const json& cfg) {
    reject_unknown_keys(
        cfg, {"data", "target", "task", "method", "learner", "out", "pairs", "set",
              "alpha", "b", "m_frac", "n_frac", "n_obs", "n_feats", "seed",
              "max_depth", "min_leaf", "lambda", "bandwidth", "k",
              "encode_categoricals", "train_frac", "threads", "cache_budget_mb",
              "dump_ensemble", "load_ensemble"},
        "analyze config");
    if (cfg.contains("data")) o.data = cfg["data"];
    if (cfg.contains("target")) o.target = cfg["target"];
    if (cfg.contains("task")) o.task = cfg["task"];
    if (cfg.contains("method")) o.method = cfg["method"];
    if (cfg.contains("learner")) o.learner = cfg["learner"];
    if (cfg.contains("out")) o.out = cfg["out"];
    if (cfg.contains("pairs")) {
        o.pairs.clear();
        for (const auto& p : cfg["pairs"]) {
            const auto v = p.get<std::vector<int>>();
            if (v.size() != 2) throw ConfigError("each pair needs two indices");
            o.pairs.push_back(std::to_string(v[0]) + "," + std::to_string(v[1]));
        }
    }
    if (cfg.contains("set")) {
        std::string joined;
        for (int v : cfg["set"].get<std::vector<int>>()) {
            if (!joined.empty()) joined += ",";
            joined += std::to_string(v);
        }
        o.set = joined;
    }
    if (cfg.contains("alpha")) o.alpha = cfg["alpha"];
    if (cfg.contains("b")) o.b = cfg["b"];
    if (cfg.contains("m_frac")) o.m_frac = cfg["m_frac"];
    if (cfg.contains("n_frac")) o.n_frac = cfg["n_frac"];
    if (cfg.contains("n_obs")) o.n_obs = cfg["n_obs"];
    if (cfg.contains("n_feats")) o.n_feats = cfg["n_feats"];
    if (cfg.contains("seed")) o.seed = cfg["seed"];
    if (cfg.contains("max_depth")) o.max_depth = cfg["max_depth"];
    if (cfg.contains("min_leaf")) o.min_leaf = cfg["min_leaf"];
    if (cfg.contains("lambda")) o.lambda = cfg["lambda"];
    if (cfg.contains("bandwidth")) o.bandwidth = cfg["bandwidth"];
    if (cfg.contains("k")) o.k = cfg["k"];
    if (cfg.contains("encode_categoricals")) o.encode_categoricals = cfg["encode_categoricals"];
    if (cfg.contains("train_frac")) o.train_frac = cfg["train_frac"];
    if (cfg.contains("threads")) o.threads = cfg["threads"];
    if (cfg.contains("cache_budget_mb")) o.cache_budget_mb = cfg["cache_budget_mb"];
    if (cfg.contains("dump_ensemble")) o.dump_ensemble = cfg["dump_ensemble"];
    if (cfg.contains("load_ensemble")) o.load_ensemble = cfg["load_ensemble"];
}

json analyze_config_echo(const AnalyzeOpts& o) {
    return json{{"data", o.data},
                {"target", o.target},
                {"task", o.task},
                {"method", o.method},
                {"learner", o.learner},
                {"alpha", o.alpha},
                {"b", o.b},
                {"m_frac", o.m_frac},
                {"n_frac", o.n_frac},
                {"n_obs", o.n_obs},
                {"n_feats", o.n_feats},
                {"seed", o.seed},
                {"train_frac", o.train_frac}};
}

int run_analyze(const AnalyzeOpts& o) {
    if (o.data.empty()) throw ConfigError("analyze needs --data");
    if (o.target.empty()) throw ConfigError("analyze needs --target");
    if (o.threads > 0) threads::set_max(o.threads);
    const TaskKind task = task_from_name(o.task);
    const Dataset data = load_csv(o.data, o.target, task, o.encode_categoricals);
    const std::size_t m = data.n_cols();
    const LearnerSpec learner = make_learner(o.learner, task, o.max_depth,
                                             o.min_leaf, o.lambda, o.bandwidth, o.k);

    bool all_pairs = false;
    std::vector<FeatureSet> sets;
    std::size_t multiplicity = 1;
    if (!o.set.empty()) {
        sets.push_back(parse_index_list(o.set));
        multiplicity = 1;
    } else if (!o.pairs.empty()) {
        for (const auto& text : o.pairs) {
            const FeatureSet pair = parse_index_list(text);
            if (pair.size() != 2) throw ConfigError("--pairs expects j,k");
            sets.push_back(pair);
        }
        multiplicity = sets.size();
    } else {
        all_pairs = true;
        multiplicity = m * (m - 1) / 2;
        for (int j = 0; j + 1 < static_cast<int>(m); ++j) {
            for (int k2 = j + 1; k2 < static_cast<int>(m); ++k2) {
                sets.push_back({j, k2});
            }
        }
    }
    int max_order = 2;
    for (const auto& s : sets) {
        max_order = std::max(max_order, static_cast<int>(s.size()));
        for (int f : s) {
            if (f >= static_cast<int>(m)) {
                throw ConfigError("feature index " + std::to_string(f) +
                                  " out of range for " + std::to_string(m) +
                                  " columns");
            }
        }
    }

    std::vector<InteractionResult> results;
    if (method_from_name(o.method) == Method::Minipatch) {
        MinipatchConfig cfg;
        cfg.n_patches = o.b;
        cfg.obs_fraction = o.n_frac;
        cfg.feat_fraction = o.m_frac;
        cfg.n_obs = o.n_obs;
        cfg.n_feats = o.n_feats;
        cfg.learner = learner;
        cfg.seed = o.seed;
        cfg.max_order = std::max(3, max_order);
        cfg.cache_budget_bytes = o.cache_budget_mb << 20;

        std::unique_ptr<MinipatchEnsemble> ens;
        if (!o.load_ensemble.empty()) {
            ens = std::make_unique<MinipatchEnsemble>(
                MinipatchEnsemble::load(o.load_ensemble, data));
        } else {
            ens = std::make_unique<MinipatchEnsemble>(
                MinipatchEnsemble::train(data, cfg));
        }
        if (!o.dump_ensemble.empty()) ens->dump(o.dump_ensemble);

        if (all_pairs) {
            const PairScan scan = ens->all_pairs_scores();
            for (const auto& failure : scan.failures) {
                std::cerr << "warning: skipped pair "
                          << feature_set_to_string(failure.features) << ": "
                          << failure.message << "\n";
            }
            if (scan.scores.empty()) {
                throw EstimatorError("no pair had sufficient minipatch coverage; "
                                     "increase --b");
            }
            for (const auto& s : scan.scores) {
                results.push_back(ci_normal(s, o.alpha, multiplicity));
            }
        } else {
            for (const auto& s : sets) {
                results.push_back(ci_normal(iloco_samples(*ens, s), o.alpha,
                                            multiplicity));
            }
        }
    } else {
        const SplitPair sp = split(data, o.train_frac, RngStream(o.seed, 1));
        const SplitFit sf = fit_split(sp, learner, sets, RngStream(o.seed, 2));
        for (const auto& s : sets) {
            results.push_back(ci_normal(iloco_samples(sf, s), o.alpha, multiplicity));
        }
    }

    std::sort(results.begin(), results.end(),
              [](const InteractionResult& a, const InteractionResult& b) {
                  if (a.estimate != b.estimate) return a.estimate > b.estimate;
                  return a.features < b.features;
              });

    json out_results = json::array();
    for (const auto& r : results) {
        json names = json::array();
        for (int f : r.features) names.push_back(data.feature_names()[static_cast<std::size_t>(f)]);
        out_results.push_back(json{{"features", r.features},
                                   {"names", names},
                                   {"estimate", r.estimate},
                                   {"sd", r.sd},
                                   {"ci_lo", r.ci_lo},
                                   {"ci_hi", r.ci_hi},
                                   {"n_eval", r.n_eval},
                                   {"significant", significant(r)}});
    }
    json doc{{"version", 1},
             {"estimator", o.method},
             {"alpha", o.alpha},
             {"multiplicity", multiplicity},
             {"feature_names", data.feature_names()},
             {"library_version", ILOCO_VERSION},
             {"seed", o.seed},
             {"config", analyze_config_echo(o)},
             {"results", out_results}};
    write_file(o.out, doc.dump(2) + "\n");
    std::cout << "wrote " << results.size() << " interaction records to " << o.out
              << "\n";
    return kExitOk;
}

// ============================================================================
// simulate
// ============================================================================

struct SimulateOpts {
    std::string scenario = "i";
    double snr = 1.0;
    bool nonlinear = false;
    std::string task = "reg";
    std::size_t n = 500;
    std::size_t m = 10;
    std::string correlation = "id";
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string out = "simulated";
    std::string config;
};

void apply_simulate_config(SimulateOpts& o, const json& cfg) {
    reject_unknown_keys(cfg,
                        {"scenario", "snr", "nonlinear", "task", "n", "m",
                         "correlation", "rho", "seed", "out"},
                        "simulate config");
    if (cfg.contains("scenario")) o.scenario = cfg["scenario"];
    if (cfg.contains("snr")) o.snr = cfg["snr"];
    if (cfg.contains("nonlinear")) o.nonlinear = cfg["nonlinear"];
    if (cfg.contains("task")) o.task = cfg["task"];
    if (cfg.contains("n")) o.n = cfg["n"];
    if (cfg.contains("m")) o.m = cfg["m"];
    if (cfg.contains("correlation")) o.correlation = cfg["correlation"];
    if (cfg.contains("rho")) o.rho = cfg["rho"];
    if (cfg.contains("seed")) o.seed = cfg["seed"];
    if (cfg.contains("out")) o.out = cfg["out"];
}

int run_simulate(const SimulateOpts& o) {
    ScenarioSpec spec;
    spec.scenario = scenario_from_name(o.scenario);
    spec.snr = o.snr;
    spec.nonlinear = o.nonlinear;
    spec.task = task_from_name(o.task);
    spec.n_rows = o.n;
    spec.n_features = o.m;
    if (o.correlation == "id" || o.correlation == "identity") {
        spec.correlation.kind = CorrelationSpec::Kind::Identity;
    } else if (o.correlation == "ar") {
        spec.correlation.kind = CorrelationSpec::Kind::Ar;
        spec.correlation.rho = o.rho == 0.0 ? 0.8 : o.rho;
    } else if (o.correlation == "pair") {
        spec.correlation.kind = CorrelationSpec::Kind::Pair;
        spec.correlation.rho = o.rho;
    } else {
        throw ConfigError("unknown correlation '" + o.correlation +
                          "' (expected id|ar|pair)");
    }
    spec.seed = o.seed;

    const GeneratedData gen = generate(spec);
    const std::string csv_path = o.out + ".csv";
    save_csv(gen.data, csv_path, "y");

    json truth = json::array();
    for (const auto& s : true_interacting_sets(spec.scenario)) truth.push_back(s);
    json meta{{"version", 1},
              {"library_version", ILOCO_VERSION},
              {"seed", o.seed},
              {"config",
               json{{"scenario", o.scenario},
                    {"snr", o.snr},
                    {"nonlinear", o.nonlinear},
                    {"task", o.task},
                    {"n", o.n},
                    {"m", o.m},
                    {"correlation", o.correlation},
                    {"rho", o.rho}}},
              {"beta", gen.beta},
              {"sigma", gen.sigma_description},
              {"true_interacting_sets", truth}};
    write_file(o.out + ".meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << csv_path << " (" << gen.data.n_rows() << " x "
              << gen.data.n_cols() << ") and " << o.out << ".meta.json\n";
    return kExitOk;
}

// ============================================================================
// bench
// ============================================================================

struct BenchOpts {
    std::string config;
    std::string out;
    std::string method;
    std::string grid;
    std::string learner;
    std::string task;
    std::string coverage_pair;
    std::size_t replicates = 0;
    double alpha = -1;
    int order = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t b = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    double snr = -1;
    int nonlinear = -1;
    double pair_weight = -1;
    std::size_t coverage_fresh = 0;
    double train_frac = -1;
    int threads = 0;
    double m_frac = -1;
    double n_frac = -1;
};

int run_bench(Protocol protocol, const BenchOpts& o, const CLI::App* cmd) {
    ExperimentSpec spec;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw ConfigError("cannot open config '" + o.config + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        spec = experiment_spec_from_json(ss.str());
    }
    spec.protocol = protocol;

    const auto passed = [&](const std::string& flag) {
        return cmd->count(flag) > 0;
    };
    if (passed("--method")) spec.method = method_from_name(o.method);
    if (passed("--grid")) {
        spec.grid.clear();
        std::stringstream ss(o.grid);
        std::string item;
        while (std::getline(ss, item, ',')) spec.grid.push_back(std::stod(item));
    }
    if (passed("--replicates")) spec.replicates = o.replicates;
    if (passed("--alpha")) spec.alpha = o.alpha;
    if (passed("--order")) spec.order = o.order;
    if (passed("--seed")) spec.seed = o.seed;
    if (passed("--b")) spec.mp.n_patches = o.b;
    if (passed("--n")) {
        spec.scenario.n_rows = o.n;
        spec.corr.n_rows = o.n;
    }
    if (passed("--m")) {
        spec.scenario.n_features = o.m;
        spec.corr.n_features = o.m;
    }
    if (passed("--snr")) spec.scenario.snr = o.snr;
    if (passed("--nonlinear")) spec.scenario.nonlinear = o.nonlinear != 0;
    if (passed("--task")) {
        spec.scenario.task = task_from_name(o.task);
        spec.corr.task = spec.scenario.task;
    }
    if (passed("--learner")) spec.learner.kind = learner_from_name(o.learner);
    if (passed("--pair-weight")) spec.corr.pair_weight = o.pair_weight;
    if (passed("--coverage-pair")) spec.coverage_pair = parse_index_list(o.coverage_pair);
    if (passed("--coverage-fresh")) spec.coverage_fresh = o.coverage_fresh;
    if (passed("--train-frac")) spec.train_frac = o.train_frac;
    if (passed("--m-frac")) spec.mp.feat_fraction = o.m_frac;
    if (passed("--n-frac")) spec.mp.obs_fraction = o.n_frac;
    if (o.threads > 0) threads::set_max(o.threads);
    spec.learner.task = spec.scenario.task;

    const ExperimentReport report = run_experiment(spec);
    const std::string prefix =
        o.out.empty() ? std::string("bench_") + protocol_name(protocol) : o.out;
    write_file(prefix + ".json", report_to_json(report) + "\n");
    write_file(prefix + ".csv", report_to_csv(report));
    write_file(prefix + ".svg", report_to_svg(report));
    for (const auto& p : report.points) {
        std::cout << report.grid_name << "=" << p.grid_value;
        if (protocol == Protocol::Timing) {
            std::cout << " scan_seconds=" << p.seconds
                      << " train_seconds=" << p.train_seconds << " fits=" << p.fits;
        } else {
            std::cout << " rate=" << p.rate << " se=" << p.se;
            if (p.rate_secondary >= 0) std::cout << " loco_rate=" << p.rate_secondary;
            std::cout << " replicates=" << p.replicates << " failures=" << p.failures;
        }
        std::cout << "\n";
    }
    std::cout << "wrote " << prefix << ".json/.csv/.svg\n";
    return kExitOk;
}

// ============================================================================
// oracle
// ============================================================================

struct OracleOpts {
    int order = 2;
    std::size_t n_mc = 100000;
    std::uint64_t seed = 0;
    std::string task = "reg";
    std::string out;
};

int run_oracle_check(const OracleOpts& o) {
    const TaskKind task = task_from_name(o.task);
    if (o.order != 2 && o.order != 3) throw ConfigError("--order must be 2 or 3");
    const FeatureSet s = o.order == 2 ? FeatureSet{0, 1} : FeatureSet{0, 1, 2};

    struct Case {
        std::string name;
        AnovaModel model;
    };
    std::vector<Case> cases;
    for (double c : {1.0, 2.0}) {
        AnovaModel m;
        m.n_features = 3;
        m.components = {{{0, 1}, c}};
        if (task == TaskKind::Classification) {
            m.intercept = 0.5;
            m = m.clipped();
        }
        cases.push_back({"product(c=" + std::to_string(c).substr(0, 3) + ")", m});
    }
    {
        AnovaModel m;
        m.n_features = 4;
        m.components = {{{0, 1}, 3.0}, {{0, 1, 2}, 1.0}, {{3}, 5.0}};
        if (task == TaskKind::Classification) {
            m.intercept = 0.5;
            m = m.clipped();
        }
        cases.push_back({"three-term", m});
    }

    bool all_ok = true;
    json rows = json::array();
    std::cout << "model          reference      mc_estimate    mc_se        |z|\n";
    for (std::size_t idx = 0; idx < cases.size(); ++idx) {
        const auto& c = cases[idx];
        const double reference =
            c.model.clip ? population_iloco_quadrature(c.model, s, task,
                                                       c.model.n_features > 3 ? 48 : 120)
                         : closed_form_iloco(c.model, s, task);
        const auto mc = population_iloco_mc(c.model, s, task, o.n_mc,
                                            RngStream(o.seed, idx));
        const double z = mc.se > 0 ? std::abs(mc.estimate - reference) / mc.se : 0.0;
        const bool ok = std::abs(mc.estimate - reference) <= 3.0 * mc.se;
        all_ok = all_ok && ok;
        std::printf("%-14s %-14.6g %-14.6g %-12.3g %-6.2f %s\n", c.name.c_str(),
                    reference, mc.estimate, mc.se, z, ok ? "ok" : "FAIL");
        rows.push_back(json{{"model", c.name},
                            {"reference", reference},
                            {"mc_estimate", mc.estimate},
                            {"mc_se", mc.se},
                            {"ok", ok}});
    }
    if (!o.out.empty()) {
        json doc{{"version", 1},
                 {"library_version", ILOCO_VERSION},
                 {"seed", o.seed},
                 {"config", json{{"order", o.order},
                                 {"n_mc", o.n_mc},
                                 {"task", o.task}}},
                 {"results", rows}};
        write_file(o.out, doc.dump(2) + "\n");
    }
    return all_ok ? kExitOk : kExitRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pairwise and higher-order interaction importance scores with "
                 "distribution-free confidence intervals"};
    app.set_version_flag("--version", ILOCO_VERSION);
    app.require_subcommand(1);

    AnalyzeOpts analyze;
    CLI::App* analyze_cmd = app.add_subcommand(
        "analyze", "score feature interactions in a CSV dataset");
    analyze_cmd->add_option("--data", analyze.data, "input CSV path");
    analyze_cmd->add_option("--target", analyze.target, "response column name");
    analyze_cmd->add_option("--task", analyze.task, "reg|clf");
    analyze_cmd->add_option("--method", analyze.method, "mp|split");
    analyze_cmd->add_option("--learner", analyze.learner, "cart|ridge|krr|knn");
    analyze_cmd->add_option("--alpha", analyze.alpha, "interval error rate");
    analyze_cmd->add_option("--b", analyze.b, "number of minipatches");
    analyze_cmd->add_option("--m-frac", analyze.m_frac, "features per patch fraction");
    analyze_cmd->add_option("--n-frac", analyze.n_frac, "observations per patch fraction");
    analyze_cmd->add_option("--n-obs", analyze.n_obs, "observations per patch (absolute)");
    analyze_cmd->add_option("--n-feats", analyze.n_feats, "features per patch (absolute)");
    analyze_cmd->add_option("--seed", analyze.seed, "rng seed");
    analyze_cmd->add_option("--out", analyze.out, "output JSON path");
    analyze_cmd->add_option("--pairs", analyze.pairs,
                            "specific pair j,k (repeatable; unadjusted unless several)");
    analyze_cmd->add_option("--set", analyze.set, "one feature set a,b,c for higher order");
    analyze_cmd->add_option("--max-depth", analyze.max_depth, "cart depth");
    analyze_cmd->add_option("--min-leaf", analyze.min_leaf, "cart leaf size");
    analyze_cmd->add_option("--lambda", analyze.lambda, "ridge / kernel ridge penalty");
    analyze_cmd->add_option("--bandwidth", analyze.bandwidth, "rbf bandwidth (0 = sqrt(m))");
    analyze_cmd->add_option("--k", analyze.k, "knn neighbors");
    analyze_cmd->add_flag("--encode-categoricals", analyze.encode_categoricals,
                          "one-hot encode non-numeric columns");
    analyze_cmd->add_option("--train-frac", analyze.train_frac, "split method train fraction");
    analyze_cmd->add_option("--threads", analyze.threads, "worker thread cap");
    analyze_cmd->add_option("--cache-budget-mb", analyze.cache_budget_mb,
                            "prediction cache budget");
    analyze_cmd->add_option("--dump-ensemble", analyze.dump_ensemble,
                            "write the trained ensemble snapshot here");
    analyze_cmd->add_option("--load-ensemble", analyze.load_ensemble,
                            "reuse a previously dumped ensemble");
    analyze_cmd->add_option("--config", analyze.config, "JSON config (flags override)");

    SimulateOpts simulate;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "generate a synthetic benchmark dataset");
    simulate_cmd->add_option("--scenario", simulate.scenario, "i|ii|iii");
    simulate_cmd->add_option("--snr", simulate.snr, "interaction signal strength");
    simulate_cmd->add_flag("--nonlinear", simulate.nonlinear, "tanh the interaction terms");
    simulate_cmd->add_option("--task", simulate.task, "reg|clf");
    simulate_cmd->add_option("--n", simulate.n, "rows");
    simulate_cmd->add_option("--m", simulate.m, "features (>= 10)");
    simulate_cmd->add_option("--correlation", simulate.correlation, "id|ar|pair");
    simulate_cmd->add_option("--rho", simulate.rho, "correlation parameter");
    simulate_cmd->add_option("--seed", simulate.seed, "rng seed");
    simulate_cmd->add_option("--out", simulate.out, "output prefix");
    simulate_cmd->add_option("--config", simulate.config, "JSON config (flags override)");

    CLI::App* bench_cmd = app.add_subcommand("bench", "run an evaluation protocol");
    bench_cmd->require_subcommand(1);
    BenchOpts bench;
    std::vector<std::pair<CLI::App*, Protocol>> bench_subs;
    for (const auto& [name, protocol, help] :
         {std::tuple<const char*, Protocol, const char*>{
              "success", Protocol::Success, "top-ranked-pair success probability vs snr"},
          {"correlated", Protocol::CorrelatedDetect,
           "most-negative-pair detection vs correlation"},
          {"coverage", Protocol::Coverage, "confidence interval coverage vs sample size"},
          {"timing", Protocol::Timing, "all-pairs scan wall time vs feature count"}}) {
        CLI::App* sub = bench_cmd->add_subcommand(name, help);
        sub->add_option("--config", bench.config, "ExperimentSpec JSON (flags override)");
        sub->add_option("--out", bench.out, "output prefix");
        sub->add_option("--method", bench.method, "mp|split");
        sub->add_option("--grid", bench.grid, "comma-separated grid values");
        sub->add_option("--replicates", bench.replicates, "replicates per grid point");
        sub->add_option("--alpha", bench.alpha, "interval error rate");
        sub->add_option("--order", bench.order, "scored interaction order");
        sub->add_option("--seed", bench.seed, "rng seed");
        sub->add_option("--b", bench.b, "number of minipatches");
        sub->add_option("--n", bench.n, "rows per replicate");
        sub->add_option("--m", bench.m, "feature count");
        sub->add_option("--snr", bench.snr, "scenario snr");
        sub->add_flag("--nonlinear", bench.nonlinear, "tanh interaction terms");
        sub->add_option("--task", bench.task, "reg|clf");
        sub->add_option("--learner", bench.learner, "cart|ridge|krr|knn");
        sub->add_option("--pair-weight", bench.pair_weight,
                        "correlated-pair signal weight");
        sub->add_option("--coverage-pair", bench.coverage_pair, "pair j,k");
        sub->add_option("--coverage-fresh", bench.coverage_fresh,
                        "fresh points per coverage target");
        sub->add_option("--train-frac", bench.train_frac, "split train fraction");
        sub->add_option("--m-frac", bench.m_frac, "features per patch fraction");
        sub->add_option("--n-frac", bench.n_frac, "observations per patch fraction");
        sub->add_option("--threads", bench.threads, "worker thread cap");
        bench_subs.emplace_back(sub, protocol);
    }

    OracleOpts oracle;
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "population ground-truth checks");
    CLI::App* oracle_check =
        oracle_cmd->add_subcommand("check", "MC vs closed-form / quadrature table");
    oracle_check->add_option("--order", oracle.order, "interaction order (2 or 3)");
    oracle_check->add_option("--n-mc", oracle.n_mc, "Monte Carlo sample count");
    oracle_check->add_option("--seed", oracle.seed, "rng seed");
    oracle_check->add_option("--task", oracle.task, "reg|clf");
    oracle_check->add_option("--out", oracle.out, "optional JSON output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitDataError;
    }

    try {
        if (analyze_cmd->parsed()) {
            if (!analyze.config.empty()) {
                AnalyzeOpts merged;
                apply_analyze_config(merged, load_json_file(analyze.config));
                merged.config = analyze.config;
                // Explicitly passed flags win over the config document.
                const auto over = [&](const char* flag, auto member) {
                    if (analyze_cmd->count(flag) > 0) merged.*member = analyze.*member;
                };
                over("--data", &AnalyzeOpts::data);
                over("--target", &AnalyzeOpts::target);
                over("--task", &AnalyzeOpts::task);
                over("--method", &AnalyzeOpts::method);
                over("--learner", &AnalyzeOpts::learner);
                over("--alpha", &AnalyzeOpts::alpha);
                over("--b", &AnalyzeOpts::b);
                over("--m-frac", &AnalyzeOpts::m_frac);
                over("--n-frac", &AnalyzeOpts::n_frac);
                over("--n-obs", &AnalyzeOpts::n_obs);
                over("--n-feats", &AnalyzeOpts::n_feats);
                over("--seed", &AnalyzeOpts::seed);
                over("--out", &AnalyzeOpts::out);
                over("--pairs", &AnalyzeOpts::pairs);
                over("--set", &AnalyzeOpts::set);
                over("--max-depth", &AnalyzeOpts::max_depth);
                over("--min-leaf", &AnalyzeOpts::min_leaf);
                over("--lambda", &AnalyzeOpts::lambda);
                over("--bandwidth", &AnalyzeOpts::bandwidth);
                over("--k", &AnalyzeOpts::k);
                over("--encode-categoricals", &AnalyzeOpts::encode_categoricals);
                over("--train-frac", &AnalyzeOpts::train_frac);
                over("--threads", &AnalyzeOpts::threads);
                over("--cache-budget-mb", &AnalyzeOpts::cache_budget_mb);
                over("--dump-ensemble", &AnalyzeOpts::dump_ensemble);
                over("--load-ensemble", &AnalyzeOpts::load_ensemble);
                return run_analyze(merged);
            }
            return run_analyze(analyze);
        }
        if (simulate_cmd->parsed()) {
            if (!simulate.config.empty()) {
                SimulateOpts merged;
                apply_simulate_config(merged, load_json_file(simulate.config));
                merged.config = simulate.config;
                const auto over = [&](const char* flag, auto member) {
                    if (simulate_cmd->count(flag) > 0) merged.*member = simulate.*member;
                };
                over("--scenario", &SimulateOpts::scenario);
                over("--snr", &SimulateOpts::snr);
                over("--nonlinear", &SimulateOpts::nonlinear);
                over("--task", &SimulateOpts::task);
                over("--n", &SimulateOpts::n);
                over("--m", &SimulateOpts::m);
                over("--correlation", &SimulateOpts::correlation);
                over("--rho", &SimulateOpts::rho);
                over("--seed", &SimulateOpts::seed);
                over("--out", &SimulateOpts::out);
                return run_simulate(merged);
            }
            return run_simulate(simulate);
        }
        for (const auto& [sub, protocol] : bench_subs) {
            if (sub->parsed()) return run_bench(protocol, bench, sub);
        }
        if (oracle_check->parsed()) return run_oracle_check(oracle);
        throw ConfigError("no subcommand selected");
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}
