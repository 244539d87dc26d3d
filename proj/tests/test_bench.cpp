#include <doctest.h>

#include <nlohmann/json.hpp>

#include "iloco/bench.hpp"

using namespace iloco;

namespace {

// Tiny but real experiment configurations so unit tests stay fast.
ExperimentSpec small_success_spec() {
    ExperimentSpec spec;
    spec.protocol = Protocol::Success;
    spec.method = Method::Minipatch;
    spec.scenario.n_rows = 120;
    spec.scenario.task = TaskKind::Regression;
    spec.grid = {0.0, 6.0};
    spec.replicates = 3;
    spec.learner = LearnerSpec::ridge(TaskKind::Regression);
    spec.mp.n_patches = 150;
    spec.seed = 42;
    return spec;
}

}  // namespace

TEST_CASE("spec json round trip is lossless and strict") {
    const ExperimentSpec spec = small_success_spec();
    const std::string text = experiment_spec_to_json(spec);
    const ExperimentSpec back = experiment_spec_from_json(text);
    CHECK(experiment_spec_to_json(back) == text);

    CHECK_THROWS_AS(experiment_spec_from_json("{\"protocl\": \"success\"}"),
                    ConfigError);
    CHECK_THROWS_AS(
        experiment_spec_from_json("{\"scenario\": {\"rows\": 10}}"), ConfigError);
    CHECK_THROWS_AS(experiment_spec_from_json("not json"), ConfigError);
}

TEST_CASE("replicates=1 yields a degenerate rate") {
    ExperimentSpec spec = small_success_spec();
    spec.replicates = 1;
    spec.grid = {4.0};
    const auto report = run_success(spec);
    REQUIRE(report.points.size() == 1);
    CHECK((report.points[0].rate == 0.0 || report.points[0].rate == 1.0));
    CHECK(report.points[0].se == 0.0);
    CHECK(report.points[0].set_count == 45);
}

TEST_CASE("reports reproduce exactly from their own metadata") {
    const ExperimentSpec spec = small_success_spec();
    const auto first = run_success(spec);
    const auto again = run_success(experiment_spec_from_json(first.spec_json));
    REQUIRE(first.points.size() == again.points.size());
    for (std::size_t g = 0; g < first.points.size(); ++g) {
        CHECK(first.points[g].rate == again.points[g].rate);
        CHECK(first.points[g].replicates == again.points[g].replicates);
        CHECK(first.points[g].failures == again.points[g].failures);
    }
}

TEST_CASE("success protocol rejects mismatched order") {
    ExperimentSpec spec = small_success_spec();
    spec.order = 3;  // scenario (i) has a pairwise focal interaction
    CHECK_THROWS_AS(run_success(spec), InvalidSpecError);
}

TEST_CASE("correlated protocol reports both rates") {
    ExperimentSpec spec;
    spec.protocol = Protocol::CorrelatedDetect;
    spec.method = Method::Minipatch;
    spec.corr.n_rows = 150;
    spec.corr.pair_weight = 3.0;
    spec.grid = {0.9};
    spec.replicates = 4;
    spec.learner = LearnerSpec::ridge(TaskKind::Regression);
    spec.mp.n_patches = 250;
    spec.seed = 7;
    const auto report = run_correlated_detect(spec);
    REQUIRE(report.points.size() == 1);
    CHECK(report.points[0].rate >= 0.0);
    CHECK(report.points[0].rate <= 1.0);
    CHECK(report.points[0].rate_secondary >= 0.0);
    CHECK(report.points[0].rate_secondary <= 1.0);
}

TEST_CASE("near-degenerate alpha rarely covers") {
    // alpha = 0.9 makes the interval tiny, so the fresh-point target should
    // fall outside most of the time.
    ExperimentSpec spec;
    spec.protocol = Protocol::Coverage;
    spec.method = Method::Split;
    spec.scenario.n_rows = 300;
    spec.scenario.snr = 2.0;
    spec.grid = {300};
    spec.replicates = 30;
    spec.alpha = 0.9;
    spec.coverage_fresh = 2000;
    spec.learner = LearnerSpec::ridge(TaskKind::Regression);
    spec.seed = 11;
    const auto report = run_coverage(spec);
    CHECK(report.points[0].rate < 0.5);
}

TEST_CASE("excess failures abort the run") {
    ExperimentSpec spec = small_success_spec();
    spec.mp.n_patches = 2;  // almost every pair loses coverage somewhere
    spec.grid = {2.0};
    spec.replicates = 5;
    CHECK_THROWS_AS(run_success(spec), EstimatorError);
}

TEST_CASE("timing protocol records fit counts and set counts") {
    ExperimentSpec spec;
    spec.protocol = Protocol::Timing;
    spec.method = Method::Minipatch;
    spec.scenario.n_rows = 120;
    spec.grid = {10};
    spec.replicates = 1;
    spec.learner = LearnerSpec::ridge(TaskKind::Regression);
    spec.mp.n_patches = 100;
    spec.seed = 3;
    const auto mp_report = run_timing(spec);
    CHECK(mp_report.points[0].fits == 0);  // zero refits after training
    CHECK(mp_report.points[0].set_count == 45);
    CHECK(mp_report.points[0].seconds >= 0.0);

    spec.method = Method::Split;
    const auto split_report = run_timing(spec);
    // 1 full + M singletons + M(M-1)/2 pairs.
    CHECK(split_report.points[0].fits == 1 + 10 + 45);
}

TEST_CASE("report serializations parse") {
    ExperimentSpec spec = small_success_spec();
    spec.replicates = 2;
    const auto report = run_success(spec);

    const auto parsed = nlohmann::json::parse(report_to_json(report));
    CHECK(parsed["version"] == 1);
    CHECK(parsed["protocol"] == "success");
    CHECK(parsed["points"].size() == 2);
    CHECK(parsed["spec"]["seed"] == 42);

    const std::string csv = report_to_csv(report);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 3);  // header + one row per grid point
    CHECK(csv.find("success,mp,detect_rate") != std::string::npos);

    const std::string svg = report_to_svg(report);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<path") != std::string::npos);
}
