#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iloco/learners.hpp"
#include "iloco/minipatch.hpp"
#include "iloco/simgen.hpp"

namespace iloco {

enum class Protocol { Success, CorrelatedDetect, Coverage, Timing };
enum class Method { Minipatch, Split };

const char* protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);
const char* method_name(Method m);
Method method_from_name(const std::string& name);

// One experiment: a protocol swept over a grid with seeded replicates.
// Grid semantics by protocol: Success -> snr values, CorrelatedDetect -> rho
// values, Coverage -> sample sizes N, Timing -> feature counts M.
struct ExperimentSpec {
    Protocol protocol = Protocol::Success;
    Method method = Method::Minipatch;
    ScenarioSpec scenario;    // template for Success / Coverage / Timing
    CorrelatedPairSpec corr;  // template for CorrelatedDetect
    std::vector<double> grid = {0, 2, 4, 8};
    std::size_t replicates = 50;
    LearnerSpec learner;
    MinipatchConfig mp;
    double train_frac = 0.5;
    double alpha = 0.1;
    int order = 2;                   // interaction order scored by Success
    FeatureSet coverage_pair = {5, 6};
    std::size_t coverage_fresh = 10000;  // fresh points per coverage target
    double max_failure_rate = 0.10;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GridPointReport {
    double grid_value = 0;
    double rate = 0;            // success or coverage fraction
    double se = 0;              // binomial SE sqrt(p(1-p)/R)
    double rate_secondary = -1; // correlated protocol: LOCO top-two rate
    double se_secondary = -1;
    std::size_t replicates = 0; // completed replicates
    std::size_t failures = 0;
    double seconds = 0;         // timing: best-of-replicates scan wall time
    double train_seconds = 0;
    std::uint64_t fits = 0;     // fit calls during the timed scan
    std::size_t set_count = 0;  // number of scored feature sets
};

struct ExperimentReport {
    std::string protocol;
    std::string method;
    std::string grid_name;
    std::vector<GridPointReport> points;
    std::string spec_json;  // full spec echo; re-running it reproduces rates
};

ExperimentReport run_success(const ExperimentSpec& spec);
ExperimentReport run_correlated_detect(const ExperimentSpec& spec);
ExperimentReport run_coverage(const ExperimentSpec& spec);
ExperimentReport run_timing(const ExperimentSpec& spec);
ExperimentReport run_experiment(const ExperimentSpec& spec);

// Spec echo round-trip; parsing rejects unknown keys.
std::string experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const std::string& text);

std::string report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);
std::string report_to_svg(const ExperimentReport& report);

}  // namespace iloco
