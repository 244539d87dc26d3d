#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iloco/dataset.hpp"

namespace iloco {

// Sorted, duplicate-free list of 0-based column indices.
using FeatureSet = std::vector<int>;

std::string feature_set_to_string(const FeatureSet& s);

enum class EstimatorTag { Split, Minipatch };

const char* estimator_tag_name(EstimatorTag tag);

// The contract both estimators implement: a full prediction and a
// prediction-excluding-T for every evaluation sample. predict_excluding with
// an empty T must equal predict_full. Implementations are read-only after
// construction and allow concurrent calls.
class OcclusionPredictor {
public:
    virtual ~OcclusionPredictor() = default;

    virtual std::size_t eval_count() const = 0;
    virtual double label(std::size_t i) const = 0;
    virtual TaskKind task() const = 0;
    virtual EstimatorTag tag() const = 0;
    virtual int max_order() const = 0;

    virtual double predict_full(std::size_t i) const = 0;
    virtual double predict_excluding(std::size_t i, const FeatureSet& excluded) const = 0;
};

// Per-evaluation-sample interaction scores for one feature set.
struct InteractionScoreSamples {
    FeatureSet features;
    std::vector<double> scores;
    EstimatorTag tag = EstimatorTag::Minipatch;
};

// Per-sample occlusion error difference:
//   error(y_i, predict_excluding(i,T)) - error(y_i, predict_full(i)).
std::vector<double> delta_samples(const OcclusionPredictor& pred, const FeatureSet& t);

// Inclusion-exclusion combinator over the non-empty subsets of S,
//   sum over T of (-1)^{|T|+1} * delta_T, per sample.
// For |S|=2 this evaluates, sample by sample, exactly as
// delta_j + delta_k - delta_jk.
InteractionScoreSamples iloco_samples(const OcclusionPredictor& pred,
                                      const FeatureSet& s);

// Convenience: iloco_samples for several sets (skips nothing, order kept).
std::vector<InteractionScoreSamples> scores_for_sets(
    const OcclusionPredictor& pred, const std::vector<FeatureSet>& sets);

struct SetScore {
    FeatureSet features;
    double mean = 0;
};

double mean_score(const InteractionScoreSamples& s);

// Descending by mean; exact ties ordered by lexicographic feature set.
std::vector<SetScore> rank_pairs(std::vector<SetScore> scores);

// The set with the minimum mean score (ties lexicographic); strongly negative
// winners flag important-but-correlated pairs.
SetScore detect_correlated_pair(const std::vector<SetScore>& scores);

}  // namespace iloco
