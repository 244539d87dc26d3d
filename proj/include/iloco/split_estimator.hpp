#pragma once

#include <map>
#include <vector>

#include "iloco/learners.hpp"
#include "iloco/occlusion.hpp"

namespace iloco {

// Data-splitting estimator: one model per required exclusion set, all trained
// on the train half, scored on the test half. Exclusion sets are the empty
// set plus every non-empty subset of each requested target, deduplicated, so
// overlapping targets share their subset models.
class SplitFit final : public OcclusionPredictor {
public:
    // OcclusionPredictor over the test half.
    std::size_t eval_count() const override { return split_.test.n_rows(); }
    double label(std::size_t i) const override { return split_.test.y(i); }
    TaskKind task() const override { return split_.test.task(); }
    EstimatorTag tag() const override { return EstimatorTag::Split; }
    int max_order() const override { return max_order_; }
    double predict_full(std::size_t i) const override;
    double predict_excluding(std::size_t i, const FeatureSet& excluded) const override;

    const std::map<FeatureSet, FittedModel>& models() const { return models_; }
    std::size_t model_count() const { return models_.size(); }
    const SplitPair& split_pair() const { return split_; }

    // Prediction-excluding-T on an arbitrary full-width row (coverage targets).
    double predict_row_excluding(std::span<const double> row,
                                 const FeatureSet& excluded) const;

private:
    friend SplitFit fit_split(const SplitPair&, const LearnerSpec&,
                              const std::vector<FeatureSet>&, RngStream);
    SplitFit(SplitPair split, std::map<FeatureSet, FittedModel> models, int max_order)
        : split_(std::move(split)), models_(std::move(models)), max_order_(max_order) {}

    SplitPair split_;
    std::map<FeatureSet, FittedModel> models_;
    int max_order_ = 0;
};

// Trains the full model and every reduced model the targets require on the
// train half. Model fits run in parallel on disjoint RNG substreams assigned
// by sorted exclusion-set order, so results do not depend on thread count.
SplitFit fit_split(const SplitPair& split, const LearnerSpec& spec,
                   const std::vector<FeatureSet>& targets, RngStream rng);

}  // namespace iloco
