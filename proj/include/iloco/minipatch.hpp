#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iloco/learners.hpp"
#include "iloco/occlusion.hpp"

namespace iloco {

// Ensemble shape: B minipatches of n observations x m features. When n_obs or
// n_feats is 0 they resolve from the fractions (floored, with minimums 1 and
// 2). Both must stay strictly below the data dimensions so exclusion events
// have positive probability.
struct MinipatchConfig {
    std::size_t n_patches = 2000;  // B
    double obs_fraction = 0.2;
    double feat_fraction = 0.2;
    std::size_t n_obs = 0;    // n, 0 = resolve from obs_fraction
    std::size_t n_feats = 0;  // m, 0 = resolve from feat_fraction
    LearnerSpec learner;
    std::uint64_t seed = 0;
    int max_order = 3;
    // Above this cache size the ensemble skips the B x N prediction matrix and
    // recomputes patch predictions per query instead.
    std::size_t cache_budget_bytes = 1ull << 30;

    std::size_t resolved_n(std::size_t n_rows) const;
    std::size_t resolved_m(std::size_t n_cols) const;
};

struct PairScanFailure {
    FeatureSet features;
    std::string message;
};

struct PairScan {
    std::vector<InteractionScoreSamples> scores;  // pairs (j<k), lexicographic
    std::vector<PairScanFailure> failures;
};

// Minipatch ensemble with a cached B x N prediction matrix. After training,
// every leave-one-observation-out / leave-covariates-out prediction is a
// masked average over that matrix, so interaction scores for all pairs need
// no further model fits. Immutable after train(); all queries are read-only
// and safe to run concurrently.
class MinipatchEnsemble final : public OcclusionPredictor {
public:
    static MinipatchEnsemble train(const Dataset& data, const MinipatchConfig& cfg);

    // OcclusionPredictor over all N training rows.
    std::size_t eval_count() const override { return n_rows_; }
    double label(std::size_t i) const override { return data_.y(i); }
    TaskKind task() const override { return data_.task(); }
    EstimatorTag tag() const override { return EstimatorTag::Minipatch; }
    int max_order() const override { return max_order_; }
    double predict_full(std::size_t i) const override { return loo_predict(i); }
    double predict_excluding(std::size_t i, const FeatureSet& excluded) const override {
        return loco_predict(i, excluded);
    }

    // Masked average over patches excluding observation i (and features in
    // `excluded`). Throws InsufficientCoverageError when no patch qualifies.
    double loo_predict(std::size_t i) const;
    double loco_predict(std::size_t i, const FeatureSet& excluded) const;

    // Interaction score samples for every pair (j<k); per-pair coverage
    // failures are recorded and the scan continues. No fit calls happen here.
    PairScan all_pairs_scores() const;

    // Per-feature leave-one-covariate-out score samples (feature importance).
    std::vector<InteractionScoreSamples> all_feature_loco() const;

    // Full-ensemble aggregates on a fresh row that belongs to no patch:
    // {full, -j, -k, -(j,k)} in that order.
    std::array<double, 4> fresh_pair_aggregates(std::span<const double> row, int j,
                                                int k) const;
    double fresh_predict(std::span<const double> row, const FeatureSet& excluded) const;

    // Empirical prediction spread per row: max minus min cached prediction.
    std::vector<double> prediction_spread_per_row() const;

    std::size_t n_patches() const { return n_patches_; }
    std::size_t patch_obs() const { return patch_obs_; }
    std::size_t patch_feats() const { return patch_feats_; }
    std::uint64_t seed() const { return seed_; }
    bool cached() const { return !cache_.empty(); }
    const std::vector<std::vector<std::uint32_t>>& obs_sets() const { return obs_sets_; }
    const std::vector<std::vector<std::uint32_t>>& feat_sets() const { return feat_sets_; }
    const std::vector<double>& cache() const { return cache_; }
    const Dataset& data() const { return data_; }
    double expected_qualifying(const FeatureSet& excluded) const;

    // Binary snapshot of index sets + cache ("ILMP" format, little-endian).
    // load() restores a query-ready ensemble against the same dataset; the
    // trained models themselves are not serialized, so fresh-row predictions
    // are unavailable on a loaded ensemble.
    void dump(const std::string& path) const;
    static MinipatchEnsemble load(const std::string& path, const Dataset& data);

private:
    explicit MinipatchEnsemble(Dataset data) : data_(std::move(data)) {}

    bool obs_in_patch(std::size_t b, std::size_t i) const {
        return (obs_mask_[b * obs_words_ + (i >> 6)] >> (i & 63)) & 1ULL;
    }
    bool feat_in_patch(std::size_t b, std::size_t j) const {
        return (feat_mask_[b * feat_words_ + (j >> 6)] >> (j & 63)) & 1ULL;
    }
    void build_masks();
    void check_feature_list(const FeatureSet& excluded) const;
    // Predictions of every patch on row i: cache column or recomputed.
    void patch_predictions(std::size_t i, std::vector<double>& out) const;

    struct FeatureSums;
    FeatureSums feature_sums() const;

    Dataset data_;
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::size_t n_patches_ = 0;
    std::size_t patch_obs_ = 0;
    std::size_t patch_feats_ = 0;
    std::uint64_t seed_ = 0;
    int max_order_ = 3;
    std::vector<std::vector<std::uint32_t>> obs_sets_;
    std::vector<std::vector<std::uint32_t>> feat_sets_;
    std::vector<FittedModel> models_;  // empty on ensembles restored via load()
    std::vector<double> cache_;        // B x N, patch-major; empty in streaming mode
    std::size_t obs_words_ = 0;
    std::size_t feat_words_ = 0;
    std::vector<std::uint64_t> obs_mask_;
    std::vector<std::uint64_t> feat_mask_;
};

}  // namespace iloco
