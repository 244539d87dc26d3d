#include "iloco/split_estimator.hpp"

#include <algorithm>
#include <set>

#include "iloco/errors.hpp"
#include "iloco/threads.hpp"

namespace iloco {

double SplitFit::predict_full(std::size_t i) const {
    return models_.at(FeatureSet{})->predict(split_.test.row(i));
}

double SplitFit::predict_excluding(std::size_t i, const FeatureSet& excluded) const {
    return predict_row_excluding(split_.test.row(i), excluded);
}

double SplitFit::predict_row_excluding(std::span<const double> row,
                                       const FeatureSet& excluded) const {
    const auto it = models_.find(excluded);
    if (it == models_.end()) {
        throw OrderUnsupportedError("no model fitted for exclusion set " +
                                    feature_set_to_string(excluded) +
                                    "; request it as a target in fit_split");
    }
    return it->second->predict(row);
}

SplitFit fit_split(const SplitPair& split, const LearnerSpec& spec,
                   const std::vector<FeatureSet>& targets, RngStream rng) {
    const std::size_t m = split.train.n_cols();
    if (split.train.n_rows() < 2) throw TooFewRowsError("train half needs >= 2 rows");

    // Deduplicated exclusion sets: {} plus all non-empty subsets of each target.
    std::set<FeatureSet> exclusions;
    exclusions.insert(FeatureSet{});
    int max_order = 0;
    for (const auto& target : targets) {
        if (target.empty()) throw InvalidSpecError("empty target feature set");
        for (std::size_t i = 0; i + 1 < target.size(); ++i) {
            if (target[i] >= target[i + 1]) {
                throw InvalidSpecError("target set must be sorted and duplicate-free: " +
                                       feature_set_to_string(target));
            }
        }
        for (int f : target) {
            if (f < 0 || static_cast<std::size_t>(f) >= m) {
                throw InvalidSpecError("target feature index out of range: " +
                                       feature_set_to_string(target));
            }
        }
        if (target.size() >= m) {
            throw InvalidSpecError("target excludes every feature: " +
                                   feature_set_to_string(target));
        }
        max_order = std::max(max_order, static_cast<int>(target.size()));
        const unsigned n_subsets = 1u << target.size();
        for (unsigned mask = 1; mask < n_subsets; ++mask) {
            FeatureSet subset;
            for (std::size_t b = 0; b < target.size(); ++b) {
                if (mask & (1u << b)) subset.push_back(target[b]);
            }
            exclusions.insert(std::move(subset));
        }
    }

    const std::vector<FeatureSet> ordered(exclusions.begin(), exclusions.end());
    std::vector<std::size_t> train_rows(split.train.n_rows());
    for (std::size_t i = 0; i < train_rows.size(); ++i) train_rows[i] = i;

    std::vector<FittedModel> fitted(ordered.size());
    threads::parallel_for(ordered.size(), [&](std::size_t idx) {
        const FeatureSet& excluded = ordered[idx];
        FeatureSet cols;
        cols.reserve(m - excluded.size());
        for (std::size_t j = 0; j < m; ++j) {
            const int ji = static_cast<int>(j);
            if (!std::binary_search(excluded.begin(), excluded.end(), ji)) {
                cols.push_back(ji);
            }
        }
        fitted[idx] = fit(spec, split.train, train_rows, cols, rng.substream(idx));
    });

    std::map<FeatureSet, FittedModel> models;
    for (std::size_t idx = 0; idx < ordered.size(); ++idx) {
        models.emplace(ordered[idx], std::move(fitted[idx]));
    }
    return SplitFit(split, std::move(models), max_order);
}

}  // namespace iloco
