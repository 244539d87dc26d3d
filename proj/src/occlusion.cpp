#include "iloco/occlusion.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "iloco/errors.hpp"
#include "iloco/learners.hpp"

namespace iloco {

std::string feature_set_to_string(const FeatureSet& s) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "}";
    return os.str();
}

const char* estimator_tag_name(EstimatorTag tag) {
    return tag == EstimatorTag::Split ? "split" : "mp";
}

namespace {

void check_feature_set(const FeatureSet& s) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] >= s[i + 1]) {
            throw InvalidSpecError("feature set must be sorted and duplicate-free: " +
                                   feature_set_to_string(s));
        }
    }
}

}  // namespace

std::vector<double> delta_samples(const OcclusionPredictor& pred, const FeatureSet& t) {
    if (t.empty()) throw InvalidSpecError("delta_samples needs a non-empty feature set");
    check_feature_set(t);
    if (static_cast<int>(t.size()) > pred.max_order()) {
        throw OrderUnsupportedError("exclusion order " + std::to_string(t.size()) +
                                    " exceeds the estimator's max order " +
                                    std::to_string(pred.max_order()));
    }
    const std::size_t n = pred.eval_count();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = pred.label(i);
        out[i] = error(pred.task(), y, pred.predict_excluding(i, t)) -
                 error(pred.task(), y, pred.predict_full(i));
    }
    return out;
}

InteractionScoreSamples iloco_samples(const OcclusionPredictor& pred,
                                      const FeatureSet& s) {
    check_feature_set(s);
    if (s.size() < 2) throw InvalidSpecError("interaction sets need at least 2 features");
    if (static_cast<int>(s.size()) > pred.max_order()) {
        throw OrderUnsupportedError("interaction order " + std::to_string(s.size()) +
                                    " exceeds the estimator's max order " +
                                    std::to_string(pred.max_order()));
    }

    const std::size_t n = pred.eval_count();
    // Full-model errors are shared by every delta term.
    std::vector<double> err_full(n);
    for (std::size_t i = 0; i < n; ++i) {
        err_full[i] = error(pred.task(), pred.label(i), pred.predict_full(i));
    }

    InteractionScoreSamples result;
    result.features = s;
    result.tag = pred.tag();
    result.scores.assign(n, 0.0);

    const unsigned n_subsets = 1u << s.size();
    FeatureSet subset;
    for (unsigned mask = 1; mask < n_subsets; ++mask) {
        subset.clear();
        for (std::size_t b = 0; b < s.size(); ++b) {
            if (mask & (1u << b)) subset.push_back(s[b]);
        }
        const double sign = (std::popcount(mask) % 2 == 1) ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double delta =
                error(pred.task(), pred.label(i), pred.predict_excluding(i, subset)) -
                err_full[i];
            result.scores[i] += sign * delta;
        }
    }
    return result;
}

std::vector<InteractionScoreSamples> scores_for_sets(
    const OcclusionPredictor& pred, const std::vector<FeatureSet>& sets) {
    std::vector<InteractionScoreSamples> out;
    out.reserve(sets.size());
    for (const auto& s : sets) out.push_back(iloco_samples(pred, s));
    return out;
}

double mean_score(const InteractionScoreSamples& s) {
    double sum = 0;
    for (double v : s.scores) sum += v;
    return s.scores.empty() ? 0.0 : sum / static_cast<double>(s.scores.size());
}

std::vector<SetScore> rank_pairs(std::vector<SetScore> scores) {
    if (scores.empty()) throw InvalidSpecError("rank_pairs needs at least one entry");
    std::sort(scores.begin(), scores.end(), [](const SetScore& a, const SetScore& b) {
        if (a.mean != b.mean) return a.mean > b.mean;
        return a.features < b.features;
    });
    return scores;
}

SetScore detect_correlated_pair(const std::vector<SetScore>& scores) {
    if (scores.empty()) {
        throw InvalidSpecError("detect_correlated_pair needs at least one entry");
    }
    const SetScore* best = &scores.front();
    for (const auto& s : scores) {
        if (s.mean < best->mean || (s.mean == best->mean && s.features < best->features)) {
            best = &s;
        }
    }
    return *best;
}

}  // namespace iloco
