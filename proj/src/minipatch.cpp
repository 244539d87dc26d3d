#include "iloco/minipatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "iloco/errors.hpp"
#include "iloco/threads.hpp"

namespace iloco {

std::size_t MinipatchConfig::resolved_n(std::size_t n_rows) const {
    std::size_t n = n_obs;
    if (n == 0) {
        n = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(obs_fraction *
                                                   static_cast<double>(n_rows))));
    }
    if (n < 1 || n >= n_rows) {
        throw InvalidSpecError("minipatch observations must satisfy 1 <= n < N (got n=" +
                               std::to_string(n) + ", N=" + std::to_string(n_rows) + ")");
    }
    return n;
}

std::size_t MinipatchConfig::resolved_m(std::size_t n_cols) const {
    std::size_t m = n_feats;
    if (m == 0) {
        m = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::floor(feat_fraction *
                                                   static_cast<double>(n_cols))));
    }
    if (m < 2 || m >= n_cols) {
        throw InvalidSpecError("minipatch features must satisfy 2 <= m < M (got m=" +
                               std::to_string(m) + ", M=" + std::to_string(n_cols) + ")");
    }
    return m;
}

namespace {

std::vector<std::uint32_t> sample_without_replacement(std::size_t k, std::size_t n,
                                                      RngStream& rng) {
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t t = 0; t < k; ++t) {
        const std::size_t j = t + rng.below(n - t);
        std::swap(pool[t], pool[j]);
    }
    std::vector<std::uint32_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

void MinipatchEnsemble::build_masks() {
    obs_words_ = (n_rows_ + 63) / 64;
    feat_words_ = (n_cols_ + 63) / 64;
    obs_mask_.assign(n_patches_ * obs_words_, 0);
    feat_mask_.assign(n_patches_ * feat_words_, 0);
    for (std::size_t b = 0; b < n_patches_; ++b) {
        for (std::uint32_t i : obs_sets_[b]) {
            obs_mask_[b * obs_words_ + (i >> 6)] |= 1ULL << (i & 63);
        }
        for (std::uint32_t j : feat_sets_[b]) {
            feat_mask_[b * feat_words_ + (j >> 6)] |= 1ULL << (j & 63);
        }
    }
}

MinipatchEnsemble MinipatchEnsemble::train(const Dataset& data,
                                           const MinipatchConfig& cfg) {
    if (cfg.n_patches < 1) throw InvalidSpecError("need at least 1 minipatch");
    cfg.learner.validate();
    const std::size_t n_rows = data.n_rows();
    const std::size_t n_cols = data.n_cols();
    const std::size_t n = cfg.resolved_n(n_rows);
    const std::size_t m = cfg.resolved_m(n_cols);

    MinipatchEnsemble ens(data);
    ens.n_rows_ = n_rows;
    ens.n_cols_ = n_cols;
    ens.n_patches_ = cfg.n_patches;
    ens.patch_obs_ = n;
    ens.patch_feats_ = m;
    ens.seed_ = cfg.seed;
    ens.max_order_ = cfg.max_order;

    // Index sets come from one sequential pass over a single stream, before
    // any fit, so the sampled patches never depend on thread scheduling.
    RngStream root(cfg.seed);
    RngStream index_rng = root.substream(0);
    ens.obs_sets_.resize(cfg.n_patches);
    ens.feat_sets_.resize(cfg.n_patches);
    for (std::size_t b = 0; b < cfg.n_patches; ++b) {
        ens.obs_sets_[b] = sample_without_replacement(n, n_rows, index_rng);
        ens.feat_sets_[b] = sample_without_replacement(m, n_cols, index_rng);
    }
    ens.build_masks();

    ens.models_.resize(cfg.n_patches);
    threads::parallel_for(cfg.n_patches, [&](std::size_t b) {
        std::vector<std::size_t> rows(ens.obs_sets_[b].begin(), ens.obs_sets_[b].end());
        FeatureSet cols(ens.feat_sets_[b].begin(), ens.feat_sets_[b].end());
        ens.models_[b] = fit(cfg.learner, data, rows, cols, root.substream(1 + b));
    });

    if (cfg.n_patches * n_rows * sizeof(double) <= cfg.cache_budget_bytes) {
        ens.cache_.resize(cfg.n_patches * n_rows);
        threads::parallel_for(cfg.n_patches, [&](std::size_t b) {
            double* row_out = ens.cache_.data() + b * n_rows;
            for (std::size_t i = 0; i < n_rows; ++i) {
                row_out[i] = ens.models_[b]->predict(data.row(i));
            }
        });
    }
    return ens;
}

void MinipatchEnsemble::check_feature_list(const FeatureSet& excluded) const {
    for (std::size_t t = 0; t < excluded.size(); ++t) {
        if (excluded[t] < 0 || static_cast<std::size_t>(excluded[t]) >= n_cols_) {
            throw InvalidSpecError("excluded feature index out of range: " +
                                   feature_set_to_string(excluded));
        }
        if (t + 1 < excluded.size() && excluded[t] >= excluded[t + 1]) {
            throw InvalidSpecError("excluded set must be sorted and duplicate-free: " +
                                   feature_set_to_string(excluded));
        }
    }
}

double MinipatchEnsemble::expected_qualifying(const FeatureSet& excluded) const {
    double e = static_cast<double>(n_patches_) *
               (1.0 - static_cast<double>(patch_obs_) / static_cast<double>(n_rows_));
    for (std::size_t t = 0; t < excluded.size(); ++t) {
        e *= static_cast<double>(n_cols_ - patch_feats_ - t) /
             static_cast<double>(n_cols_ - t);
    }
    return e;
}

void MinipatchEnsemble::patch_predictions(std::size_t i, std::vector<double>& out) const {
    out.resize(n_patches_);
    if (cached()) {
        for (std::size_t b = 0; b < n_patches_; ++b) out[b] = cache_[b * n_rows_ + i];
        return;
    }
    const auto row = data_.row(i);
    for (std::size_t b = 0; b < n_patches_; ++b) out[b] = models_[b]->predict(row);
}

double MinipatchEnsemble::loo_predict(std::size_t i) const {
    return loco_predict(i, FeatureSet{});
}

double MinipatchEnsemble::loco_predict(std::size_t i, const FeatureSet& excluded) const {
    if (i >= n_rows_) throw InvalidSpecError("row index out of range");
    check_feature_list(excluded);
    double sum = 0;
    std::size_t count = 0;
    if (cached()) {
        const double* col = cache_.data();
        for (std::size_t b = 0; b < n_patches_; ++b, col += n_rows_) {
            if (obs_in_patch(b, i)) continue;
            bool hit = false;
            for (int t : excluded) {
                if (feat_in_patch(b, static_cast<std::size_t>(t))) {
                    hit = true;
                    break;
                }
            }
            if (hit) continue;
            sum += col[i];
            ++count;
        }
    } else {
        const auto row = data_.row(i);
        for (std::size_t b = 0; b < n_patches_; ++b) {
            if (obs_in_patch(b, i)) continue;
            bool hit = false;
            for (int t : excluded) {
                if (feat_in_patch(b, static_cast<std::size_t>(t))) {
                    hit = true;
                    break;
                }
            }
            if (hit) continue;
            sum += models_[b]->predict(row);
            ++count;
        }
    }
    if (count == 0) {
        throw InsufficientCoverageError(i, excluded, 0, expected_qualifying(excluded));
    }
    return sum / static_cast<double>(count);
}

// Shared masked running sums: full leave-one-out plus one block per feature.
struct MinipatchEnsemble::FeatureSums {
    std::vector<double> full_sum;        // N
    std::vector<std::uint32_t> full_cnt; // N
    std::vector<double> feat_sum;        // M x N
    std::vector<std::uint32_t> feat_cnt; // M x N
};

MinipatchEnsemble::FeatureSums MinipatchEnsemble::feature_sums() const {
    FeatureSums s;
    s.full_sum.assign(n_rows_, 0.0);
    s.full_cnt.assign(n_rows_, 0);
    s.feat_sum.assign(n_cols_ * n_rows_, 0.0);
    s.feat_cnt.assign(n_cols_ * n_rows_, 0);

    if (cached()) {
        for (std::size_t b = 0; b < n_patches_; ++b) {
            const double* col = cache_.data() + b * n_rows_;
            for (std::size_t i = 0; i < n_rows_; ++i) {
                if (obs_in_patch(b, i)) continue;
                s.full_sum[i] += col[i];
                ++s.full_cnt[i];
            }
        }
        threads::parallel_for(n_cols_, [&](std::size_t j) {
            double* sum = s.feat_sum.data() + j * n_rows_;
            std::uint32_t* cnt = s.feat_cnt.data() + j * n_rows_;
            for (std::size_t b = 0; b < n_patches_; ++b) {
                if (feat_in_patch(b, j)) continue;
                const double* col = cache_.data() + b * n_rows_;
                for (std::size_t i = 0; i < n_rows_; ++i) {
                    if (obs_in_patch(b, i)) continue;
                    sum[i] += col[i];
                    ++cnt[i];
                }
            }
        });
        return s;
    }

    // Streaming fallback: one pass per row, recomputing patch predictions.
    std::vector<double> preds;
    for (std::size_t i = 0; i < n_rows_; ++i) {
        patch_predictions(i, preds);
        for (std::size_t b = 0; b < n_patches_; ++b) {
            if (obs_in_patch(b, i)) continue;
            s.full_sum[i] += preds[b];
            ++s.full_cnt[i];
            for (std::size_t j = 0; j < n_cols_; ++j) {
                if (feat_in_patch(b, j)) continue;
                s.feat_sum[j * n_rows_ + i] += preds[b];
                ++s.feat_cnt[j * n_rows_ + i];
            }
        }
    }
    return s;
}

PairScan MinipatchEnsemble::all_pairs_scores() const {
    const FeatureSums sums = feature_sums();
    for (std::size_t i = 0; i < n_rows_; ++i) {
        if (sums.full_cnt[i] == 0) {
            throw InsufficientCoverageError(i, {}, 0, expected_qualifying({}));
        }
    }
    std::vector<double> err_full(n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) {
        err_full[i] = error(task(), data_.y(i), sums.full_sum[i] /
                                                    static_cast<double>(sums.full_cnt[i]));
    }

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(n_cols_ * (n_cols_ - 1) / 2);
    for (int j = 0; j + 1 < static_cast<int>(n_cols_); ++j) {
        for (int k = j + 1; k < static_cast<int>(n_cols_); ++k) {
            pairs.emplace_back(j, k);
        }
    }

    std::vector<std::optional<InteractionScoreSamples>> ok(pairs.size());
    std::vector<std::optional<PairScanFailure>> bad(pairs.size());

    threads::parallel_for(pairs.size(), [&](std::size_t p) {
        const int j = pairs[p].first;
        const int k = pairs[p].second;
        const FeatureSet pair_set{j, k};
        const double* sum_j = sums.feat_sum.data() + static_cast<std::size_t>(j) * n_rows_;
        const double* sum_k = sums.feat_sum.data() + static_cast<std::size_t>(k) * n_rows_;
        const std::uint32_t* cnt_j =
            sums.feat_cnt.data() + static_cast<std::size_t>(j) * n_rows_;
        const std::uint32_t* cnt_k =
            sums.feat_cnt.data() + static_cast<std::size_t>(k) * n_rows_;

        // Pair-specific masked running sums over patches excluding j and k.
        std::vector<double> sum_jk(n_rows_, 0.0);
        std::vector<std::uint32_t> cnt_jk(n_rows_, 0);
        std::vector<double> preds;
        for (std::size_t b = 0; b < n_patches_; ++b) {
            if (feat_in_patch(b, static_cast<std::size_t>(j)) ||
                feat_in_patch(b, static_cast<std::size_t>(k))) {
                continue;
            }
            if (cached()) {
                const double* col = cache_.data() + b * n_rows_;
                for (std::size_t i = 0; i < n_rows_; ++i) {
                    if (obs_in_patch(b, i)) continue;
                    sum_jk[i] += col[i];
                    ++cnt_jk[i];
                }
            } else {
                for (std::size_t i = 0; i < n_rows_; ++i) {
                    if (obs_in_patch(b, i)) continue;
                    sum_jk[i] += models_[b]->predict(data_.row(i));
                    ++cnt_jk[i];
                }
            }
        }

        InteractionScoreSamples samples;
        samples.features = pair_set;
        samples.tag = EstimatorTag::Minipatch;
        samples.scores.resize(n_rows_);
        for (std::size_t i = 0; i < n_rows_; ++i) {
            FeatureSet missing;
            if (cnt_j[i] == 0) missing = {j};
            else if (cnt_k[i] == 0) missing = {k};
            else if (cnt_jk[i] == 0) missing = pair_set;
            if (!missing.empty()) {
                bad[p] = PairScanFailure{
                    pair_set,
                    InsufficientCoverageError(i, missing, 0, expected_qualifying(missing))
                        .what()};
                return;
            }
            const double y = data_.y(i);
            const double e_j =
                error(task(), y, sum_j[i] / static_cast<double>(cnt_j[i]));
            const double e_k =
                error(task(), y, sum_k[i] / static_cast<double>(cnt_k[i]));
            const double e_jk =
                error(task(), y, sum_jk[i] / static_cast<double>(cnt_jk[i]));
            // Same evaluation order as the generic inclusion-exclusion path.
            samples.scores[i] =
                (e_j - err_full[i]) + (e_k - err_full[i]) - (e_jk - err_full[i]);
        }
        ok[p] = std::move(samples);
    });

    PairScan scan;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (ok[p]) scan.scores.push_back(std::move(*ok[p]));
        else if (bad[p]) scan.failures.push_back(std::move(*bad[p]));
    }
    return scan;
}

std::vector<InteractionScoreSamples> MinipatchEnsemble::all_feature_loco() const {
    const FeatureSums sums = feature_sums();
    for (std::size_t i = 0; i < n_rows_; ++i) {
        if (sums.full_cnt[i] == 0) {
            throw InsufficientCoverageError(i, {}, 0, expected_qualifying({}));
        }
    }
    std::vector<InteractionScoreSamples> out(n_cols_);
    for (std::size_t j = 0; j < n_cols_; ++j) {
        out[j].features = {static_cast<int>(j)};
        out[j].tag = EstimatorTag::Minipatch;
        out[j].scores.resize(n_rows_);
        for (std::size_t i = 0; i < n_rows_; ++i) {
            if (sums.feat_cnt[j * n_rows_ + i] == 0) {
                throw InsufficientCoverageError(i, {static_cast<int>(j)}, 0,
                                                expected_qualifying({static_cast<int>(j)}));
            }
            const double y = data_.y(i);
            const double e_full = error(task(), y, sums.full_sum[i] /
                                                       static_cast<double>(sums.full_cnt[i]));
            const double e_j =
                error(task(), y, sums.feat_sum[j * n_rows_ + i] /
                                     static_cast<double>(sums.feat_cnt[j * n_rows_ + i]));
            out[j].scores[i] = e_j - e_full;
        }
    }
    return out;
}

double MinipatchEnsemble::fresh_predict(std::span<const double> row,
                                        const FeatureSet& excluded) const {
    if (models_.empty()) {
        throw EstimatorError("fresh-row prediction needs trained models "
                             "(unavailable on an ensemble restored from a dump)");
    }
    check_feature_list(excluded);
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < n_patches_; ++b) {
        bool hit = false;
        for (int t : excluded) {
            if (feat_in_patch(b, static_cast<std::size_t>(t))) {
                hit = true;
                break;
            }
        }
        if (hit) continue;
        sum += models_[b]->predict(row);
        ++count;
    }
    if (count == 0) {
        throw InsufficientCoverageError(0, excluded, 0,
                                        expected_qualifying(excluded) /
                                            (1.0 - static_cast<double>(patch_obs_) /
                                                       static_cast<double>(n_rows_)));
    }
    return sum / static_cast<double>(count);
}

std::array<double, 4> MinipatchEnsemble::fresh_pair_aggregates(
    std::span<const double> row, int j, int k) const {
    if (models_.empty()) {
        throw EstimatorError("fresh-row prediction needs trained models "
                             "(unavailable on an ensemble restored from a dump)");
    }
    double sum_full = 0, sum_j = 0, sum_k = 0, sum_jk = 0;
    std::size_t n_j = 0, n_k = 0, n_jk = 0;
    for (std::size_t b = 0; b < n_patches_; ++b) {
        const double p = models_[b]->predict(row);
        sum_full += p;
        const bool has_j = feat_in_patch(b, static_cast<std::size_t>(j));
        const bool has_k = feat_in_patch(b, static_cast<std::size_t>(k));
        if (!has_j) { sum_j += p; ++n_j; }
        if (!has_k) { sum_k += p; ++n_k; }
        if (!has_j && !has_k) { sum_jk += p; ++n_jk; }
    }
    if (n_j == 0 || n_k == 0 || n_jk == 0) {
        throw InsufficientCoverageError(0, {j, k}, n_jk,
                                        expected_qualifying({j, k}));
    }
    return {sum_full / static_cast<double>(n_patches_),
            sum_j / static_cast<double>(n_j), sum_k / static_cast<double>(n_k),
            sum_jk / static_cast<double>(n_jk)};
}

std::vector<double> MinipatchEnsemble::prediction_spread_per_row() const {
    std::vector<double> spread(n_rows_, 0.0);
    std::vector<double> preds;
    for (std::size_t i = 0; i < n_rows_; ++i) {
        patch_predictions(i, preds);
        const auto [lo, hi] = std::minmax_element(preds.begin(), preds.end());
        spread[i] = *hi - *lo;
    }
    return spread;
}

// ============================================================================
// Binary snapshot
// ============================================================================

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void MinipatchEnsemble::dump(const std::string& path) const {
    if (!cached()) {
        throw EstimatorError("ensemble snapshot requires the cached prediction matrix");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write("ILMP", 4);
    put_u32(out, 1);  // version
    put_u64(out, n_patches_);
    put_u64(out, n_rows_);
    put_u64(out, n_cols_);
    put_u64(out, patch_obs_);
    put_u64(out, patch_feats_);
    put_u64(out, seed_);
    for (const auto& set : obs_sets_) {
        for (std::uint32_t i : set) put_u32(out, i);
    }
    for (const auto& set : feat_sets_) {
        for (std::uint32_t j : set) put_u32(out, j);
    }
    for (double v : cache_) put_f64(out, v);
    if (!out) throw DataError("write failed for '" + path + "'");
}

MinipatchEnsemble MinipatchEnsemble::load(const std::string& path, const Dataset& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ILMP", 4) != 0) {
        throw DataError("'" + path + "' is not an ensemble snapshot (bad magic)");
    }
    const std::uint32_t version = get_u32(in);
    if (version != 1) {
        throw DataError("unsupported snapshot version " + std::to_string(version));
    }
    MinipatchEnsemble ens(data);
    ens.n_patches_ = get_u64(in);
    ens.n_rows_ = get_u64(in);
    ens.n_cols_ = get_u64(in);
    ens.patch_obs_ = get_u64(in);
    ens.patch_feats_ = get_u64(in);
    ens.seed_ = get_u64(in);
    if (ens.n_rows_ != data.n_rows() || ens.n_cols_ != data.n_cols()) {
        throw DataError("snapshot dimensions do not match the dataset");
    }
    ens.obs_sets_.resize(ens.n_patches_);
    ens.feat_sets_.resize(ens.n_patches_);
    for (auto& set : ens.obs_sets_) {
        set.resize(ens.patch_obs_);
        for (auto& v : set) v = get_u32(in);
    }
    for (auto& set : ens.feat_sets_) {
        set.resize(ens.patch_feats_);
        for (auto& v : set) v = get_u32(in);
    }
    ens.cache_.resize(ens.n_patches_ * ens.n_rows_);
    for (auto& v : ens.cache_) v = get_f64(in);
    if (!in) throw DataError("'" + path + "' is truncated");
    ens.build_masks();
    return ens;
}

}  // namespace iloco
