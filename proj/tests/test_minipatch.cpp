#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "iloco/minipatch.hpp"
#include "iloco/simgen.hpp"
#include "iloco/threads.hpp"

using namespace iloco;

namespace {

Dataset make_data(std::uint64_t seed, std::size_t n, std::size_t m,
                  TaskKind task = TaskKind::Regression, double snr = 2.0) {
    ScenarioSpec spec;
    spec.snr = snr;
    spec.task = task;
    spec.n_rows = n;
    spec.n_features = std::max<std::size_t>(m, 10);
    spec.seed = seed;
    auto gen = generate(spec);
    if (m >= 10) return std::move(gen.data);
    // Narrow datasets for small-M cases: keep the first m columns.
    std::vector<double> x;
    std::vector<std::string> names(gen.data.feature_names().begin(),
                                   gen.data.feature_names().begin() +
                                       static_cast<std::ptrdiff_t>(m));
    for (std::size_t i = 0; i < gen.data.n_rows(); ++i) {
        for (std::size_t j = 0; j < m; ++j) x.push_back(gen.data.x(i, j));
    }
    return Dataset(std::move(x), gen.data.labels(), std::move(names), task);
}

MinipatchConfig small_config(std::uint64_t seed, std::size_t b = 120,
                             std::size_t n_obs = 0, std::size_t n_feats = 0) {
    MinipatchConfig cfg;
    cfg.n_patches = b;
    cfg.n_obs = n_obs;
    cfg.n_feats = n_feats;
    cfg.learner = LearnerSpec::cart(TaskKind::Regression, 3, 2);
    cfg.seed = seed;
    return cfg;
}

// Reference implementation: explicit loop over the stored index sets.
double brute_force_loco(const MinipatchEnsemble& ens, std::size_t i,
                        const FeatureSet& excluded) {
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < ens.n_patches(); ++b) {
        const auto& obs = ens.obs_sets()[b];
        if (std::find(obs.begin(), obs.end(), static_cast<std::uint32_t>(i)) !=
            obs.end()) {
            continue;
        }
        const auto& feats = ens.feat_sets()[b];
        bool hit = false;
        for (int t : excluded) {
            if (std::find(feats.begin(), feats.end(),
                          static_cast<std::uint32_t>(t)) != feats.end()) {
                hit = true;
                break;
            }
        }
        if (hit) continue;
        sum += ens.cache()[b * ens.data().n_rows() + i];
        ++count;
    }
    REQUIRE(count > 0);
    return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("config resolves the 20 percent sizes") {
    const Dataset d = make_data(1, 500, 10);
    MinipatchConfig cfg;
    CHECK(cfg.resolved_n(500) == 100);
    CHECK(cfg.resolved_m(10) == 2);
    cfg.n_obs = 700;
    CHECK_THROWS_AS(cfg.resolved_n(500), InvalidSpecError);
    cfg.n_obs = 0;
    cfg.n_feats = 10;
    CHECK_THROWS_AS(cfg.resolved_m(10), InvalidSpecError);
}

TEST_CASE("degenerate ensemble with one patch") {
    const Dataset d = make_data(2, 40, 10);
    MinipatchConfig cfg = small_config(3, 1, 39, 9);
    const auto ens = MinipatchEnsemble::train(d, cfg);
    CHECK(ens.n_patches() == 1);
    CHECK(ens.obs_sets()[0].size() == 39);
    CHECK(ens.feat_sets()[0].size() == 9);

    // Cache rows are recomputable by refitting the patch deterministically.
    std::vector<std::size_t> rows(ens.obs_sets()[0].begin(), ens.obs_sets()[0].end());
    FeatureSet cols(ens.feat_sets()[0].begin(), ens.feat_sets()[0].end());
    const auto refit = fit(cfg.learner, d, rows, cols, RngStream(cfg.seed).substream(1));
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        CHECK(ens.cache()[i] == refit->predict(d.row(i)));
    }
}

TEST_CASE("training is bit-identical across thread counts") {
    const Dataset d = make_data(4, 80, 10);
    threads::set_max(1);
    const auto serial = MinipatchEnsemble::train(d, small_config(9));
    threads::set_max(8);
    const auto parallel = MinipatchEnsemble::train(d, small_config(9));
    threads::set_max(0);
    CHECK(serial.obs_sets() == parallel.obs_sets());
    CHECK(serial.feat_sets() == parallel.feat_sets());
    CHECK(serial.cache() == parallel.cache());
}

TEST_CASE("index sets are uniform without replacement") {
    const Dataset d = make_data(5, 60, 10);
    const auto ens = MinipatchEnsemble::train(d, small_config(11, 200));
    for (std::size_t b = 0; b < ens.n_patches(); ++b) {
        const auto& obs = ens.obs_sets()[b];
        CHECK(std::is_sorted(obs.begin(), obs.end()));
        CHECK(std::adjacent_find(obs.begin(), obs.end()) == obs.end());
        CHECK(obs.size() == ens.patch_obs());
        const auto& feats = ens.feat_sets()[b];
        CHECK(std::is_sorted(feats.begin(), feats.end()));
        CHECK(std::adjacent_find(feats.begin(), feats.end()) == feats.end());
    }
}

TEST_CASE("masked averages equal the brute-force loop") {
    const Dataset d = make_data(6, 90, 12);
    const auto ens = MinipatchEnsemble::train(d, small_config(13, 180));
    RngStream rng(55);
    for (int q = 0; q < 60; ++q) {
        const auto i = static_cast<std::size_t>(rng.below(d.n_rows()));
        FeatureSet t;
        const int order = static_cast<int>(rng.below(4));  // 0..3
        while (static_cast<int>(t.size()) < order) {
            const int f = static_cast<int>(rng.below(d.n_cols()));
            if (!std::binary_search(t.begin(), t.end(), f)) {
                t.insert(std::upper_bound(t.begin(), t.end(), f), f);
            }
        }
        const double expect = brute_force_loco(ens, i, t);
        const double got = t.empty() ? ens.loo_predict(i) : ens.loco_predict(i, t);
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    }
    // Empty exclusion reduces to the leave-one-out prediction.
    CHECK(ens.loco_predict(3, {}) == ens.loo_predict(3));
}

TEST_CASE("hand-built snapshot exercises the masked-mean arithmetic") {
    // Three patches over N=4, M=3, n=2, m=2; cache values chosen by hand.
    // For row 0: patch 0 contains it; patches 1 and 2 exclude it with cached
    // predictions 1.0 and 3.0, so the LOO prediction is 2.0.
    const auto path =
        (std::filesystem::temp_directory_path() / "iloco_hand.ilmp").string();
    {
        std::ofstream out(path, std::ios::binary);
        const auto u32 = [&](std::uint32_t v) {
            for (int i = 0; i < 4; ++i) out.put(static_cast<char>(v >> (8 * i)));
        };
        const auto u64 = [&](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) out.put(static_cast<char>(v >> (8 * i)));
        };
        const auto f64 = [&](double d) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            u64(bits);
        };
        out.write("ILMP", 4);
        u32(1);
        u64(3);  // B
        u64(4);  // N
        u64(3);  // M
        u64(2);  // n
        u64(2);  // m
        u64(777);
        // obs sets: {0,1}, {1,2}, {2,3}
        u32(0); u32(1); u32(1); u32(2); u32(2); u32(3);
        // feat sets: {0,1}, {1,2}, {0,2}
        u32(0); u32(1); u32(1); u32(2); u32(0); u32(2);
        // cache rows (patch-major), patch b row = predictions on rows 0..3
        const double cache[3][4] = {{9.9, 9.9, 5.0, 7.0},
                                    {1.0, 9.9, 9.9, 2.0},
                                    {3.0, 4.0, 9.9, 9.9}};
        for (const auto& row : cache) {
            for (double v : row) f64(v);
        }
    }
    const Dataset d({0, 0, 0, 1, 0, 2, 1, 0, 1, 1, 1, 2},
                    {0.0, 1.0, 2.0, 3.0}, {"a", "b", "c"}, TaskKind::Regression);
    const auto ens = MinipatchEnsemble::load(path, d);
    CHECK(ens.loo_predict(0) == doctest::Approx(2.0));  // (1.0 + 3.0) / 2
    // Row 0, excluding feature 0: only patch 1 (features {1,2}) qualifies.
    CHECK(ens.loco_predict(0, {0}) == doctest::Approx(1.0));
    // Row 0, excluding feature 1: only patch 2 qualifies.
    CHECK(ens.loco_predict(0, {1}) == doctest::Approx(3.0));
    // Row 1 is only excluded by patch 2, whose feature set {0,2} contains
    // feature 0, so excluding {0} leaves no qualifying patch.
    CHECK_THROWS_AS(ens.loco_predict(1, {0}), InsufficientCoverageError);
    try {
        ens.loco_predict(1, {0});
    } catch (const InsufficientCoverageError& e) {
        CHECK(e.row() == 1);
        CHECK(e.excluded() == FeatureSet{0});
        CHECK(e.qualifying() == 0);
        CHECK(e.expected() > 0.0);
    }
    std::remove(path.c_str());
}

TEST_CASE("pair scan matches the compositional path exactly") {
    const Dataset d = make_data(7, 70, 10);
    const auto ens = MinipatchEnsemble::train(d, small_config(17, 150));
    const PairScan scan = ens.all_pairs_scores();
    REQUIRE(scan.failures.empty());
    REQUIRE(scan.scores.size() == 45);

    std::size_t checked = 0;
    for (const auto& entry : scan.scores) {
        const auto direct = iloco_samples(ens, entry.features);
        REQUIRE(direct.scores.size() == entry.scores.size());
        for (std::size_t i = 0; i < entry.scores.size(); ++i) {
            CHECK(entry.scores[i] == direct.scores[i]);
        }
        if (++checked == 8) break;  // spot check a prefix; full scan is heavy
    }
}

TEST_CASE("pair enumeration covers all pairs for small M") {
    const Dataset d = make_data(8, 50, 3);
    MinipatchConfig cfg = small_config(19, 300);
    cfg.n_feats = 2;
    const auto ens = MinipatchEnsemble::train(d, cfg);
    const PairScan scan = ens.all_pairs_scores();
    std::vector<FeatureSet> seen;
    for (const auto& s : scan.scores) seen.push_back(s.features);
    for (const auto& f : scan.failures) seen.push_back(f.features);
    CHECK(seen == std::vector<FeatureSet>{{0, 1}, {0, 2}, {1, 2}});
}

TEST_CASE("zero additional fits and predicts during the scan") {
    const Dataset d = make_data(9, 60, 10);
    const auto ens = MinipatchEnsemble::train(d, small_config(23));
    const auto fits_before = instrumentation::fit_count();
    const auto predicts_before = instrumentation::predict_count();
    (void)ens.all_pairs_scores();
    (void)ens.loo_predict(0);
    (void)ens.loco_predict(1, {2, 3});
    CHECK(instrumentation::fit_count() == fits_before);
    CHECK(instrumentation::predict_count() == predicts_before);
}

TEST_CASE("expected qualifying fraction matches the hypergeometric product") {
    const Dataset d = make_data(10, 500, 10);
    const auto ens = MinipatchEnsemble::train(d, small_config(29, 2000));
    // For a pair at m=2, M=10: (1 - n/N) * (8*7)/(10*9).
    const double p = (1.0 - 100.0 / 500.0) * (8.0 * 7.0) / (10.0 * 9.0);
    CHECK(ens.expected_qualifying({0, 1}) == doctest::Approx(2000.0 * p));

    std::size_t qualifying = 0;
    for (std::size_t b = 0; b < ens.n_patches(); ++b) {
        const auto& obs = ens.obs_sets()[b];
        const auto& feats = ens.feat_sets()[b];
        const bool has_row = std::find(obs.begin(), obs.end(), 0u) != obs.end();
        const bool has_j = std::find(feats.begin(), feats.end(), 0u) != feats.end();
        const bool has_k = std::find(feats.begin(), feats.end(), 1u) != feats.end();
        if (!has_row && !has_j && !has_k) ++qualifying;
    }
    const double observed = static_cast<double>(qualifying) / 2000.0;
    const double se = std::sqrt(p * (1.0 - p) / 2000.0);
    CHECK(std::abs(observed - p) <= 3.0 * se);
}

TEST_CASE("snapshot round trip preserves queries") {
    const Dataset d = make_data(11, 50, 10);
    const auto ens = MinipatchEnsemble::train(d, small_config(31, 100));
    const auto path =
        (std::filesystem::temp_directory_path() / "iloco_rt.ilmp").string();
    ens.dump(path);
    const auto back = MinipatchEnsemble::load(path, d);
    CHECK(back.cache() == ens.cache());
    CHECK(back.obs_sets() == ens.obs_sets());
    CHECK(back.feat_sets() == ens.feat_sets());
    CHECK(back.loo_predict(7) == ens.loo_predict(7));
    CHECK(back.loco_predict(7, {1, 2}) == ens.loco_predict(7, {1, 2}));
    const std::vector<double> fresh_row(d.n_cols(), 0.0);
    CHECK_THROWS_AS(back.fresh_predict(fresh_row, {}), EstimatorError);
    std::remove(path.c_str());

    const Dataset other = make_data(12, 49, 10);
    const auto path2 =
        (std::filesystem::temp_directory_path() / "iloco_rt2.ilmp").string();
    ens.dump(path2);
    CHECK_THROWS_AS(MinipatchEnsemble::load(path2, other), DataError);
    std::remove(path2.c_str());
}

TEST_CASE("streaming fallback reproduces the cached results") {
    const Dataset d = make_data(13, 60, 10);
    MinipatchConfig cfg = small_config(37, 90);
    const auto cached = MinipatchEnsemble::train(d, cfg);
    cfg.cache_budget_bytes = 8;  // force streaming
    const auto streaming = MinipatchEnsemble::train(d, cfg);
    CHECK(cached.cached());
    CHECK(!streaming.cached());
    CHECK(streaming.loo_predict(5) == cached.loo_predict(5));
    CHECK(streaming.loco_predict(5, {0, 2}) == cached.loco_predict(5, {0, 2}));
    const auto a = cached.all_pairs_scores();
    const auto b = streaming.all_pairs_scores();
    REQUIRE(a.scores.size() == b.scores.size());
    for (std::size_t p = 0; p < a.scores.size(); ++p) {
        CHECK(a.scores[p].scores == b.scores[p].scores);
    }
    CHECK_THROWS_AS(streaming.dump("/tmp/should_not_exist.ilmp"), EstimatorError);
}

TEST_CASE("fresh aggregates average over feature-qualifying patches") {
    const Dataset d = make_data(14, 60, 10);
    const auto ens = MinipatchEnsemble::train(d, small_config(41, 100));
    std::vector<double> row(d.n_cols(), 0.25);
    const auto agg = ens.fresh_pair_aggregates(row, 2, 5);
    CHECK(std::isfinite(agg[0]));
    CHECK(agg[1] == doctest::Approx(ens.fresh_predict(row, {2})));
    CHECK(agg[2] == doctest::Approx(ens.fresh_predict(row, {5})));
    CHECK(agg[3] == doctest::Approx(ens.fresh_predict(row, {2, 5})));
    CHECK(agg[0] == doctest::Approx(ens.fresh_predict(row, {})));
}

TEST_CASE("prediction spread diagnostic is max minus min per row") {
    const Dataset d = make_data(15, 40, 10);
    const auto ens = MinipatchEnsemble::train(d, small_config(43, 60));
    const auto spread = ens.prediction_spread_per_row();
    REQUIRE(spread.size() == d.n_rows());
    for (std::size_t i = 0; i < 5; ++i) {
        double lo = ens.cache()[i], hi = ens.cache()[i];
        for (std::size_t b = 0; b < ens.n_patches(); ++b) {
            lo = std::min(lo, ens.cache()[b * d.n_rows() + i]);
            hi = std::max(hi, ens.cache()[b * d.n_rows() + i]);
        }
        CHECK(spread[i] == doctest::Approx(hi - lo));
    }
}

TEST_CASE("classification caches stay within [0,1]") {
    const Dataset d = make_data(16, 80, 10, TaskKind::Classification);
    MinipatchConfig cfg = small_config(47, 120);
    cfg.learner = LearnerSpec::cart(TaskKind::Classification, 3, 2);
    const auto ens = MinipatchEnsemble::train(d, cfg);
    for (double v : ens.cache()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
