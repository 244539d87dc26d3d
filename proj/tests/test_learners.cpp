#include <doctest.h>

#include <cmath>
#include <numeric>

#include "iloco/learners.hpp"
#include "iloco/occlusion.hpp"

using namespace iloco;

namespace {

Dataset linear_data() {
    // y = 2*x1 + 1 exactly, second feature pure noise carrier.
    std::vector<double> x, y;
    RngStream rng(5);
    for (int i = 0; i < 30; ++i) {
        const double x1 = rng.next_gaussian();
        x.push_back(x1);
        x.push_back(rng.next_gaussian());
        y.push_back(2.0 * x1 + 1.0);
    }
    return Dataset(x, y, {"x1", "x2"}, TaskKind::Regression);
}

std::vector<std::size_t> all_rows(const Dataset& d) {
    std::vector<std::size_t> rows(d.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace

TEST_CASE("ridge with lambda 0 interpolates exactly linear data") {
    const Dataset d = linear_data();
    auto spec = LearnerSpec::ridge(TaskKind::Regression, 0.0);
    const FeatureSet cols{0, 1};
    const auto model = fit(spec, d, all_rows(d), cols, RngStream(1));
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        CHECK(model->predict(d.row(i)) == doctest::Approx(d.y(i)).epsilon(1e-8));
    }
    // Extrapolation: x1 = 3 -> 7.
    const std::vector<double> row{3.0, 0.0};
    CHECK(model->predict(row) == doctest::Approx(7.0).epsilon(1e-8));
}

TEST_CASE("knn with k equal to all rows predicts the label mean") {
    const Dataset d = linear_data();
    auto spec = LearnerSpec::knn(TaskKind::Regression, static_cast<int>(d.n_rows()));
    const FeatureSet cols{0, 1};
    const auto model = fit(spec, d, all_rows(d), cols, RngStream(1));
    const double mean =
        std::accumulate(d.labels().begin(), d.labels().end(), 0.0) /
        static_cast<double>(d.n_rows());
    const std::vector<double> anywhere{123.0, -9.0};
    CHECK(model->predict(anywhere) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("cart with max_depth 0 is the root mean / class fraction") {
    const Dataset d = linear_data();
    auto spec = LearnerSpec::cart(TaskKind::Regression, 0, 1);
    const FeatureSet cols{0, 1};
    const auto model = fit(spec, d, all_rows(d), cols, RngStream(1));
    const double mean =
        std::accumulate(d.labels().begin(), d.labels().end(), 0.0) /
        static_cast<double>(d.n_rows());
    CHECK(model->predict(d.row(3)) == doctest::Approx(mean).epsilon(1e-12));

    std::vector<double> xc{0, 0, 1, 1, 2, 2};
    std::vector<double> yc{1, 1, 0};
    const Dataset dc(xc, yc, {"a", "b"}, TaskKind::Classification);
    auto spec_c = LearnerSpec::cart(TaskKind::Classification, 0, 1);
    const auto leaf = fit(spec_c, dc, all_rows(dc), cols, RngStream(1));
    CHECK(leaf->predict(dc.row(0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("models read only their feature_set columns") {
    const Dataset d = linear_data();
    for (auto kind_spec :
         {LearnerSpec::cart(TaskKind::Regression, 4, 2),
          LearnerSpec::ridge(TaskKind::Regression, 1e-3),
          LearnerSpec::kernel_ridge(TaskKind::Regression, 1e-2),
          LearnerSpec::knn(TaskKind::Regression, 3)}) {
        const FeatureSet cols{0};
        const auto model = fit(kind_spec, d, all_rows(d), cols, RngStream(1));
        std::vector<double> row_a{0.5, -100.0};
        std::vector<double> row_b{0.5, 250.0};
        CHECK(model->predict(row_a) == model->predict(row_b));
    }
}

TEST_CASE("error function values and Lipschitz property") {
    CHECK(error(TaskKind::Regression, 2.0, 0.5) == doctest::Approx(2.25));
    CHECK(error(TaskKind::Classification, 1.0, 1.0) == 0.0);
    CHECK(error(TaskKind::Classification, 0.0, 0.3) == doctest::Approx(0.3));
    CHECK(error(TaskKind::Regression, -1.0, 1.0) == doctest::Approx(4.0));

    // |error(y,a) - error(y,b)| <= |a-b| for classification.
    RngStream rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const double y = rng.next_bernoulli(0.5) ? 1.0 : 0.0;
        const double a = rng.next_double();
        const double b = rng.next_double();
        CHECK(std::abs(error(TaskKind::Classification, y, a) -
                       error(TaskKind::Classification, y, b)) <=
              std::abs(a - b) + 1e-15);
    }
}

TEST_CASE("fit is deterministic given identical inputs") {
    const Dataset d = linear_data();
    const FeatureSet cols{0, 1};
    for (auto spec :
         {LearnerSpec::cart(TaskKind::Regression, 5, 2),
          LearnerSpec::ridge(TaskKind::Regression, 1e-3),
          LearnerSpec::kernel_ridge(TaskKind::Regression, 1e-2),
          LearnerSpec::knn(TaskKind::Regression, 3)}) {
        const auto m1 = fit(spec, d, all_rows(d), cols, RngStream(9, 1));
        const auto m2 = fit(spec, d, all_rows(d), cols, RngStream(9, 1));
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            CHECK(m1->predict(d.row(i)) == m2->predict(d.row(i)));
        }
    }
}

TEST_CASE("cart training error is non-increasing in max_depth") {
    std::vector<double> x, y;
    RngStream rng(23);
    for (int i = 0; i < 120; ++i) {
        const double a = rng.next_gaussian();
        const double b = rng.next_gaussian();
        x.push_back(a);
        x.push_back(b);
        y.push_back(a * b + 0.3 * rng.next_gaussian());
    }
    const Dataset d(x, y, {"a", "b"}, TaskKind::Regression);
    const FeatureSet cols{0, 1};
    double prev = std::numeric_limits<double>::infinity();
    for (int depth = 0; depth <= 6; ++depth) {
        const auto model =
            fit(LearnerSpec::cart(TaskKind::Regression, depth, 1), d,
                std::vector<std::size_t>(all_rows(d)), cols, RngStream(1));
        double mse = 0;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            mse += error(TaskKind::Regression, d.y(i), model->predict(d.row(i)));
        }
        CHECK(mse <= prev + 1e-9);
        prev = mse;
    }
}

TEST_CASE("kernel ridge at huge bandwidth approaches the label mean") {
    const Dataset d = linear_data();
    const FeatureSet cols{0, 1};
    auto spec = LearnerSpec::kernel_ridge(TaskKind::Regression, 1e-2, 1e6);
    const auto model = fit(spec, d, all_rows(d), cols, RngStream(1));
    const double mean =
        std::accumulate(d.labels().begin(), d.labels().end(), 0.0) /
        static_cast<double>(d.n_rows());
    const std::vector<double> row{0.2, 0.4};
    CHECK(model->predict(row) == doctest::Approx(mean).epsilon(1e-3));
}

TEST_CASE("kernel ridge survives degenerate subsamples") {
    // Constant response with lambda 0: singular system, jitter fallback.
    std::vector<double> x{0, 0, 1, 1, 2, 2, 3, 3};
    std::vector<double> y{5, 5, 5, 5};
    const Dataset d(x, y, {"a", "b"}, TaskKind::Regression);
    const FeatureSet cols{0, 1};
    auto spec = LearnerSpec::kernel_ridge(TaskKind::Regression, 0.0);
    const auto model =
        fit(spec, d, std::vector<std::size_t>{0, 1, 2, 3}, cols, RngStream(1));
    CHECK(std::isfinite(model->predict(d.row(0))));
    CHECK(model->predict(d.row(0)) == doctest::Approx(5.0).epsilon(1e-3));
}

TEST_CASE("classification predictions are clamped to [0,1]") {
    std::vector<double> x, y;
    RngStream rng(31);
    for (int i = 0; i < 40; ++i) {
        const double a = rng.next_gaussian();
        x.push_back(a);
        x.push_back(rng.next_gaussian());
        y.push_back(a > 0 ? 1.0 : 0.0);
    }
    const Dataset d(x, y, {"a", "b"}, TaskKind::Classification);
    const FeatureSet cols{0, 1};
    auto spec = LearnerSpec::ridge(TaskKind::Classification, 1e-6);
    const auto model = fit(spec, d, all_rows(d), cols, RngStream(1));
    std::vector<double> extreme{50.0, 0.0};
    const double p = model->predict(extreme);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
}

TEST_CASE("learner spec validation") {
    auto bad = LearnerSpec::ridge(TaskKind::Regression, -1.0);
    CHECK_THROWS_AS(bad.validate(), InvalidSpecError);
    auto bad_k = LearnerSpec::knn(TaskKind::Regression, 0);
    CHECK_THROWS_AS(bad_k.validate(), InvalidSpecError);
    const Dataset d = linear_data();
    auto big_k = LearnerSpec::knn(TaskKind::Regression, 1000);
    CHECK_THROWS_AS(
        fit(big_k, d, std::vector<std::size_t>{0, 1, 2}, FeatureSet{0}, RngStream(1)),
        InvalidSpecError);
}
