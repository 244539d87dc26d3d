#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "iloco/dataset.hpp"
#include "iloco/rng.hpp"

using namespace iloco;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, 8);
    bool any_diff = false;
    RngStream a2(42, 7);
    for (int i = 0; i < 10; ++i) any_diff |= (a2.next_u64() != c.next_u64());
    CHECK(any_diff);

    // Substreams derive from stream identity, not from draw position.
    RngStream parent(1, 2);
    parent.next_u64();
    RngStream fresh(1, 2);
    CHECK(parent.substream(5).next_u64() == fresh.substream(5).next_u64());
}

TEST_CASE("rng uniform below bound and gaussian moments") {
    RngStream rng(9);
    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.below(17) < 17);
    }
    double sum = 0, sum_sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("load_csv parses a simple numeric file") {
    const auto path = write_temp("iloco_basic.csv", "a,b,t\n1,2,3\n4,5,6\n7,8,9\n");
    const Dataset d = load_csv(path, "t", TaskKind::Regression);
    CHECK(d.n_rows() == 3);
    CHECK(d.n_cols() == 2);
    CHECK(d.x(1, 0) == 4.0);
    CHECK(d.y(2) == 9.0);
    CHECK(d.feature_names() == std::vector<std::string>{"a", "b"});
    std::remove(path.c_str());
}

TEST_CASE("load_csv one-hot encodes categoricals in level-sorted order") {
    const auto path = write_temp("iloco_cat.csv",
                                 "color,z,t\nred,1,0\nblue,2,1\nred,3,0\n");
    const Dataset d = load_csv(path, "t", TaskKind::Regression, true);
    CHECK(d.feature_names() ==
          std::vector<std::string>{"color=blue", "color=red", "z"});
    // One-hot block rows sum to 1.
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        CHECK(d.x(i, 0) + d.x(i, 1) == 1.0);
    }
    CHECK(d.x(0, 1) == 1.0);  // red
    CHECK(d.x(1, 0) == 1.0);  // blue
    std::remove(path.c_str());
}

TEST_CASE("load_csv error cases") {
    const auto missing = write_temp("iloco_m.csv", "a,b\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_csv(missing, "t", TaskKind::Regression), MissingTargetError);
    std::remove(missing.c_str());

    const auto non_numeric = write_temp("iloco_nn.csv", "a,b,t\nx,2,3\ny,5,6\n");
    CHECK_THROWS_AS(load_csv(non_numeric, "t", TaskKind::Regression),
                    NonNumericColumnError);
    std::remove(non_numeric.c_str());

    const auto empty = write_temp("iloco_e.csv", "a,b,t\n");
    CHECK_THROWS_AS(load_csv(empty, "t", TaskKind::Regression), EmptyDataError);
    std::remove(empty.c_str());

    const auto three_labels =
        write_temp("iloco_3l.csv", "a,b,t\n1,2,x\n3,4,y\n5,6,z\n");
    CHECK_THROWS_AS(load_csv(three_labels, "t", TaskKind::Classification),
                    NonBinaryLabelsError);
    std::remove(three_labels.c_str());

    const auto hole = write_temp("iloco_hole.csv", "a,b,t\n1,,3\n4,5,6\n");
    CHECK_THROWS_AS(load_csv(hole, "t", TaskKind::Regression), DataError);
    std::remove(hole.c_str());

    const auto inf = write_temp("iloco_inf.csv", "a,b,t\n1,inf,3\n4,5,6\n");
    CHECK_THROWS_AS(load_csv(inf, "t", TaskKind::Regression), DataError);
    std::remove(inf.c_str());
}

TEST_CASE("classification labels map lexicographically to 0/1") {
    const auto path = write_temp("iloco_lbl.csv", "a,b,t\n1,2,yes\n3,4,no\n5,6,yes\n");
    const Dataset d = load_csv(path, "t", TaskKind::Classification);
    CHECK(d.y(0) == 1.0);  // "no" < "yes"
    CHECK(d.y(1) == 0.0);
    CHECK(d.y(2) == 1.0);
    std::remove(path.c_str());
}

TEST_CASE("csv round-trip is bit exact") {
    RngStream rng(3);
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(rng.next_gaussian() * 1e-7);
        x.push_back(rng.next_gaussian() * 1e9);
        x.push_back(rng.next_double());
        y.push_back(rng.next_gaussian());
    }
    const Dataset d(x, y, {"a", "b", "c"}, TaskKind::Regression);
    const auto path =
        (std::filesystem::temp_directory_path() / "iloco_rt.csv").string();
    save_csv(d, path, "t");
    const Dataset back = load_csv(path, "t", TaskKind::Regression);
    REQUIRE(back.n_rows() == d.n_rows());
    REQUIRE(back.n_cols() == d.n_cols());
    CHECK(back.values() == d.values());
    CHECK(back.labels() == d.labels());
    std::remove(path.c_str());
}

TEST_CASE("split sizes, disjointness, determinism") {
    std::vector<double> x(500 * 2);
    std::vector<double> y(500);
    RngStream rng(11);
    for (std::size_t i = 0; i < 500; ++i) {
        x[2 * i] = rng.next_gaussian();
        x[2 * i + 1] = static_cast<double>(i);
        y[i] = rng.next_gaussian();
    }
    const Dataset d(x, y, {"a", "b"}, TaskKind::Regression);

    const SplitPair sp = split(d, 0.5, RngStream(7, 1));
    CHECK(sp.train.n_rows() == 250);
    CHECK(sp.test.n_rows() == 250);

    // Row identity is carried in column b; the union must be 0..499 disjointly.
    std::set<int> seen;
    for (std::size_t i = 0; i < sp.train.n_rows(); ++i) {
        seen.insert(static_cast<int>(sp.train.x(i, 1)));
    }
    for (std::size_t i = 0; i < sp.test.n_rows(); ++i) {
        CHECK(!seen.count(static_cast<int>(sp.test.x(i, 1))));
        seen.insert(static_cast<int>(sp.test.x(i, 1)));
    }
    CHECK(seen.size() == 500);

    const SplitPair again = split(d, 0.5, RngStream(7, 1));
    CHECK(again.train.values() == sp.train.values());
    CHECK(again.test.values() == sp.test.values());

    const SplitPair other = split(d, 0.5, RngStream(8, 1));
    CHECK(other.train.values() != sp.train.values());
}

TEST_CASE("split rejects degenerate sizes") {
    std::vector<double> x{1, 2, 3, 4, 5, 6};
    std::vector<double> y{1, 2, 3};
    const Dataset d(x, y, {"a", "b"}, TaskKind::Regression);
    CHECK_THROWS_AS(split(d, 0.9, RngStream(1)), TooFewRowsError);
}

TEST_CASE("dataset invariants") {
    CHECK_THROWS_AS(Dataset({1.0, 2.0}, {0.0, 2.0}, {"a"}, TaskKind::Classification),
                    NonBinaryLabelsError);
    CHECK_THROWS_AS(Dataset({1.0, std::numeric_limits<double>::quiet_NaN()},
                            {0.0, 1.0}, {"a"}, TaskKind::Regression),
                    DataError);
    CHECK_THROWS_AS(Dataset({1.0, 2.0, 3.0, 4.0}, {0.0, 1.0}, {"a", "a"},
                            TaskKind::Regression),
                    DataError);
}
