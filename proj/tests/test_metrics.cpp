#include "kstgcn/metrics.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace kstgcn;

TEST_CASE("perfect prediction scores the ideal point") {
    Mat truth(2, 3);
    truth << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
    MetricReport r = evaluate(truth, truth);
    CHECK(r.rmse == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(r.accuracy == 1.0);
    REQUIRE(r.r2.has_value());
    REQUIRE(r.var.has_value());
    CHECK(*r.r2 == 1.0);
    CHECK(*r.var == 1.0);
}

TEST_CASE("predicting the truth mean zeroes the determination coefficient") {
    Mat truth(1, 4);
    truth << 2.0, 4.0, 6.0, 8.0;
    Mat pred = Mat::Constant(1, 4, truth.mean());
    MetricReport r = evaluate(pred, truth);
    REQUIRE(r.r2.has_value());
    CHECK(*r.r2 == Catch::Approx(0.0).margin(1e-15));
    // diff equals centered truth, so its variance matches the truth variance
    REQUIRE(r.var.has_value());
    CHECK(*r.var == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("two-element hand computation") {
    Mat truth(1, 2), pred(1, 2);
    truth << 3.0, 4.0;
    pred << 4.0, 4.0;
    MetricReport r = evaluate(pred, truth);
    CHECK(r.rmse == Catch::Approx(std::sqrt(0.5)));
    CHECK(r.mae == Catch::Approx(0.5));
    CHECK(r.accuracy == Catch::Approx(1.0 - 1.0 / 5.0));
    // ss_tot = 0.5, ss_res = 1.0
    REQUIRE(r.r2.has_value());
    CHECK(*r.r2 == Catch::Approx(-1.0));
    // diff = (-1, 0): var 0.25; truth var 0.25
    REQUIRE(r.var.has_value());
    CHECK(*r.var == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("accuracy and ratio metrics are scale equivariant") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(1.0, 9.0);
    Mat truth(4, 5), pred(4, 5);
    for (long i = 0; i < truth.size(); ++i) {
        truth.data()[i] = u(rng);
        pred.data()[i] = u(rng);
    }
    MetricReport base = evaluate(pred, truth);
    const double c = 3.5;
    MetricReport scaled = evaluate(Mat(pred * c), Mat(truth * c));
    CHECK(scaled.rmse == Catch::Approx(base.rmse * c));
    CHECK(scaled.mae == Catch::Approx(base.mae * c));
    CHECK(scaled.accuracy == Catch::Approx(base.accuracy));
    CHECK(*scaled.r2 == Catch::Approx(*base.r2));
    CHECK(*scaled.var == Catch::Approx(*base.var));
}

TEST_CASE("shifting both inputs leaves error magnitudes alone") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Mat truth(3, 3), pred(3, 3);
    for (long i = 0; i < truth.size(); ++i) {
        truth.data()[i] = u(rng);
        pred.data()[i] = u(rng);
    }
    MetricReport base = evaluate(pred, truth);
    const double shift = 10.0;
    MetricReport moved = evaluate(Mat(pred.array() + shift), Mat(truth.array() + shift));
    CHECK(moved.rmse == Catch::Approx(base.rmse));
    CHECK(moved.mae == Catch::Approx(base.mae));
    CHECK(*moved.r2 == Catch::Approx(*base.r2));
    CHECK(*moved.var == Catch::Approx(*base.var));
}

TEST_CASE("root mean square error dominates mean absolute error") {
    Rng rng(7);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        Mat truth(2, 4), pred(2, 4);
        for (long i = 0; i < truth.size(); ++i) {
            truth.data()[i] = g(rng);
            pred.data()[i] = g(rng);
        }
        MetricReport r = evaluate(pred, truth);
        REQUIRE(r.rmse >= r.mae - 1e-12);
    }
}

TEST_CASE("constant truth leaves variance metrics undefined") {
    Mat truth = Mat::Constant(2, 2, 5.0);
    Mat pred(2, 2);
    pred << 4.0, 5.0, 6.0, 5.0;
    MetricReport r = evaluate(pred, truth);
    CHECK_FALSE(r.r2.has_value());
    CHECK_FALSE(r.var.has_value());
    CHECK(r.rmse > 0.0);

    std::vector<std::string> cells = metric_cells(r);
    REQUIRE(cells.size() == 5);
    CHECK(cells[3] == "*");
    CHECK(cells[4] == "*");
    CHECK(cells[0] == "0.707107");
}

TEST_CASE("all-zero truth with perfect prediction is fully accurate") {
    Mat z = Mat::Zero(2, 2);
    MetricReport r = evaluate(z, z);
    CHECK(r.accuracy == 1.0);
    CHECK(r.rmse == 0.0);
}

TEST_CASE("column names line up with the cell order") {
    const auto& cols = metric_columns();
    REQUIRE(cols.size() == 5);
    CHECK(cols[0] == "rmse");
    CHECK(cols[1] == "mae");
    CHECK(cols[2] == "accuracy");
    CHECK(cols[3] == "r2");
    CHECK(cols[4] == "var");
}

TEST_CASE("evaluate rejects mismatched and empty shapes") {
    Mat a(2, 2), b(2, 3);
    a.setZero();
    b.setZero();
    CHECK_THROWS_AS(evaluate(a, b), std::invalid_argument);
    Mat empty(0, 0);
    CHECK_THROWS_AS(evaluate(empty, empty), std::invalid_argument);
}
