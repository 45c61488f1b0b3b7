#pragma once

// Evaluation quantities over denormalized predictions: RMSE, MAE, accuracy
// (one minus Frobenius relative error), R2 and explained variance. R2 and
// variance are undefined for constant truth and serialize as "*".

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kstgcn {

struct MetricReport {
    double rmse = 0.0;
    double mae = 0.0;
    double accuracy = 0.0;
    std::optional<double> r2;
    std::optional<double> var;
};

inline MetricReport evaluate(const Mat& pred, const Mat& truth) {
    require(pred.rows() == truth.rows() && pred.cols() == truth.cols(),
            "evaluate: shape mismatch");
    require(pred.size() > 0, "evaluate: empty matrices");
    MetricReport rep;
    Mat diff = truth - pred;
    const double n = static_cast<double>(diff.size());
    rep.rmse = std::sqrt(diff.array().square().sum() / n);
    rep.mae = diff.array().abs().sum() / n;

    const double truth_norm = truth.norm();
    const double diff_norm = diff.norm();
    rep.accuracy = (truth_norm == 0.0 && diff_norm == 0.0) ? 1.0 : 1.0 - diff_norm / truth_norm;

    const double mean = truth.mean();
    const double ss_tot = (truth.array() - mean).square().sum();
    if (ss_tot > 0.0) rep.r2 = 1.0 - diff.array().square().sum() / ss_tot;

    const double diff_mean = diff.mean();
    const double var_diff = (diff.array() - diff_mean).square().sum() / n;
    const double var_truth = (truth.array() - mean).square().sum() / n;
    if (var_truth > 0.0) rep.var = 1.0 - var_diff / var_truth;
    return rep;
}

inline const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols = {"rmse", "mae", "accuracy", "r2", "var"};
    return cols;
}

inline std::vector<std::string> metric_cells(const MetricReport& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? csv::format_metric(*v) : std::string("*");
    };
    return {csv::format_metric(r.rmse), csv::format_metric(r.mae), csv::format_metric(r.accuracy),
            opt(r.r2), opt(r.var)};
}

}  // namespace kstgcn
