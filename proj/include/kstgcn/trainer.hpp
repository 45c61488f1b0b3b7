#pragma once

// Training orchestration: window sampling over the speed tensor, reverse-mode
// batch gradients, Adam updates, chronological train/validation split with
// per-epoch denormalized validation metrics, and the finite-difference
// gradient verifier.

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"
#include "kstgcn/metrics.hpp"
#include "kstgcn/model.hpp"
#include "kstgcn/speed.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace kstgcn {

struct TrainConfig {
    double lr = 0.001;
    int batch_size = 64;
    int epochs = 300;
    double train_fraction = 0.8;
    uint64_t seed = 1;
    double weight_decay = 1.5e-3;
    // Window and horizon mirror the model config; zero means inherit.
    int window = 0;
    int horizon = 0;
};

inline void validate(const TrainConfig& c) {
    require(c.lr > 0.0, "train config: lr must be positive");
    require(c.batch_size >= 1, "train config: batch size must be positive");
    require(c.epochs >= 0, "train config: epochs must be nonnegative");
    require(c.train_fraction > 0.0 && c.train_fraction < 1.0,
            "train config: train fraction must lie in (0,1)");
    require(c.weight_decay >= 0.0, "train config: weight decay must be nonnegative");
}

// MSE over all entries plus the L2 penalty on the parameter vector.
inline double loss(const Mat& pred, const Mat& truth, const ForecastModel& model,
                   double weight_decay) {
    require(pred.rows() == truth.rows() && pred.cols() == truth.cols(), "loss: shape mismatch");
    double mse = (pred - truth).array().square().mean();
    if (weight_decay != 0.0) mse += weight_decay * flatten_params(model).squaredNorm() / 2.0;
    return mse;
}

// A training sample: input rows [start, start+window), target rows
// [start+window, start+window+horizon). Targets default to the input series;
// a separate target series supports perturbed-input protocols.
struct WindowBatch {
    const Mat* values = nullptr;   // T x n, normalized input speeds
    const Mat* targets = nullptr;  // T x n, normalized target speeds; null = values
    const Mat* e_s = nullptr;      // n x d_s
    const Mat* e_d = nullptr;      // T x d_d
    std::vector<int> starts;
};

namespace detail {

inline Mat window_targets(const Mat& values, int start, int window, int horizon) {
    Mat truth(values.cols(), horizon);
    for (int k = 0; k < horizon; ++k) truth.col(k) = values.row(start + window + k).transpose();
    return truth;
}

inline Mat e_d_slice(const Mat& e_d, int start, int window, int d_d) {
    if (d_d == 0) return Mat(0, 0);
    return e_d.middleRows(start, window);
}

inline std::string first_nonfinite_stage(const SequenceCache& cache, const Mat& pred) {
    for (size_t t = 0; t < cache.cell.size(); ++t) {
        if (!cache.cell[t].fused.allFinite())
            return "fusion output at window step " + std::to_string(t);
        for (size_t l = 0; l < cache.cell[t].layer_out.size(); ++l)
            if (!cache.cell[t].layer_out[l].allFinite())
                return "graph convolution layer " + std::to_string(l) + " at window step " +
                       std::to_string(t);
    }
    for (size_t t = 0; t < cache.gru.size(); ++t)
        if (!cache.gru[t].u.allFinite() || !cache.gru[t].r.allFinite() ||
            !cache.gru[t].c.allFinite())
            return "recurrent gates at window step " + std::to_string(t);
    if (!pred.allFinite()) return "prediction head";
    return "";
}

}  // namespace detail

// Mean batch loss and its exact analytic gradient (including weight decay),
// flattened in parameter order.
inline double batch_gradient(const ForecastModel& model, const WindowBatch& batch,
                             const PropagationMatrix& p, double weight_decay, Vec& grad_flat) {
    require(!batch.starts.empty(), "batch_gradient: empty batch");
    const Mat& values = *batch.values;
    const Mat& targets = batch.targets ? *batch.targets : values;
    require(targets.rows() == values.rows() && targets.cols() == values.cols(),
            "batch_gradient: target series shape mismatch");
    const int window = model.config.window;
    const int horizon = model.config.horizon;
    const int n = static_cast<int>(values.cols());
    const double batch_count = static_cast<double>(batch.starts.size());

    ModelGrad grad = ModelGrad::zeros_like(model);
    SequenceCache cache;
    double total_mse = 0.0;
    for (int start : batch.starts) {
        require(start >= 0 && start + window + horizon <= values.rows(),
                "batch_gradient: window exceeds data range");
        Mat pred = forward_sequence(model, values.middleRows(start, window), *batch.e_s,
                                    detail::e_d_slice(*batch.e_d, start, window, model.config.d_d),
                                    p, &cache);
        Mat truth = detail::window_targets(targets, start, window, horizon);
        Mat diff = pred - truth;
        // The rectifier maps NaN to zero, so inspect every cached stage rather
        // than relying on the loss going non-finite.
        const std::string stage = detail::first_nonfinite_stage(cache, pred);
        if (!stage.empty())
            throw std::runtime_error("batch_gradient: non-finite value in " + stage);
        if (!diff.allFinite())
            throw std::runtime_error("batch_gradient: non-finite target value");
        total_mse += diff.array().square().mean();
        Mat g_pred = diff * (2.0 / (static_cast<double>(n) * horizon * batch_count));
        backward_sequence(model, cache, g_pred, p, grad);
    }
    grad_flat = flatten_grad(grad);
    double batch_loss = total_mse / batch_count;
    if (weight_decay != 0.0) {
        Vec theta = flatten_params(model);
        grad_flat += weight_decay * theta;
        batch_loss += weight_decay * theta.squaredNorm() / 2.0;
    }
    return batch_loss;
}

// Mean batch loss without the backward sweep.
inline double batch_loss(const ForecastModel& model, const WindowBatch& batch,
                         const PropagationMatrix& p, double weight_decay) {
    require(!batch.starts.empty(), "batch_loss: empty batch");
    const Mat& values = *batch.values;
    const Mat& targets = batch.targets ? *batch.targets : values;
    const int window = model.config.window;
    const int horizon = model.config.horizon;
    double total_mse = 0.0;
    for (int start : batch.starts) {
        Mat pred = forward_sequence(model, values.middleRows(start, window), *batch.e_s,
                                    detail::e_d_slice(*batch.e_d, start, window, model.config.d_d),
                                    p);
        total_mse += (pred - detail::window_targets(targets, start, window, horizon))
                         .array()
                         .square()
                         .mean();
    }
    double l = total_mse / static_cast<double>(batch.starts.size());
    if (weight_decay != 0.0) l += weight_decay * flatten_params(model).squaredNorm() / 2.0;
    return l;
}

struct AdamState {
    Vec m;
    Vec v;
    long t = 0;

    static AdamState zeros(long n) { return {Vec::Zero(n), Vec::Zero(n), 0}; }
};

inline void adam_step(Vec& theta, const Vec& grad, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    ++state.t;
    state.m = beta1 * state.m + (1.0 - beta1) * grad;
    state.v = (beta2 * state.v.array() + (1.0 - beta2) * grad.array().square()).matrix();
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    theta.array() -=
        lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + eps);
}

struct EpochStats {
    double train_loss = 0.0;
    MetricReport val;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

inline void save_history(const TrainHistory& h, const std::string& path) {
    csv::Writer w(path);
    std::vector<std::string> header = {"epoch", "train_loss"};
    for (const auto& c : metric_columns()) header.push_back(c);
    w.row(header);
    for (size_t i = 0; i < h.epochs.size(); ++i) {
        std::vector<std::string> cells = {std::to_string(i),
                                          csv::format_double(h.epochs[i].train_loss)};
        for (auto& c : metric_cells(h.epochs[i].val)) cells.push_back(c);
        w.row(cells);
    }
}

// Validation predictions pooled across all validation windows, denormalized.
// Targets come from target_values when given, otherwise from values.
inline std::pair<Mat, Mat> predict_windows(const ForecastModel& model, const Mat& values,
                                           const Mat& e_s, const Mat& e_d,
                                           const PropagationMatrix& p,
                                           const std::vector<int>& starts,
                                           const NormBounds& bounds,
                                           const Mat* target_values = nullptr) {
    require(!starts.empty(), "predict_windows: no windows");
    const Mat& targets = target_values ? *target_values : values;
    const int n = static_cast<int>(values.cols());
    const int horizon = model.config.horizon;
    Mat pred_all(n, static_cast<int>(starts.size()) * horizon);
    Mat truth_all(n, static_cast<int>(starts.size()) * horizon);
    for (size_t i = 0; i < starts.size(); ++i) {
        Mat pred = forward_sequence(
            model, values.middleRows(starts[i], model.config.window), e_s,
            detail::e_d_slice(e_d, starts[i], model.config.window, model.config.d_d), p);
        pred_all.middleCols(static_cast<int>(i) * horizon, horizon) = pred;
        truth_all.middleCols(static_cast<int>(i) * horizon, horizon) =
            detail::window_targets(targets, starts[i], model.config.window, horizon);
    }
    return {denormalize_values(pred_all, bounds), denormalize_values(truth_all, bounds)};
}

// Row index where the chronological train/validation split falls.
inline int chronological_split(int total_steps, double train_fraction) {
    return static_cast<int>(std::lround(train_fraction * total_steps));
}

// Chronological split: the first train_fraction of rows feed training
// windows, the remainder validation windows; windows spanning the boundary
// are dropped. Speeds are min-max normalized with train-portion bounds and
// metrics are computed after denormalization. When an input series is
// supplied, windows read from it (same normalization) while targets stay on
// the primary series — the perturbed-input protocol.
inline TrainHistory train(ForecastModel& model, const SpeedTensor& data, const Mat& e_s,
                          const Mat& e_d, const PropagationMatrix& p, const TrainConfig& config,
                          const SpeedTensor* inputs = nullptr) {
    validate(config);
    validate(data);
    require(!data.bounds.has_value(), "train: expected raw (unnormalized) speeds");
    require(config.window == 0 || config.window == model.config.window,
            "train: window disagrees with model config");
    require(config.horizon == 0 || config.horizon == model.config.horizon,
            "train: horizon disagrees with model config");
    const int window = model.config.window;
    const int horizon = model.config.horizon;
    const int total = data.n_steps();
    const int n = data.n_nodes();
    require(p.size() == n, "train: propagation size must match node count");
    require(e_s.rows() == n && e_s.cols() == model.config.d_s, "train: e_s shape mismatch");
    if (model.config.d_d > 0)
        require(e_d.rows() == total && e_d.cols() == model.config.d_d,
                "train: e_d must cover every step");
    if (inputs) {
        require(!inputs->bounds.has_value(), "train: expected raw input series");
        require(inputs->values.rows() == total && inputs->values.cols() == n,
                "train: input series shape mismatch");
        require(inputs->values.allFinite(), "train: input series must be finite");
    }

    const int split = chronological_split(total, config.train_fraction);
    const int last_train_start = split - window - horizon;
    const int last_val_start = total - window - horizon;
    require(last_train_start >= 0, "train: degenerate split: no complete training window");
    require(last_val_start >= split, "train: degenerate split: no complete validation window");

    NormBounds bounds = speed_bounds(data, split);
    SpeedTensor norm = normalize(data, bounds);
    Mat input_norm;
    if (inputs)
        input_norm = ((inputs->values.array() - bounds.lo) / (bounds.hi - bounds.lo)).matrix();
    const Mat& in_values = inputs ? input_norm : norm.values;

    std::vector<int> train_starts(last_train_start + 1);
    std::iota(train_starts.begin(), train_starts.end(), 0);
    std::vector<int> val_starts(last_val_start - split + 1);
    std::iota(val_starts.begin(), val_starts.end(), split);

    TrainHistory history;
    if (config.epochs == 0) return history;

    Rng rng(config.seed);
    Vec theta = flatten_params(model);
    AdamState adam = AdamState::zeros(theta.size());
    Vec grad(theta.size());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(train_starts.begin(), train_starts.end(), rng);
        double epoch_loss = 0.0;
        for (size_t at = 0; at < train_starts.size(); at += config.batch_size) {
            WindowBatch batch;
            batch.values = &in_values;
            batch.targets = &norm.values;
            batch.e_s = &e_s;
            batch.e_d = &e_d;
            const size_t end = std::min(at + config.batch_size, train_starts.size());
            batch.starts.assign(train_starts.begin() + at, train_starts.begin() + end);
            double batch_loss = batch_gradient(model, batch, p, config.weight_decay, grad);
            epoch_loss += batch_loss * static_cast<double>(batch.starts.size());
            adam_step(theta, grad, adam, config.lr);
            restore_params(model, theta);
        }
        epoch_loss /= static_cast<double>(train_starts.size());
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch));

        EpochStats stats;
        stats.train_loss = epoch_loss;
        auto [pred, truth] =
            predict_windows(model, in_values, e_s, e_d, p, val_starts, bounds, &norm.values);
        stats.val = evaluate(pred, truth);
        history.epochs.push_back(stats);
    }
    return history;
}

// Central finite differences on every parameter coordinate (or a seeded
// subset above max_coords) against the analytic gradient. The relative-error
// denominator is floored at 1e-4 so coordinates whose true gradient is zero
// compare finite-difference roundoff (~1e-9 here) against the floor instead
// of dividing by zero.
inline double finite_diff_check(const ForecastModel& model, const WindowBatch& batch,
                                const PropagationMatrix& p, double eps,
                                double weight_decay = 0.0, int max_coords = 5000,
                                uint64_t subset_seed = 12345) {
    require(eps > 0.0, "finite_diff_check: eps must be positive");
    ForecastModel work = model;
    Vec analytic(n_params(work));
    batch_gradient(work, batch, p, weight_decay, analytic);

    Vec theta = flatten_params(work);
    std::vector<int> coords(theta.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (static_cast<int>(coords.size()) > max_coords) {
        Rng rng(subset_seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(max_coords);
    }

    auto loss_at = [&](double value, int coord) {
        const double saved = theta(coord);
        theta(coord) = value;
        restore_params(work, theta);
        double l = batch_loss(work, batch, p, weight_decay);
        theta(coord) = saved;
        return l;
    };

    double worst = 0.0;
    for (int coord : coords) {
        const double saved = theta(coord);
        const double up = loss_at(saved + eps, coord);
        const double down = loss_at(saved - eps, coord);
        restore_params(work, theta);
        const double fd = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic(coord)), std::abs(fd), 1e-4});
        worst = std::max(worst, std::abs(analytic(coord) - fd) / denom);
    }
    return worst;
}

}  // namespace kstgcn
