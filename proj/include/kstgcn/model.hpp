#pragma once

// The composed forecaster: KS-Cell feeding a GRU across an input window,
// with an affine head emitting all horizon steps at once. Holds the
// parameter flattening used by the optimizer and the checkpoint format.

#include "kstgcn/common.hpp"
#include "kstgcn/gru.hpp"
#include "kstgcn/kscell.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace kstgcn {

struct ModelConfig {
    int window = 4;      // input steps (one hour at 15-minute intervals)
    int horizon = 1;     // predicted steps ahead
    int d_s = 0;         // static knowledge width (0 disables)
    int d_d = 0;         // dynamic knowledge width (0 disables)
    int d_f = 16;        // fused feature width
    int d_out = 16;      // graph convolution output width
    int gcn_layers = 1;
    int d_h = 128;       // GRU hidden units

    bool operator==(const ModelConfig&) const = default;
};

inline void validate(const ModelConfig& c) {
    require(c.window >= 1, "model config: window must be at least 1");
    require(c.horizon >= 1, "model config: horizon must be at least 1");
    require(c.d_s >= 0 && c.d_d >= 0, "model config: knowledge widths must be nonnegative");
    require(c.d_f >= 1 && c.d_out >= 1 && c.d_h >= 1, "model config: widths must be positive");
    require(c.gcn_layers >= 1, "model config: need at least one graph convolution layer");
}

inline nlohmann::json to_json(const ModelConfig& c) {
    return {{"window", c.window},   {"horizon", c.horizon},       {"d_s", c.d_s},
            {"d_d", c.d_d},         {"d_f", c.d_f},               {"d_out", c.d_out},
            {"gcn_layers", c.gcn_layers}, {"d_h", c.d_h}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.window = j.value("window", c.window);
    c.horizon = j.value("horizon", c.horizon);
    c.d_s = j.value("d_s", c.d_s);
    c.d_d = j.value("d_d", c.d_d);
    c.d_f = j.value("d_f", c.d_f);
    c.d_out = j.value("d_out", c.d_out);
    c.gcn_layers = j.value("gcn_layers", c.gcn_layers);
    c.d_h = j.value("d_h", c.d_h);
    validate(c);
    return c;
}

struct ForecastModel {
    ModelConfig config;
    KsCellParams cell;
    GruParams gru;
};

namespace detail {

template <typename Model, typename Fn>
void visit_param_blocks(Model& m, Fn fn) {
    fn(m.cell.fusion_w);
    fn(m.cell.fusion_b);
    for (auto& w : m.cell.gcn_ws) fn(w);
    fn(m.gru.w_u);
    fn(m.gru.b_u);
    fn(m.gru.w_r);
    fn(m.gru.b_r);
    fn(m.gru.w_c);
    fn(m.gru.b_c);
    fn(m.gru.head_w);
    fn(m.gru.head_b);
}

}  // namespace detail

inline int n_params(const ForecastModel& m) {
    long total = 0;
    detail::visit_param_blocks(const_cast<ForecastModel&>(m),
                               [&](auto& block) { total += block.size(); });
    return static_cast<int>(total);
}

inline Vec flatten_params(const ForecastModel& m) {
    Vec out(n_params(m));
    long at = 0;
    detail::visit_param_blocks(const_cast<ForecastModel&>(m), [&](auto& block) {
        for (long i = 0; i < block.size(); ++i) out(at++) = block.data()[i];
    });
    return out;
}

inline void restore_params(ForecastModel& m, const Vec& flat) {
    require(flat.size() == n_params(m), "restore_params: length mismatch");
    long at = 0;
    detail::visit_param_blocks(m, [&](auto& block) {
        for (long i = 0; i < block.size(); ++i) block.data()[i] = flat(at++);
    });
}

// Parameter gradients in the same block order as flatten_params.
struct ModelGrad {
    KsCellGrad cell;
    GruGrad gru;

    static ModelGrad zeros_like(const ForecastModel& m) {
        return {KsCellGrad::zeros_like(m.cell), GruGrad::zeros_like(m.gru)};
    }
};

inline Vec flatten_grad(const ModelGrad& g) {
    auto& gm = const_cast<ModelGrad&>(g);
    long total = 0;
    detail::visit_param_blocks(gm, [&](auto& block) { total += block.size(); });
    Vec out(total);
    long at = 0;
    detail::visit_param_blocks(gm, [&](auto& block) {
        for (long i = 0; i < block.size(); ++i) out(at++) = block.data()[i];
    });
    return out;
}

// Uniform init scaled by fan-in and fan-out; biases start at zero.
inline ForecastModel init_forecast_model(const ModelConfig& config, Rng& rng) {
    validate(config);
    ForecastModel m;
    m.config = config;
    auto glorot = [&](int rows, int cols) {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        Mat w(rows, cols);
        for (long i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
        return w;
    };
    m.cell.fusion_w = glorot(1 + config.d_s + config.d_d, config.d_f);
    m.cell.fusion_b = Vec::Zero(config.d_f);
    int width = config.d_f;
    for (int layer = 0; layer < config.gcn_layers; ++layer) {
        m.cell.gcn_ws.push_back(glorot(width, config.d_out));
        width = config.d_out;
    }
    const int gate_rows = config.d_out + config.d_h;
    m.gru.w_u = glorot(gate_rows, config.d_h);
    m.gru.w_r = glorot(gate_rows, config.d_h);
    m.gru.w_c = glorot(gate_rows, config.d_h);
    m.gru.b_u = Vec::Zero(config.d_h);
    m.gru.b_r = Vec::Zero(config.d_h);
    m.gru.b_c = Vec::Zero(config.d_h);
    m.gru.head_w = glorot(config.d_h, config.horizon);
    m.gru.head_b = Vec::Zero(config.horizon);
    validate(m.cell);
    validate(m.gru);
    return m;
}

struct SequenceCache {
    std::vector<KsCellCache> cell;
    std::vector<GruStepCache> gru;
    std::vector<Mat> cell_out;  // x' per step
    Mat h_final;
};

// window_values: w x n speeds; e_s: n x d_s; e_d_window: w x d_d (one row
// per window step). Returns n x horizon predictions.
inline Mat forward_sequence(const ForecastModel& m, const Mat& window_values, const Mat& e_s,
                            const Mat& e_d_window, const PropagationMatrix& p,
                            SequenceCache* cache = nullptr) {
    const int w = static_cast<int>(window_values.rows());
    const int n = static_cast<int>(window_values.cols());
    require(w >= 1, "forward_sequence: empty window");
    require(e_s.cols() == m.config.d_s, "forward_sequence: e_s width mismatch");
    require(e_d_window.cols() == m.config.d_d, "forward_sequence: e_d width mismatch");
    if (m.config.d_d > 0)
        require(e_d_window.rows() == w, "forward_sequence: e_d must cover the window");

    if (cache) {
        cache->cell.assign(w, {});
        cache->gru.assign(w, {});
        cache->cell_out.assign(w, {});
    }
    Mat h = Mat::Zero(n, m.config.d_h);
    for (int t = 0; t < w; ++t) {
        Vec e_d_row = m.config.d_d > 0 ? Vec(e_d_window.row(t).transpose()) : Vec(0);
        Mat x_prime = ks_cell_forward(window_values.row(t).transpose(), e_s, e_d_row, p, m.cell,
                                      cache ? &cache->cell[t] : nullptr);
        if (cache) cache->cell_out[t] = x_prime;
        h = gru_step(x_prime, h, m.gru, cache ? &cache->gru[t] : nullptr);
    }
    if (cache) cache->h_final = h;
    return head_forward(h, m.gru);
}

// Reverse-mode sweep over the whole window; accumulates into grad.
inline void backward_sequence(const ForecastModel& m, const SequenceCache& cache,
                              const Mat& g_pred, const PropagationMatrix& p, ModelGrad& grad) {
    Mat g_h = head_backward(g_pred, cache.h_final, m.gru, grad.gru);
    for (int t = static_cast<int>(cache.gru.size()) - 1; t >= 0; --t) {
        GruInputGrad gi = gru_step_backward(g_h, cache.gru[t], m.gru, grad.gru);
        ks_cell_backward(gi.x, cache.cell[t], p, m.cell, grad.cell);
        g_h = std::move(gi.h_prev);
    }
}

// --- checkpointing ---------------------------------------------------------

inline void save_forecast_model(const ForecastModel& m, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    Vec flat = flatten_params(m);
    {
        std::ofstream out(dir + "/params.bin", std::ios::binary);
        out.write(reinterpret_cast<const char*>(flat.data()),
                  static_cast<std::streamsize>(flat.size() * sizeof(double)));
    }
    nlohmann::json manifest = {{"config", to_json(m.config)}, {"n_params", flat.size()}};
    std::ofstream out(dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
}

inline ForecastModel load_forecast_model(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw std::runtime_error(dir + "/manifest.json: cannot open");
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const std::exception& e) {
        throw std::runtime_error(dir + "/manifest.json: " + e.what());
    }
    ModelConfig config = model_config_from_json(manifest.at("config"));
    Rng rng(0);
    ForecastModel m = init_forecast_model(config, rng);
    const long expect = manifest.at("n_params").get<long>();
    if (expect != n_params(m))
        throw std::runtime_error(dir + ": manifest parameter count does not match config");
    Vec flat(expect);
    std::ifstream in(dir + "/params.bin", std::ios::binary);
    if (!in) throw std::runtime_error(dir + "/params.bin: cannot open");
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(expect * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(expect * sizeof(double)))
        throw std::runtime_error(dir + "/params.bin: truncated");
    restore_params(m, flat);
    return m;
}

}  // namespace kstgcn
