#pragma once

// KS-Cell: concatenate per-node speed with static and dynamic knowledge
// vectors, apply an affine map with tanh, then pass the fused features
// through the graph convolution. Forward passes cache intermediates for the
// reverse-mode sweep.

#include "kstgcn/common.hpp"
#include "kstgcn/graph.hpp"

#include <vector>

namespace kstgcn {

struct KsCellParams {
    Mat fusion_w;              // (1 + d_s + d_d) x d_f
    Vec fusion_b;              // d_f
    std::vector<Mat> gcn_ws;   // layer 0: d_f x d_out, further layers d_out x d_out
    Activation fusion_act = Activation::tanh;
    Activation gcn_act = Activation::rectifier;

    int d_in() const { return static_cast<int>(fusion_w.rows()); }
    int d_f() const { return static_cast<int>(fusion_w.cols()); }
    int d_out() const {
        return gcn_ws.empty() ? d_f() : static_cast<int>(gcn_ws.back().cols());
    }
};

struct KsCellGrad {
    Mat fusion_w;
    Vec fusion_b;
    std::vector<Mat> gcn_ws;

    static KsCellGrad zeros_like(const KsCellParams& p) {
        KsCellGrad g;
        g.fusion_w = Mat::Zero(p.fusion_w.rows(), p.fusion_w.cols());
        g.fusion_b = Vec::Zero(p.fusion_b.size());
        for (const auto& w : p.gcn_ws) g.gcn_ws.push_back(Mat::Zero(w.rows(), w.cols()));
        return g;
    }
};

inline void validate(const KsCellParams& p) {
    require(p.fusion_w.rows() >= 1, "ks-cell: fusion input width must be at least 1");
    require(p.fusion_b.size() == p.fusion_w.cols(), "ks-cell: fusion bias width mismatch");
    require(p.fusion_w.allFinite() && p.fusion_b.allFinite(), "ks-cell: non-finite fusion params");
    int width = p.d_f();
    for (const auto& w : p.gcn_ws) {
        require(w.rows() == width, "ks-cell: gcn weight row mismatch");
        require(w.allFinite(), "ks-cell: non-finite gcn weight");
        width = static_cast<int>(w.cols());
    }
}

// Per node: tanh([speed | e_s | e_d] W + b). e_s and e_d may have zero
// columns (ablations).
inline Mat fuse(const Vec& x_t, const Mat& e_s, const Mat& e_d_t, const KsCellParams& params) {
    const int n = static_cast<int>(x_t.size());
    require(e_s.rows() == n && e_d_t.rows() == n, "fuse: row counts must equal node count");
    require(1 + e_s.cols() + e_d_t.cols() == params.fusion_w.rows(),
            "fuse: fusion weight rows must match 1 + d_s + d_d");
    Mat z(n, params.fusion_w.rows());
    z.col(0) = x_t;
    if (e_s.cols() > 0) z.middleCols(1, e_s.cols()) = e_s;
    if (e_d_t.cols() > 0) z.rightCols(e_d_t.cols()) = e_d_t;
    Mat pre = (z * params.fusion_w).rowwise() + params.fusion_b.transpose();
    return apply_activation(pre, params.fusion_act);
}

struct KsCellCache {
    Mat z;                      // n x (1 + d_s + d_d)
    Mat fused;                  // n x d_f, after activation
    std::vector<Mat> layer_ph;  // P * H per gcn layer
    std::vector<Mat> layer_out; // activated output per gcn layer
    int d_s = 0;
    int d_d = 0;
};

inline Mat ks_cell_forward(const Vec& x_t, const Mat& e_s, const Vec& e_d_row,
                           const PropagationMatrix& p, const KsCellParams& params,
                           KsCellCache* cache = nullptr) {
    const int n = static_cast<int>(x_t.size());
    require(p.size() == n, "ks_cell_forward: propagation size must match node count");
    Mat e_d_t(n, e_d_row.size());
    if (e_d_row.size() > 0) e_d_t.rowwise() = e_d_row.transpose();

    Mat z(n, params.fusion_w.rows());
    require(1 + e_s.cols() + e_d_row.size() == params.fusion_w.rows(),
            "ks_cell_forward: fusion weight rows must match 1 + d_s + d_d");
    require(e_s.rows() == n, "ks_cell_forward: e_s rows must equal node count");
    z.col(0) = x_t;
    if (e_s.cols() > 0) z.middleCols(1, e_s.cols()) = e_s;
    if (e_d_row.size() > 0) z.rightCols(e_d_row.size()) = e_d_t;

    Mat pre = (z * params.fusion_w).rowwise() + params.fusion_b.transpose();
    Mat h = apply_activation(pre, params.fusion_act);
    if (cache) {
        cache->z = z;
        cache->fused = h;
        cache->layer_ph.clear();
        cache->layer_out.clear();
        cache->d_s = static_cast<int>(e_s.cols());
        cache->d_d = static_cast<int>(e_d_row.size());
    }
    for (const auto& w : params.gcn_ws) {
        Mat ph = p.p * h;
        h = apply_activation(ph * w, params.gcn_act);
        if (cache) {
            cache->layer_ph.push_back(ph);
            cache->layer_out.push_back(h);
        }
    }
    return h;
}

struct KsCellInputGrad {
    Vec x;    // n
    Mat e_s;  // n x d_s
    Vec e_d;  // d_d (broadcast rows summed)
};

// Reverse sweep. g_out is dL/d(cell output); parameter gradients accumulate
// into grad, input gradients are returned.
inline KsCellInputGrad ks_cell_backward(const Mat& g_out, const KsCellCache& cache,
                                        const PropagationMatrix& p, const KsCellParams& params,
                                        KsCellGrad& grad) {
    Mat g = g_out;
    for (int layer = static_cast<int>(params.gcn_ws.size()) - 1; layer >= 0; --layer) {
        Mat g_pre =
            (g.array() * activation_grad_from_output(cache.layer_out[layer], params.gcn_act).array())
                .matrix();
        grad.gcn_ws[layer] += cache.layer_ph[layer].transpose() * g_pre;
        g = p.p.transpose() * (g_pre * params.gcn_ws[layer].transpose());
    }
    Mat g_fpre =
        (g.array() * activation_grad_from_output(cache.fused, params.fusion_act).array()).matrix();
    grad.fusion_w += cache.z.transpose() * g_fpre;
    grad.fusion_b += g_fpre.colwise().sum().transpose();
    Mat g_z = g_fpre * params.fusion_w.transpose();

    KsCellInputGrad in;
    in.x = g_z.col(0);
    in.e_s = g_z.middleCols(1, cache.d_s);
    // e_d enters as one row broadcast over nodes, so its gradient sums rows
    in.e_d = cache.d_d > 0 ? Vec(g_z.rightCols(cache.d_d).colwise().sum().transpose())
                           : Vec(0);
    return in;
}

}  // namespace kstgcn
