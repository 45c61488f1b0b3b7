#pragma once

// Gated recurrent unit over per-node feature rows, with the update-gate
// orientation h_t = u ⊙ h_prev + (1-u) ⊙ c, plus the affine head mapping the
// final hidden state to multi-step predictions.

#include "kstgcn/common.hpp"

#include <vector>

namespace kstgcn {

struct GruParams {
    Mat w_u, w_r, w_c;  // (d_in + d_h) x d_h
    Vec b_u, b_r, b_c;  // d_h
    Mat head_w;         // d_h x horizon
    Vec head_b;         // horizon

    int d_h() const { return static_cast<int>(w_u.cols()); }
    int d_in() const { return static_cast<int>(w_u.rows()) - d_h(); }
    int horizon() const { return static_cast<int>(head_w.cols()); }
};

struct GruGrad {
    Mat w_u, w_r, w_c;
    Vec b_u, b_r, b_c;
    Mat head_w;
    Vec head_b;

    static GruGrad zeros_like(const GruParams& p) {
        GruGrad g;
        g.w_u = Mat::Zero(p.w_u.rows(), p.w_u.cols());
        g.w_r = Mat::Zero(p.w_r.rows(), p.w_r.cols());
        g.w_c = Mat::Zero(p.w_c.rows(), p.w_c.cols());
        g.b_u = Vec::Zero(p.b_u.size());
        g.b_r = Vec::Zero(p.b_r.size());
        g.b_c = Vec::Zero(p.b_c.size());
        g.head_w = Mat::Zero(p.head_w.rows(), p.head_w.cols());
        g.head_b = Vec::Zero(p.head_b.size());
        return g;
    }
};

inline void validate(const GruParams& p) {
    const int dh = p.d_h();
    require(dh > 0, "gru: hidden size must be positive");
    require(p.w_r.rows() == p.w_u.rows() && p.w_c.rows() == p.w_u.rows(),
            "gru: gate weight row mismatch");
    require(p.w_r.cols() == dh && p.w_c.cols() == dh, "gru: gate weight column mismatch");
    require(p.b_u.size() == dh && p.b_r.size() == dh && p.b_c.size() == dh,
            "gru: bias width mismatch");
    require(p.head_w.rows() == dh, "gru: head weight rows must equal hidden size");
    require(p.head_b.size() == p.head_w.cols(), "gru: head bias width mismatch");
    require(p.w_u.allFinite() && p.w_r.allFinite() && p.w_c.allFinite() && p.b_u.allFinite() &&
                p.b_r.allFinite() && p.b_c.allFinite() && p.head_w.allFinite() &&
                p.head_b.allFinite(),
            "gru: non-finite parameters");
}

struct GruStepCache {
    Mat x;       // n x d_in
    Mat h_prev;  // n x d_h
    Mat u, r, c; // gate activations
    Mat rh;      // r ⊙ h_prev
};

inline Mat gru_step(const Mat& x, const Mat& h_prev, const GruParams& params,
                    GruStepCache* cache = nullptr) {
    const int n = static_cast<int>(x.rows());
    require(x.cols() == params.d_in(), "gru_step: input width mismatch");
    require(h_prev.rows() == n && h_prev.cols() == params.d_h(),
            "gru_step: hidden state shape mismatch");

    Mat zu(n, x.cols() + h_prev.cols());
    zu << x, h_prev;
    Mat u = apply_activation(Mat(((zu * params.w_u).rowwise() + params.b_u.transpose())),
                             Activation::sigmoid);
    Mat r = apply_activation(Mat(((zu * params.w_r).rowwise() + params.b_r.transpose())),
                             Activation::sigmoid);
    Mat rh = (r.array() * h_prev.array()).matrix();
    Mat zc(n, x.cols() + h_prev.cols());
    zc << x, rh;
    Mat c = apply_activation(Mat(((zc * params.w_c).rowwise() + params.b_c.transpose())),
                             Activation::tanh);
    Mat h = (u.array() * h_prev.array() + (1.0 - u.array()) * c.array()).matrix();
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->u = u;
        cache->r = r;
        cache->c = c;
        cache->rh = rh;
    }
    return h;
}

struct GruInputGrad {
    Mat x;       // dL/dx at this step
    Mat h_prev;  // dL/dh_{t-1}
};

inline GruInputGrad gru_step_backward(const Mat& g_h, const GruStepCache& cache,
                                      const GruParams& params, GruGrad& grad) {
    const auto& u = cache.u;
    const auto& r = cache.r;
    const auto& c = cache.c;
    const auto& h_prev = cache.h_prev;
    const int d_in = static_cast<int>(cache.x.cols());
    const int d_h = static_cast<int>(h_prev.cols());

    Mat g_u = (g_h.array() * (h_prev.array() - c.array())).matrix();
    Mat g_c = (g_h.array() * (1.0 - u.array())).matrix();
    Mat g_hprev = (g_h.array() * u.array()).matrix();

    // candidate path
    Mat g_cpre = (g_c.array() * (1.0 - c.array().square())).matrix();
    Mat zc(cache.x.rows(), d_in + d_h);
    zc << cache.x, cache.rh;
    grad.w_c += zc.transpose() * g_cpre;
    grad.b_c += g_cpre.colwise().sum().transpose();
    Mat g_zc = g_cpre * params.w_c.transpose();
    Mat g_x = g_zc.leftCols(d_in);
    Mat g_rh = g_zc.rightCols(d_h);
    Mat g_r = (g_rh.array() * h_prev.array()).matrix();
    g_hprev += (g_rh.array() * r.array()).matrix();

    // update gate path
    Mat g_upre = (g_u.array() * u.array() * (1.0 - u.array())).matrix();
    Mat zu(cache.x.rows(), d_in + d_h);
    zu << cache.x, h_prev;
    grad.w_u += zu.transpose() * g_upre;
    grad.b_u += g_upre.colwise().sum().transpose();
    Mat g_zu = g_upre * params.w_u.transpose();
    g_x += g_zu.leftCols(d_in);
    g_hprev += g_zu.rightCols(d_h);

    // reset gate path
    Mat g_rpre = (g_r.array() * r.array() * (1.0 - r.array())).matrix();
    grad.w_r += zu.transpose() * g_rpre;
    grad.b_r += g_rpre.colwise().sum().transpose();
    Mat g_zr = g_rpre * params.w_r.transpose();
    g_x += g_zr.leftCols(d_in);
    g_hprev += g_zr.rightCols(d_h);

    return {std::move(g_x), std::move(g_hprev)};
}

// pred = h W + b, one row per node, one column per horizon step.
inline Mat head_forward(const Mat& h, const GruParams& params) {
    require(h.cols() == params.head_w.rows(), "head_forward: hidden width mismatch");
    return (h * params.head_w).rowwise() + params.head_b.transpose();
}

inline Mat head_backward(const Mat& g_pred, const Mat& h, const GruParams& params,
                         GruGrad& grad) {
    grad.head_w += h.transpose() * g_pred;
    grad.head_b += g_pred.colwise().sum().transpose();
    return g_pred * params.head_w.transpose();
}

}  // namespace kstgcn
