#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace kstgcn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Rng = std::mt19937_64;

// Nonlinearity tags used by the graph convolution and fusion layers.
enum class Activation { identity, rectifier, sigmoid, tanh };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::rectifier: return "rectifier";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "rectifier" || s == "relu") return Activation::rectifier;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation tag: " + s);
}

inline double apply_activation(double x, Activation a) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::rectifier: return x > 0.0 ? x : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::tanh: return std::tanh(x);
    }
    return x;
}

inline Mat apply_activation(const Mat& x, Activation a) {
    if (a == Activation::identity) return x;
    return x.unaryExpr([a](double v) { return apply_activation(v, a); });
}

// Derivative expressed through the activated output y = act(x).
inline double activation_grad_from_output(double y, Activation a) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::rectifier: return y > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::tanh: return 1.0 - y * y;
    }
    return 1.0;
}

inline Mat activation_grad_from_output(const Mat& y, Activation a) {
    return y.unaryExpr([a](double v) { return activation_grad_from_output(v, a); });
}

// log(sum(exp(s_i))) with the usual max shift.
inline double log_sum_exp(const Vec& scores) {
    const double m = scores.maxCoeff();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) acc += std::exp(scores[i] - m);
    return m + std::log(acc);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace kstgcn
