#include "eegstream/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace eegstream {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double silu(double x) { return x * sigmoid(x); }

double softplus(double x) {
    // log(1 + e^x) without overflow on either tail
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

void softmax_inplace(double* x, size_t n) {
    double m = x[0];
    for (size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - m);
        s += x[i];
    }
    for (size_t i = 0; i < n; ++i) x[i] /= s;
}

Vec rms_norm(const Vec& x, const Vec& gain, double eps) {
    check(x.size() == gain.size(), "rms_norm: x/gain length mismatch");
    check(!x.empty(), "rms_norm: empty input");
    check(eps >= 0.0, "rms_norm: eps must be >= 0");
    double ms = 0.0;
    for (double v : x) ms += v * v;
    ms /= static_cast<double>(x.size());
    const double inv = 1.0 / std::sqrt(ms + eps);
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = gain[i] * x[i] * inv;
    return out;
}

Vec swiglu_ffn(const Vec& x, const Mat& w_gate, const Mat& w_up, const Mat& w_down) {
    check(w_gate.cols == x.size() && w_up.cols == x.size(), "swiglu_ffn: input dim mismatch");
    check(w_gate.rows == w_up.rows && w_down.cols == w_gate.rows && w_down.rows == x.size(),
          "swiglu_ffn: weight shapes inconsistent");
    Vec g = matvec(w_gate, x);
    Vec u = matvec(w_up, x);
    for (size_t i = 0; i < g.size(); ++i) g[i] = silu(g[i]) * u[i];
    return matvec(w_down, g);
}

double smooth_l1(const Vec& pred, const Vec& target, double beta) {
    check(pred.size() == target.size(), "smooth_l1: shape mismatch");
    check(beta > 0.0, "smooth_l1: beta must be > 0");
    check(!pred.empty(), "smooth_l1: empty input");
    double s = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double e = std::abs(pred[i] - target[i]);
        s += (e < beta) ? 0.5 * e * e / beta : e - 0.5 * beta;
    }
    return s / static_cast<double>(pred.size());
}

Mat cross_attention(const Mat& queries, const Mat& keys, const Mat& values, size_t heads) {
    const size_t d = queries.cols;
    check(heads >= 1 && d % heads == 0, "cross_attention: d must be divisible by heads");
    check(keys.cols == d && values.cols == d, "cross_attention: key/value dim mismatch");
    check(keys.rows == values.rows && keys.rows >= 1, "cross_attention: key/value count mismatch");
    const size_t dh = d / heads;
    const size_t m = keys.rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat out(queries.rows, d);
    Vec scores(m);
    for (size_t q = 0; q < queries.rows; ++q) {
        for (size_t h = 0; h < heads; ++h) {
            const size_t off = h * dh;
            for (size_t j = 0; j < m; ++j)
                scores[j] = scale * dot(queries.row(q) + off, keys.row(j) + off, dh);
            softmax_inplace(scores.data(), m);
            double* o = out.row(q) + off;
            for (size_t j = 0; j < m; ++j) {
                const double wj = scores[j];
                const double* v = values.row(j) + off;
                for (size_t k = 0; k < dh; ++k) o[k] += wj * v[k];
            }
        }
    }
    return out;
}

}  // namespace eegstream
