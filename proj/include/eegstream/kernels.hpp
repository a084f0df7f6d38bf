#pragma once

#include "eegstream/tensor.hpp"

namespace eegstream {

double sigmoid(double x);
double silu(double x);
double softplus(double x);

// Numerically stable in-place softmax over n values.
void softmax_inplace(double* x, size_t n);

// out[i] = gain[i] * x[i] / sqrt(mean(x^2) + eps)
Vec rms_norm(const Vec& x, const Vec& gain, double eps);

// out = w_down * ( silu(w_gate * x) .* (w_up * x) )
// w_gate, w_up: 4d x d, w_down: d x 4d (stored out_dim x in_dim).
Vec swiglu_ffn(const Vec& x, const Mat& w_gate, const Mat& w_up, const Mat& w_down);

// Huber-style loss, mean over elements. e = pred - target;
// 0.5 e^2 / beta where |e| < beta, else |e| - 0.5 beta.
double smooth_l1(const Vec& pred, const Vec& target, double beta);

// Multi-head scaled dot-product attention without internal projections.
// queries: Q x d, keys/values: M x d (row-major), d divisible by heads.
// Returns Q x d.
Mat cross_attention(const Mat& queries, const Mat& keys, const Mat& values, size_t heads);

}  // namespace eegstream
