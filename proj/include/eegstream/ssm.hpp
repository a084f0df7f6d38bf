#pragma once

#include <cstdint>

#include "eegstream/rng.hpp"
#include "eegstream/tensor.hpp"

namespace eegstream {

enum class DiscretizationMode : uint8_t { Euler = 0, Trapezoidal = 1 };

struct SsmDims {
    size_t d_model = 0;
    size_t heads = 0;
    size_t d_state = 0;  // N, even
    size_t d_head = 0;   // P_h, d_model == heads * d_head
    size_t rank = 0;     // R

    size_t pairs() const { return d_state / 2; }
    size_t inner() const { return heads * rank * d_head; }  // flattened readout size
    void validate() const;
};

// Selective SSM block parameters. B, C and the gate are shared across heads
// (the per-head rotation phases make the effective B~, C~ head-specific);
// the rank-R input X is factored as a d_model x d_model projection whose
// per-head slice is lifted to R x P_h by a shared rank_lift matrix.
struct SsmBlockParams {
    SsmDims dims;
    Vec a_log;     // heads: log decay rate, decay a_t = exp(-delta * exp(a_log))
    Mat omega;     // heads x N/2: rotation rate per pair, angle = delta * omega
    Mat w_delta;   // heads x d_model
    Vec b_delta;   // heads
    Mat w_lambda;  // heads x d_model (trapezoidal blend)
    Vec b_lambda;  // heads
    Mat w_b;       // (N*R) x d_model -> B_t, N x R row-major
    Mat w_c;       // (N*R) x d_model -> C_t, N x R row-major
    Mat w_in;      // d_model x d_model, per-head slices of size P_h
    Mat w_xr;      // (R*P_h) x P_h -> X_t per head, R x P_h row-major
    Mat w_gate;    // (R*P_h) x d_model, silu gate broadcast across heads
    Mat w_out;     // d_model x (heads*R*P_h)

    static SsmBlockParams init(const SsmDims& dims, CounterRng& rng);
};

// Fixed-size recurrent memory. Layouts are flat row-major:
//   s, u_prev: head-major [heads][N][P_h]; theta: [heads][N/2] in [0, 2pi).
struct SsmBlockState {
    Vec s;
    Vec u_prev;
    Vec theta;
    uint64_t t = 0;

    explicit SsmBlockState(const SsmDims& dims)
        : s(dims.heads * dims.d_state * dims.d_head, 0.0),
          u_prev(dims.heads * dims.d_state * dims.d_head, 0.0),
          theta(dims.heads * dims.pairs(), 0.0) {}
    SsmBlockState() = default;

    void reset();
};

// a = exp(-delta * exp(a_log)), in (0, 1] for delta >= 0.
double discretize_decay(double delta, double a_log);

// Rotate consecutive pairs (v[2j], v[2j+1]) by theta[j] (counterclockwise).
Vec rotate_pairs(const Vec& v, const Vec& theta);

// One recurrent step. u is the block input (d_model); returns the block
// output (d_model) and advances state in place.
Vec ssm_step(const SsmBlockParams& p, SsmBlockState& state, const Vec& u,
             DiscretizationMode mode);

// Parallel form over a whole sequence: identical to folding ssm_step up to
// floating-point associativity. Deterministic for a fixed chunk size.
// u: T x d_model row-major; outputs T x d_model row-major.
struct SsmScanOptions {
    size_t chunk = 64;
};
void ssm_scan(const SsmBlockParams& p, SsmBlockState& state, const double* u, size_t t_len,
              DiscretizationMode mode, double* y_out, const SsmScanOptions& opt = {});

// Time-invariant convolutional kernel K[k] = (C . B) a^k (diagonal-A special
// case, test fixture for the recurrence<->convolution identity).
Vec lti_kernel_materialize(double a, const Vec& b, const Vec& c, size_t t_len);

}  // namespace eegstream
