#pragma once

#include <functional>

#include "eegstream/encoder.hpp"
#include "eegstream/synth.hpp"

namespace eegstream {

struct MaskSpec {
    std::vector<size_t> indices;  // sorted, unique, in [0, g_t)
    size_t block_len = 1;
    double ratio = 0.0;
};

// Union of non-overlapping contiguous blocks totaling round(ratio * g_t)
// token positions; reproducible for a fixed rng stream.
MaskSpec make_token_mask(size_t g_t, double ratio, size_t block_len, CounterRng& rng);

// Prediction heads used by the two objective labs. The decoder is a
// two-layer MLP back to raw patch samples; the rest are linear maps.
struct SslHeads {
    Mat g_w;        // d -> d, next-token head
    Vec g_b;
    Mat dec_w1;     // d -> hidden
    Vec dec_b1;
    Mat dec_w2;     // hidden -> C*P
    Vec dec_b2;
    Mat gmask_w;    // d -> d, masked latent predictor
    Vec gmask_b;
    Mat gfuture_w;  // d -> K*d, multi-step latent predictor
    Vec gfuture_b;
    size_t k_future = 4;

    static SslHeads init(const ModelConfig& cfg, size_t k_future, size_t dec_hidden,
                         CounterRng& rng);
    Vec flatten() const;
    void unflatten(const Vec& flat);
    size_t param_count() const;
};

// Next-token prediction: sum over t of smooth_l1(g(h_t), target_{t+1}).
// Targets are the clean token embeddings.
double arm_loss(const Mat& hiddens, const Mat& target_tokens, const SslHeads& heads);

// Decoder reconstruction, masked positions only; targets are raw patches.
double masked_recon_loss(const Mat& hiddens, const std::vector<Mat>& raw_patches,
                         const MaskSpec& mask, const SslHeads& heads);

double stage1_loss(const Mat& hiddens, const Mat& target_tokens,
                   const std::vector<Mat>& raw_patches, const MaskSpec& mask,
                   const SslHeads& heads, double lambda_arm = 0.5, double lambda_mask = 0.5);

// phi <- tau*phi + (1-tau)*theta, elementwise over flat parameter vectors.
void ema_update(Vec& teacher, const Vec& student, double tau);

// EMA teacher bookkeeping: a flat parameter copy plus the momentum ramp
// (tau_start -> tau_end over the first ramp_frac of training).
struct TeacherState {
    Vec phi;
    double tau_start = 0.99;
    double tau_end = 0.9999;
    double ramp_frac = 0.05;

    double tau_at(size_t step, size_t total_steps) const;
};

// Masked latent prediction against causal teacher targets.
double jepa_masked_loss(const Mat& student_hiddens, const Mat& teacher_hiddens,
                        const MaskSpec& mask, const SslHeads& heads);

// Multi-step latent prediction: sum over t <= G-K, k in 1..K.
double future_loss(const Mat& student_hiddens, const Mat& teacher_hiddens, size_t k_future,
                   const SslHeads& heads);

// Central finite differences, O(2 |params|) loss evaluations. Intended for
// micro models only (a few thousand scalars).
Vec numeric_grad(const std::function<double(const Vec&)>& loss_fn, const Vec& params,
                 double h = 1e-5);

struct ToyTrainConfig {
    ModelConfig model = ModelConfig::micro();
    size_t g_t = 12;
    size_t steps = 200;
    double lr = 0.05;
    double mask_ratio = 0.4;
    size_t mask_block_len = 2;
    size_t k_future = 3;
    double lambda_arm = 0.5;
    double lambda_mask = 0.5;
    size_t dec_hidden = 8;
    uint64_t seed = 42;
};

// Gradient-descent training of the micro model with numeric gradients.
// Stage 1: hybrid next-token + masked reconstruction. Stage 2: EMA-teacher
// latent prediction (masked + multi-step), teacher updated each step.
// Returns the per-step loss curve (steps + 1 values, initial loss first).
Vec toy_train(int stage, const ToyTrainConfig& cfg);

// Stage 2 teacher targets for a clean view: causal hiddens under the
// teacher parameter copy.
Mat teacher_targets(const EncoderParams& teacher_params, const Mat& clean_tokens);

}  // namespace eegstream
