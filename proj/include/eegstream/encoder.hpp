#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eegstream/ssm.hpp"

namespace eegstream {

struct ModelConfig {
    size_t d_model = 704;
    size_t n_blocks = 4;
    size_t d_state = 64;  // N
    size_t d_head = 64;   // P_h
    size_t heads = 11;
    size_t ffn_expansion = 4;
    size_t rank = 4;         // MIMO rank R
    size_t n_queries = 4;    // channel embedder queries
    size_t embed_heads = 4;  // channel embedder attention heads
    size_t patch_samples = 16;
    size_t pos_period = 80;
    size_t n_channels = 22;
    size_t n_classes = 2;
    DiscretizationMode mode = DiscretizationMode::Trapezoidal;
    size_t scan_chunk = 64;
    double rms_eps = 1e-6;

    void validate() const;
    SsmDims ssm_dims() const { return {d_model, heads, d_state, d_head, rank}; }
    size_t ffn_dim() const { return ffn_expansion * d_model; }
    size_t n_logits() const { return n_classes == 2 ? 1 : n_classes; }

    static ModelConfig paper();
    // Structurally identical to paper() (4 blocks, 11 heads, trapezoidal,
    // rank 4) but narrow enough for single-core test sweeps.
    static ModelConfig reduced();
    // Tiny model for numeric-gradient training; parameter count stays in the
    // low thousands.
    static ModelConfig micro();
};

struct EmbedParams {
    Mat w_k, w_v;                  // d_model x P: per-channel sample projections
    Vec b_k, b_v;                  // d_model
    Mat chan_embed_k, chan_embed_v;  // C x d_model, untied per-channel features
    Mat queries;                   // Q x d_model, learnable
    Mat w_e;                       // d_model x (Q*d_model) output projection
    Vec b_e;                       // d_model
};

struct BlockParams {
    Vec norm1_gain, norm2_gain;  // d_model
    SsmBlockParams ssm;
    Mat ffn_gate, ffn_up;  // 4d x d
    Mat ffn_down;          // d x 4d
};

struct EncoderParams {
    ModelConfig config;
    EmbedParams embed;
    Mat pos;  // pos_period x d_model, cyclic positional table
    std::vector<BlockParams> blocks;
    Mat head_w;  // n_logits x d_model
    Vec head_b;  // n_logits

    static EncoderParams init(const ModelConfig& cfg, uint64_t seed);

    size_t param_count() const;
    // name -> scalar count, for the reported breakdown
    std::vector<std::pair<std::string, size_t>> param_breakdown() const;
};

// Enumerate every parameter tensor with a stable name; serialization, EMA and
// flattening all build on this single registry.
struct TensorRef {
    std::string name;
    double* data;
    std::vector<size_t> shape;
    size_t numel;
};
void for_each_tensor(EncoderParams& p, const std::function<void(const TensorRef&)>& fn);
void for_each_tensor(const EncoderParams& p, const std::function<void(const TensorRef&)>& fn);

Vec flatten_params(const EncoderParams& p);
void unflatten_params(EncoderParams& p, const Vec& flat);

struct EncoderState {
    std::vector<SsmBlockState> block_states;
    uint64_t tau = 0;

    explicit EncoderState(const ModelConfig& cfg);
    EncoderState() = default;
    void reset();
};

// C x T multichannel window -> floor(T/P) patches of C x P; remainder dropped.
std::vector<Mat> patchify(const Mat& signal, size_t patch_samples);

// One C x P patch -> one d_model token (cross-attention channel embedder).
Vec embed_patch(const EncoderParams& p, const Mat& patch);

// Single streaming step through the full stack; advances state.
Vec encode_step(const EncoderParams& p, EncoderState& state, const Mat& patch);

// Parallel-mode encode of a patch sequence via the chunked scan; returns
// G_T x d_model hiddens and advances state exactly as folding encode_step.
Mat encode_sequence(const EncoderParams& p, EncoderState& state, const std::vector<Mat>& patches);

// Same, but from precomputed tokens (G_T x d_model); positions are added
// here. Token-level masking hooks in between embed_patch and this call.
Mat encode_token_sequence(const EncoderParams& p, EncoderState& state, const Mat& tokens);

// Raw classifier logits (length n_logits).
Vec classify_logits(const EncoderParams& p, const Vec& hidden);
// Probabilities: sigmoid for binary (length 1), softmax for multiclass.
Vec classify(const EncoderParams& p, const Vec& hidden);

}  // namespace eegstream
