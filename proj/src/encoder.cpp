#include "eegstream/encoder.hpp"

#include <cmath>

#include "eegstream/kernels.hpp"

namespace eegstream {

namespace {

void init_mat(Mat& m, CounterRng& rng) {
    const double bound = std::sqrt(3.0 / static_cast<double>(m.cols));
    for (double& v : m.a) v = rng.uniform(-bound, bound);
}

}  // namespace

void ModelConfig::validate() const {
    check(d_model == heads * d_head, "config: d_model must equal heads * d_head");
    check(d_state % 2 == 0, "config: d_state must be even");
    check(d_model % embed_heads == 0, "config: d_model must be divisible by embed_heads");
    check(n_blocks >= 1 && n_channels >= 1 && patch_samples >= 1 && pos_period >= 1,
          "config: sizes must be positive");
    check(n_classes >= 2, "config: need at least two classes");
    check(rank >= 1, "config: rank must be >= 1");
    check(rms_eps > 0.0, "config: rms_eps must be > 0");
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::reduced() {
    ModelConfig c;
    c.d_model = 176;
    c.d_head = 16;
    c.heads = 11;
    c.d_state = 64;
    c.n_blocks = 4;
    c.rank = 4;
    c.n_channels = 22;
    return c;
}

ModelConfig ModelConfig::micro() {
    ModelConfig c;
    c.d_model = 8;
    c.n_blocks = 1;
    c.d_state = 4;
    c.d_head = 4;
    c.heads = 2;
    c.rank = 1;
    c.n_queries = 2;
    c.embed_heads = 2;
    c.patch_samples = 8;
    c.pos_period = 12;
    c.n_channels = 2;
    return c;
}

EncoderParams EncoderParams::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    CounterRng rng(splitmix64(seed ^ 0x45474d4f44454cull));  // model stream
    EncoderParams p;
    p.config = cfg;

    p.embed.w_k = Mat(cfg.d_model, cfg.patch_samples);
    p.embed.w_v = Mat(cfg.d_model, cfg.patch_samples);
    p.embed.b_k.assign(cfg.d_model, 0.0);
    p.embed.b_v.assign(cfg.d_model, 0.0);
    p.embed.chan_embed_k = Mat(cfg.n_channels, cfg.d_model);
    p.embed.chan_embed_v = Mat(cfg.n_channels, cfg.d_model);
    p.embed.queries = Mat(cfg.n_queries, cfg.d_model);
    p.embed.w_e = Mat(cfg.d_model, cfg.n_queries * cfg.d_model);
    p.embed.b_e.assign(cfg.d_model, 0.0);
    init_mat(p.embed.w_k, rng);
    init_mat(p.embed.w_v, rng);
    init_mat(p.embed.chan_embed_k, rng);
    init_mat(p.embed.chan_embed_v, rng);
    init_mat(p.embed.queries, rng);
    init_mat(p.embed.w_e, rng);

    p.pos = Mat(cfg.pos_period, cfg.d_model);
    init_mat(p.pos, rng);

    p.blocks.resize(cfg.n_blocks);
    for (auto& b : p.blocks) {
        b.norm1_gain.assign(cfg.d_model, 1.0);
        b.norm2_gain.assign(cfg.d_model, 1.0);
        b.ssm = SsmBlockParams::init(cfg.ssm_dims(), rng);
        b.ffn_gate = Mat(cfg.ffn_dim(), cfg.d_model);
        b.ffn_up = Mat(cfg.ffn_dim(), cfg.d_model);
        b.ffn_down = Mat(cfg.d_model, cfg.ffn_dim());
        init_mat(b.ffn_gate, rng);
        init_mat(b.ffn_up, rng);
        init_mat(b.ffn_down, rng);
    }

    p.head_w = Mat(cfg.n_logits(), cfg.d_model);
    p.head_b.assign(cfg.n_logits(), 0.0);
    init_mat(p.head_w, rng);
    return p;
}

void for_each_tensor(EncoderParams& p, const std::function<void(const TensorRef&)>& fn) {
    auto emit = [&](const std::string& name, Vec& v, std::vector<size_t> shape) {
        fn(TensorRef{name, v.data(), std::move(shape), v.size()});
    };
    auto emit_mat = [&](const std::string& name, Mat& m) {
        fn(TensorRef{name, m.a.data(), {m.rows, m.cols}, m.a.size()});
    };
    emit_mat("embed.w_k", p.embed.w_k);
    emit_mat("embed.w_v", p.embed.w_v);
    emit("embed.b_k", p.embed.b_k, {p.embed.b_k.size()});
    emit("embed.b_v", p.embed.b_v, {p.embed.b_v.size()});
    emit_mat("embed.chan_embed_k", p.embed.chan_embed_k);
    emit_mat("embed.chan_embed_v", p.embed.chan_embed_v);
    emit_mat("embed.queries", p.embed.queries);
    emit_mat("embed.w_e", p.embed.w_e);
    emit("embed.b_e", p.embed.b_e, {p.embed.b_e.size()});
    emit_mat("pos", p.pos);
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        const std::string b = "blocks." + std::to_string(i) + ".";
        auto& blk = p.blocks[i];
        emit(b + "norm1_gain", blk.norm1_gain, {blk.norm1_gain.size()});
        emit(b + "norm2_gain", blk.norm2_gain, {blk.norm2_gain.size()});
        emit(b + "ssm.a_log", blk.ssm.a_log, {blk.ssm.a_log.size()});
        emit_mat(b + "ssm.omega", blk.ssm.omega);
        emit_mat(b + "ssm.w_delta", blk.ssm.w_delta);
        emit(b + "ssm.b_delta", blk.ssm.b_delta, {blk.ssm.b_delta.size()});
        emit_mat(b + "ssm.w_lambda", blk.ssm.w_lambda);
        emit(b + "ssm.b_lambda", blk.ssm.b_lambda, {blk.ssm.b_lambda.size()});
        emit_mat(b + "ssm.w_b", blk.ssm.w_b);
        emit_mat(b + "ssm.w_c", blk.ssm.w_c);
        emit_mat(b + "ssm.w_in", blk.ssm.w_in);
        emit_mat(b + "ssm.w_xr", blk.ssm.w_xr);
        emit_mat(b + "ssm.w_gate", blk.ssm.w_gate);
        emit_mat(b + "ssm.w_out", blk.ssm.w_out);
        emit_mat(b + "ffn_gate", blk.ffn_gate);
        emit_mat(b + "ffn_up", blk.ffn_up);
        emit_mat(b + "ffn_down", blk.ffn_down);
    }
    emit_mat("head_w", p.head_w);
    emit("head_b", p.head_b, {p.head_b.size()});
}

void for_each_tensor(const EncoderParams& p, const std::function<void(const TensorRef&)>& fn) {
    for_each_tensor(const_cast<EncoderParams&>(p), fn);
}

size_t EncoderParams::param_count() const {
    size_t n = 0;
    for_each_tensor(*this, [&](const TensorRef& t) { n += t.numel; });
    return n;
}

std::vector<std::pair<std::string, size_t>> EncoderParams::param_breakdown() const {
    size_t embed_n = 0, pos_n = 0, ssm_n = 0, ffn_n = 0, norm_n = 0, head_n = 0;
    for_each_tensor(*this, [&](const TensorRef& t) {
        if (t.name.rfind("embed.", 0) == 0)
            embed_n += t.numel;
        else if (t.name == "pos")
            pos_n += t.numel;
        else if (t.name.find(".ssm.") != std::string::npos)
            ssm_n += t.numel;
        else if (t.name.find("ffn") != std::string::npos)
            ffn_n += t.numel;
        else if (t.name.find("norm") != std::string::npos)
            norm_n += t.numel;
        else
            head_n += t.numel;
    });
    return {{"channel_embedder", embed_n}, {"positional", pos_n},   {"ssm_blocks", ssm_n},
            {"ffn_blocks", ffn_n},         {"rms_norms", norm_n},   {"classifier_head", head_n}};
}

Vec flatten_params(const EncoderParams& p) {
    Vec flat;
    flat.reserve(p.param_count());
    for_each_tensor(p, [&](const TensorRef& t) {
        flat.insert(flat.end(), t.data, t.data + t.numel);
    });
    return flat;
}

void unflatten_params(EncoderParams& p, const Vec& flat) {
    size_t off = 0;
    for_each_tensor(p, [&](const TensorRef& t) {
        check(off + t.numel <= flat.size(), "unflatten_params: flat vector too short");
        for (size_t i = 0; i < t.numel; ++i) t.data[i] = flat[off + i];
        off += t.numel;
    });
    check(off == flat.size(), "unflatten_params: flat vector size mismatch");
}

EncoderState::EncoderState(const ModelConfig& cfg) {
    block_states.reserve(cfg.n_blocks);
    for (size_t i = 0; i < cfg.n_blocks; ++i) block_states.emplace_back(cfg.ssm_dims());
}

void EncoderState::reset() {
    for (auto& s : block_states) s.reset();
    tau = 0;
}

std::vector<Mat> patchify(const Mat& signal, size_t patch_samples) {
    check(patch_samples >= 1, "patchify: patch_samples must be >= 1");
    check(signal.cols >= patch_samples, "patchify: signal shorter than one patch");
    const size_t g = signal.cols / patch_samples;
    std::vector<Mat> patches;
    patches.reserve(g);
    for (size_t i = 0; i < g; ++i) {
        Mat p(signal.rows, patch_samples);
        for (size_t c = 0; c < signal.rows; ++c)
            for (size_t k = 0; k < patch_samples; ++k)
                p.at(c, k) = signal.at(c, i * patch_samples + k);
        patches.push_back(std::move(p));
    }
    return patches;
}

Vec embed_patch(const EncoderParams& p, const Mat& patch) {
    const ModelConfig& cfg = p.config;
    check(patch.rows == cfg.n_channels && patch.cols == cfg.patch_samples,
          "embed_patch: patch shape mismatch");
    const size_t d = cfg.d_model;
    Mat keys(cfg.n_channels, d), values(cfg.n_channels, d);
    for (size_t c = 0; c < cfg.n_channels; ++c) {
        matvec(p.embed.w_k, patch.row(c), keys.row(c));
        matvec(p.embed.w_v, patch.row(c), values.row(c));
        const double* ek = p.embed.chan_embed_k.row(c);
        const double* ev = p.embed.chan_embed_v.row(c);
        for (size_t i = 0; i < d; ++i) {
            keys.at(c, i) += p.embed.b_k[i] + ek[i];
            values.at(c, i) += p.embed.b_v[i] + ev[i];
        }
    }
    Mat att = cross_attention(p.embed.queries, keys, values, cfg.embed_heads);
    // att rows are contiguous: Q x d == concat of the Q query outputs
    Vec token(d);
    matvec(p.embed.w_e, att.a.data(), token.data());
    for (size_t i = 0; i < d; ++i) token[i] += p.embed.b_e[i];
    return token;
}

Vec encode_step(const EncoderParams& p, EncoderState& state, const Mat& patch) {
    const ModelConfig& cfg = p.config;
    check(state.block_states.size() == cfg.n_blocks, "encode_step: state mismatch");
    Vec z = embed_patch(p, patch);
    const double* pe = p.pos.row(state.tau % cfg.pos_period);
    for (size_t i = 0; i < cfg.d_model; ++i) z[i] += pe[i];
    for (size_t b = 0; b < cfg.n_blocks; ++b) {
        const BlockParams& blk = p.blocks[b];
        Vec y = ssm_step(blk.ssm, state.block_states[b],
                         rms_norm(z, blk.norm1_gain, cfg.rms_eps), cfg.mode);
        for (size_t i = 0; i < cfg.d_model; ++i) z[i] += y[i];
        Vec f = swiglu_ffn(rms_norm(z, blk.norm2_gain, cfg.rms_eps), blk.ffn_gate, blk.ffn_up,
                           blk.ffn_down);
        for (size_t i = 0; i < cfg.d_model; ++i) z[i] += f[i];
    }
    state.tau += 1;
    return z;
}

Mat encode_sequence(const EncoderParams& p, EncoderState& state,
                    const std::vector<Mat>& patches) {
    check(!patches.empty(), "encode_sequence: empty patch sequence");
    Mat tokens(patches.size(), p.config.d_model);
    for (size_t t = 0; t < patches.size(); ++t) {
        Vec tok = embed_patch(p, patches[t]);
        std::copy(tok.begin(), tok.end(), tokens.row(t));
    }
    return encode_token_sequence(p, state, tokens);
}

Mat encode_token_sequence(const EncoderParams& p, EncoderState& state, const Mat& tokens) {
    const ModelConfig& cfg = p.config;
    check(tokens.rows >= 1, "encode_token_sequence: empty token sequence");
    check(tokens.cols == cfg.d_model, "encode_token_sequence: token dim mismatch");
    const size_t g = tokens.rows;
    const size_t d = cfg.d_model;

    Mat z(g, d);
    for (size_t t = 0; t < g; ++t) {
        const double* pe = p.pos.row((state.tau + t) % cfg.pos_period);
        for (size_t i = 0; i < d; ++i) z.at(t, i) = tokens.at(t, i) + pe[i];
    }

    Mat normed(g, d), y(g, d);
    SsmScanOptions opt{cfg.scan_chunk};
    for (size_t b = 0; b < cfg.n_blocks; ++b) {
        const BlockParams& blk = p.blocks[b];
        for (size_t t = 0; t < g; ++t) {
            Vec zn(z.row(t), z.row(t) + d);
            Vec n = rms_norm(zn, blk.norm1_gain, cfg.rms_eps);
            for (size_t i = 0; i < d; ++i) normed.at(t, i) = n[i];
        }
        ssm_scan(blk.ssm, state.block_states[b], normed.a.data(), g, cfg.mode, y.a.data(), opt);
        for (size_t t = 0; t < g; ++t)
            for (size_t i = 0; i < d; ++i) z.at(t, i) += y.at(t, i);
        for (size_t t = 0; t < g; ++t) {
            Vec zn(z.row(t), z.row(t) + d);
            Vec f = swiglu_ffn(rms_norm(zn, blk.norm2_gain, cfg.rms_eps), blk.ffn_gate,
                               blk.ffn_up, blk.ffn_down);
            for (size_t i = 0; i < d; ++i) z.at(t, i) += f[i];
        }
    }
    state.tau += g;
    return z;
}

Vec classify_logits(const EncoderParams& p, const Vec& hidden) {
    check(hidden.size() == p.config.d_model, "classify: hidden dim mismatch");
    Vec logits = matvec(p.head_w, hidden);
    for (size_t i = 0; i < logits.size(); ++i) logits[i] += p.head_b[i];
    return logits;
}

Vec classify(const EncoderParams& p, const Vec& hidden) {
    Vec logits = classify_logits(p, hidden);
    if (p.config.n_classes == 2) return {sigmoid(logits[0])};
    softmax_inplace(logits.data(), logits.size());
    return logits;
}

}  // namespace eegstream
