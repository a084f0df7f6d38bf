#include "eegstream/ssl.hpp"

#include <algorithm>
#include <cmath>

#include "eegstream/kernels.hpp"
#include "eegstream/preprocess.hpp"

namespace eegstream {

namespace {

void init_mat(Mat& m, CounterRng& rng) {
    const double bound = std::sqrt(3.0 / static_cast<double>(m.cols));
    for (double& v : m.a) v = rng.uniform(-bound, bound);
}

Vec head_apply(const Mat& w, const Vec& b, const double* x) {
    Vec y(w.rows);
    matvec(w, x, y.data());
    for (size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

Vec decoder_apply(const SslHeads& h, const double* hidden) {
    Vec mid(h.dec_w1.rows);
    matvec(h.dec_w1, hidden, mid.data());
    for (size_t i = 0; i < mid.size(); ++i) mid[i] = silu(mid[i] + h.dec_b1[i]);
    Vec out(h.dec_w2.rows);
    matvec(h.dec_w2, mid.data(), out.data());
    for (size_t i = 0; i < out.size(); ++i) out[i] += h.dec_b2[i];
    return out;
}

Mat embed_all(const EncoderParams& p, const std::vector<Mat>& patches) {
    Mat tokens(patches.size(), p.config.d_model);
    for (size_t t = 0; t < patches.size(); ++t) {
        Vec tok = embed_patch(p, patches[t]);
        std::copy(tok.begin(), tok.end(), tokens.row(t));
    }
    return tokens;
}

}  // namespace

MaskSpec make_token_mask(size_t g_t, double ratio, size_t block_len, CounterRng& rng) {
    check(ratio > 0.0 && ratio < 1.0, "make_token_mask: ratio must be in (0,1)");
    check(block_len >= 1, "make_token_mask: block_len must be >= 1");
    const size_t target = static_cast<size_t>(std::llround(ratio * static_cast<double>(g_t)));
    check(target >= 1, "make_token_mask: ratio * g_t rounds below one token");

    std::vector<bool> used(g_t, false);
    MaskSpec spec;
    spec.block_len = block_len;
    spec.ratio = ratio;
    size_t remaining = target;
    while (remaining > 0) {
        size_t len = std::min(block_len, remaining);
        std::vector<size_t> starts;
        for (; len >= 1; --len) {
            for (size_t s = 0; s + len <= g_t; ++s) {
                bool free = true;
                for (size_t k = 0; k < len && free; ++k) free = !used[s + k];
                if (free) starts.push_back(s);
            }
            if (!starts.empty()) break;
        }
        check(!starts.empty(), "make_token_mask: no room left for mask blocks");
        const size_t s = starts[rng.next_below(starts.size())];
        for (size_t k = 0; k < len; ++k) {
            used[s + k] = true;
            spec.indices.push_back(s + k);
        }
        remaining -= len;
    }
    std::sort(spec.indices.begin(), spec.indices.end());
    return spec;
}

SslHeads SslHeads::init(const ModelConfig& cfg, size_t k_future, size_t dec_hidden,
                        CounterRng& rng) {
    SslHeads h;
    h.k_future = k_future;
    const size_t d = cfg.d_model;
    h.g_w = Mat(d, d);
    h.g_b.assign(d, 0.0);
    h.dec_w1 = Mat(dec_hidden, d);
    h.dec_b1.assign(dec_hidden, 0.0);
    h.dec_w2 = Mat(cfg.n_channels * cfg.patch_samples, dec_hidden);
    h.dec_b2.assign(cfg.n_channels * cfg.patch_samples, 0.0);
    h.gmask_w = Mat(d, d);
    h.gmask_b.assign(d, 0.0);
    h.gfuture_w = Mat(k_future * d, d);
    h.gfuture_b.assign(k_future * d, 0.0);
    for (Mat* m : {&h.g_w, &h.dec_w1, &h.dec_w2, &h.gmask_w, &h.gfuture_w}) init_mat(*m, rng);
    return h;
}

Vec SslHeads::flatten() const {
    Vec flat;
    for (const Vec* v : {&g_w.a, &g_b, &dec_w1.a, &dec_b1, &dec_w2.a, &dec_b2, &gmask_w.a,
                         &gmask_b, &gfuture_w.a, &gfuture_b})
        flat.insert(flat.end(), v->begin(), v->end());
    return flat;
}

void SslHeads::unflatten(const Vec& flat) {
    size_t off = 0;
    for (Vec* v : {&g_w.a, &g_b, &dec_w1.a, &dec_b1, &dec_w2.a, &dec_b2, &gmask_w.a, &gmask_b,
                   &gfuture_w.a, &gfuture_b}) {
        check(off + v->size() <= flat.size(), "SslHeads::unflatten: flat vector too short");
        std::copy(flat.begin() + static_cast<long>(off),
                  flat.begin() + static_cast<long>(off + v->size()), v->begin());
        off += v->size();
    }
    check(off == flat.size(), "SslHeads::unflatten: size mismatch");
}

size_t SslHeads::param_count() const { return flatten().size(); }

double arm_loss(const Mat& hiddens, const Mat& target_tokens, const SslHeads& heads) {
    check(hiddens.rows >= 2, "arm_loss: need at least two tokens");
    check(hiddens.rows == target_tokens.rows && hiddens.cols == target_tokens.cols,
          "arm_loss: hidden/target shape mismatch");
    double loss = 0.0;
    for (size_t t = 0; t + 1 < hiddens.rows; ++t) {
        Vec pred = head_apply(heads.g_w, heads.g_b, hiddens.row(t));
        Vec target(target_tokens.row(t + 1), target_tokens.row(t + 1) + target_tokens.cols);
        loss += smooth_l1(pred, target, 1.0);
    }
    return loss;
}

double masked_recon_loss(const Mat& hiddens, const std::vector<Mat>& raw_patches,
                         const MaskSpec& mask, const SslHeads& heads) {
    check(!mask.indices.empty(), "masked_recon_loss: empty mask");
    check(hiddens.rows == raw_patches.size(), "masked_recon_loss: hidden/patch count mismatch");
    double loss = 0.0;
    for (size_t idx : mask.indices) {
        check(idx < hiddens.rows, "masked_recon_loss: mask index out of range");
        Vec recon = decoder_apply(heads, hiddens.row(idx));
        loss += smooth_l1(recon, raw_patches[idx].a, 1.0);
    }
    return loss;
}

double stage1_loss(const Mat& hiddens, const Mat& target_tokens,
                   const std::vector<Mat>& raw_patches, const MaskSpec& mask,
                   const SslHeads& heads, double lambda_arm, double lambda_mask) {
    return lambda_arm * arm_loss(hiddens, target_tokens, heads) +
           lambda_mask * masked_recon_loss(hiddens, raw_patches, mask, heads);
}

void ema_update(Vec& teacher, const Vec& student, double tau) {
    check(teacher.size() == student.size(), "ema_update: shape mismatch");
    check(tau >= 0.0 && tau < 1.0, "ema_update: tau must be in [0,1)");
    for (size_t i = 0; i < teacher.size(); ++i)
        teacher[i] = tau * teacher[i] + (1.0 - tau) * student[i];
}

double TeacherState::tau_at(size_t step, size_t total_steps) const {
    const double ramp_steps =
        std::max(1.0, ramp_frac * static_cast<double>(total_steps));
    const double u = std::min(1.0, static_cast<double>(step) / ramp_steps);
    return tau_start + (tau_end - tau_start) * u;
}

double jepa_masked_loss(const Mat& student_hiddens, const Mat& teacher_hiddens,
                        const MaskSpec& mask, const SslHeads& heads) {
    check(!mask.indices.empty(), "jepa_masked_loss: empty mask");
    check(student_hiddens.rows == teacher_hiddens.rows &&
              student_hiddens.cols == teacher_hiddens.cols,
          "jepa_masked_loss: student/teacher shape mismatch");
    double loss = 0.0;
    for (size_t idx : mask.indices) {
        check(idx < student_hiddens.rows, "jepa_masked_loss: mask index out of range");
        Vec pred = head_apply(heads.gmask_w, heads.gmask_b, student_hiddens.row(idx));
        Vec target(teacher_hiddens.row(idx), teacher_hiddens.row(idx) + teacher_hiddens.cols);
        loss += smooth_l1(pred, target, 1.0);
    }
    return loss;
}

double future_loss(const Mat& student_hiddens, const Mat& teacher_hiddens, size_t k_future,
                   const SslHeads& heads) {
    const size_t g = student_hiddens.rows;
    check(g > k_future, "future_loss: sequence must be longer than the horizon");
    check(heads.gfuture_w.rows == k_future * student_hiddens.cols,
          "future_loss: horizon/head shape mismatch");
    const size_t d = student_hiddens.cols;
    double loss = 0.0;
    for (size_t t = 0; t + k_future < g; ++t) {
        Vec pred = head_apply(heads.gfuture_w, heads.gfuture_b, student_hiddens.row(t));
        for (size_t k = 1; k <= k_future; ++k) {
            Vec pk(pred.begin() + static_cast<long>((k - 1) * d),
                   pred.begin() + static_cast<long>(k * d));
            Vec target(teacher_hiddens.row(t + k), teacher_hiddens.row(t + k) + d);
            loss += smooth_l1(pk, target, 1.0);
        }
    }
    return loss;
}

Vec numeric_grad(const std::function<double(const Vec&)>& loss_fn, const Vec& params, double h) {
    check(h > 0.0, "numeric_grad: step must be > 0");
    Vec work = params;
    Vec grad(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        const double saved = work[i];
        work[i] = saved + h;
        const double fp = loss_fn(work);
        work[i] = saved - h;
        const double fm = loss_fn(work);
        work[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw numeric_error("numeric_grad: non-finite loss");
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

Mat teacher_targets(const EncoderParams& teacher_params, const Mat& clean_tokens) {
    EncoderState state(teacher_params.config);
    return encode_token_sequence(teacher_params, state, clean_tokens);
}

Vec toy_train(int stage, const ToyTrainConfig& cfg) {
    check(stage == 1 || stage == 2, "toy_train: stage must be 1 or 2");
    const ModelConfig& mc = cfg.model;
    mc.validate();

    // Synthetic training window, RQN-normalized then patchified.
    SynthSpec spec;
    spec.n_channels = mc.n_channels;
    spec.duration_s =
        static_cast<double>(cfg.g_t * mc.patch_samples + 4) / spec.fs;
    spec.blink_per_min = 0.0;
    spec.muscle_per_min = 0.0;
    spec.pop_per_min = 0.0;
    spec.seed = cfg.seed;
    Recording rec = gen_recording(spec);
    Mat normalized = rqn_window(rec.samples);
    std::vector<Mat> patches = patchify(normalized, mc.patch_samples);
    patches.resize(cfg.g_t);

    EncoderParams params = EncoderParams::init(mc, cfg.seed);
    CounterRng head_rng = CounterRng(cfg.seed).fork(7);
    SslHeads heads = SslHeads::init(mc, cfg.k_future, cfg.dec_hidden, head_rng);

    const Vec enc0 = flatten_params(params);
    const size_t enc_n = enc0.size();

    // Stage-specific trainable pack: encoder + the heads that stage uses.
    auto heads_pack = [&](const SslHeads& h) {
        Vec flat;
        if (stage == 1) {
            for (const Vec* v : {&h.g_w.a, &h.g_b, &h.dec_w1.a, &h.dec_b1, &h.dec_w2.a, &h.dec_b2})
                flat.insert(flat.end(), v->begin(), v->end());
        } else {
            for (const Vec* v : {&h.gmask_w.a, &h.gmask_b, &h.gfuture_w.a, &h.gfuture_b})
                flat.insert(flat.end(), v->begin(), v->end());
        }
        return flat;
    };
    auto heads_unpack = [&](SslHeads& h, const Vec& flat, size_t off) {
        std::vector<Vec*> vs;
        if (stage == 1)
            vs = {&h.g_w.a, &h.g_b, &h.dec_w1.a, &h.dec_b1, &h.dec_w2.a, &h.dec_b2};
        else
            vs = {&h.gmask_w.a, &h.gmask_b, &h.gfuture_w.a, &h.gfuture_b};
        for (Vec* v : vs) {
            std::copy(flat.begin() + static_cast<long>(off),
                      flat.begin() + static_cast<long>(off + v->size()), v->begin());
            off += v->size();
        }
        check(off == flat.size(), "toy_train: pack size mismatch");
    };

    Vec flat = enc0;
    {
        Vec hp = heads_pack(heads);
        flat.insert(flat.end(), hp.begin(), hp.end());
    }

    // Stable destination pointers for the hot unflatten path; params and
    // heads outlive every loss evaluation.
    std::vector<std::pair<double*, size_t>> enc_layout;
    for_each_tensor(params, [&](const TensorRef& t) { enc_layout.emplace_back(t.data, t.numel); });
    auto fast_unflatten_encoder = [&](const Vec& theta) {
        size_t off = 0;
        for (auto& [ptr, n] : enc_layout) {
            std::copy(theta.begin() + static_cast<long>(off),
                      theta.begin() + static_cast<long>(off + n), ptr);
            off += n;
        }
    };

    // One mask for the whole run: the loss curve then measures optimization
    // progress rather than mask resampling noise.
    CounterRng mask_rng = CounterRng(cfg.seed).fork(11);
    MaskSpec mask = make_token_mask(cfg.g_t, cfg.mask_ratio, cfg.mask_block_len, mask_rng);

    TeacherState teacher;
    teacher.phi = enc0;
    EncoderParams teacher_params = params;
    Mat targets;  // stage 2 teacher targets, refreshed per step

    auto refresh_targets = [&]() {
        unflatten_params(teacher_params, teacher.phi);
        Mat clean = embed_all(teacher_params, patches);
        targets = teacher_targets(teacher_params, clean);
    };

    auto loss_fn = [&](const Vec& theta) -> double {
        fast_unflatten_encoder(theta);
        heads_unpack(heads, theta, enc_n);
        Mat tokens = embed_all(params, patches);
        Mat masked = tokens;
        for (size_t idx : mask.indices)
            std::fill(masked.row(idx), masked.row(idx) + masked.cols, 0.0);
        EncoderState state(mc);
        Mat hiddens = encode_token_sequence(params, state, masked);
        if (stage == 1)
            return stage1_loss(hiddens, tokens, patches, mask, heads, cfg.lambda_arm,
                               cfg.lambda_mask);
        return jepa_masked_loss(hiddens, targets, mask, heads) +
               future_loss(hiddens, targets, cfg.k_future, heads);
    };

    if (stage == 2) refresh_targets();
    Vec curve;
    curve.reserve(cfg.steps + 1);
    curve.push_back(loss_fn(flat));
    if (!std::isfinite(curve.back())) throw training_error("toy_train: non-finite initial loss");

    for (size_t step = 0; step < cfg.steps; ++step) {
        Vec grad = numeric_grad(loss_fn, flat);
        double norm = 0.0;
        for (double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        const double clip = 10.0;
        const double scale = (norm > clip) ? clip / norm : 1.0;
        for (size_t i = 0; i < flat.size(); ++i) flat[i] -= cfg.lr * scale * grad[i];

        if (stage == 2) {
            const Vec student_enc(flat.begin(), flat.begin() + static_cast<long>(enc_n));
            ema_update(teacher.phi, student_enc, teacher.tau_at(step, cfg.steps));
            refresh_targets();
        }
        curve.push_back(loss_fn(flat));
        if (!std::isfinite(curve.back())) throw training_error("toy_train: loss diverged");
    }
    return curve;
}

}  // namespace eegstream
