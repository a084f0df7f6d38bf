#include "eegstream/stream.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "eegstream/kernels.hpp"
#include "eegstream/rng.hpp"

namespace eegstream {

namespace {

double block_state_norm(const SsmBlockState& s) {
    double acc = 0.0;
    for (double v : s.s) acc += v * v;
    return std::sqrt(acc);
}

Mat random_patch(CounterRng& rng, size_t channels, size_t samples) {
    Mat p(channels, samples);
    for (double& v : p.a) v = rng.normal();
    return p;
}

}  // namespace

StreamSession::StreamSession(const EncoderParams& params, const SessionOptions& opts)
    : params_(params), opts_(opts), enc_state_(params.config),
      rqn_(params.config.n_channels, opts.rqn_window) {
    check(opts.fs > 0.0, "session: fs must be > 0");
    if (opts_.mode == StreamMode::windowed) {
        check(opts_.reset_period_s > 0.0, "session: reset period must be > 0");
        patches_per_reset_ = static_cast<size_t>(
            std::llround(opts_.reset_period_s * opts_.fs / static_cast<double>(params.config.patch_samples)));
        check(patches_per_reset_ >= 1, "session: reset period shorter than one patch");
    }
    if (opts_.causal_filter) {
        BiquadCascade proto = design_butterworth(4, FilterKind::bandpass,
                                                 {opts_.filter_lo_hz, opts_.filter_hi_hz}, opts_.fs);
        filters_.assign(params.config.n_channels, proto);
    }
}

void StreamSession::reset_encoder() { enc_state_.reset(); }

TraceRecord StreamSession::step(const Mat& raw_patch) {
    const ModelConfig& cfg = params_.config;
    check(raw_patch.rows == cfg.n_channels && raw_patch.cols == cfg.patch_samples,
          "session: patch shape mismatch");
    const auto t0 = std::chrono::steady_clock::now();

    if (opts_.mode == StreamMode::windowed && patch_index_ > 0 &&
        patch_index_ % patches_per_reset_ == 0)
        enc_state_.reset();

    Mat normalized(raw_patch.rows, raw_patch.cols);
    Vec sample(raw_patch.rows);
    for (size_t k = 0; k < raw_patch.cols; ++k) {
        for (size_t c = 0; c < raw_patch.rows; ++c) {
            double x = raw_patch.at(c, k);
            if (opts_.causal_filter) x = causal_filter_step(filters_[c], x);
            sample[c] = x;
        }
        Vec n = rqn_.step(sample);
        for (size_t c = 0; c < raw_patch.rows; ++c) normalized.at(c, k) = n[c];
    }

    last_hidden_ = encode_step(params_, enc_state_, normalized);
    Vec probs = classify(params_, last_hidden_);

    TraceRecord rec;
    rec.patch_index = patch_index_;
    rec.time_s = static_cast<double>(patch_index_) * static_cast<double>(cfg.patch_samples) / opts_.fs;
    rec.probs = std::move(probs);
    rec.block_norms.reserve(cfg.n_blocks);
    for (const auto& bs : enc_state_.block_states) rec.block_norms.push_back(block_state_norm(bs));
    rec.step_latency_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    patch_index_ += 1;
    return rec;
}

size_t StreamSession::measured_bytes(Precision prec) const {
    const size_t pb = precision_bytes(prec);
    size_t total = 0;
    for (const auto& bs : enc_state_.block_states)
        total += (bs.s.size() + bs.u_prev.size() + bs.theta.size()) * pb;
    total += rqn_.buffer_bytes(pb);
    for (const auto& f : filters_) total += f.state.size() * 2 * pb;
    return total;
}

Trace run_recording(StreamSession& session, const Recording& rec) {
    std::vector<Mat> patches = patchify(rec.samples, session.patch_samples());
    Trace trace;
    trace.records.reserve(patches.size());
    for (const Mat& patch : patches) {
        trace.records.push_back(session.step(patch));
        if (session.options().capture_hiddens) trace.hiddens.push_back(session.last_hidden());
    }
    return trace;
}

std::vector<int> patch_labels(const Recording& rec, size_t patch_samples) {
    const size_t g = rec.n_samples() / patch_samples;
    std::vector<int> labels(g, 0);
    for (const Annotation& a : rec.annotations) {
        const double t0 = a.onset_s, t1 = a.offset_s;
        for (size_t i = 0; i < g; ++i) {
            const double p0 = static_cast<double>(i * patch_samples) / rec.fs;
            const double p1 = static_cast<double>((i + 1) * patch_samples) / rec.fs;
            if (p0 < t1 && t0 < p1) labels[i] = 1;
        }
    }
    return labels;
}

EquivalenceReport equivalence_report(const ModelConfig& cfg, size_t n_input_seeds,
                                     size_t n_weight_seeds, size_t g_t, uint64_t seed) {
    check(n_input_seeds >= 1 && n_weight_seeds >= 1, "equivalence: need at least one seed each");
    check(g_t >= 1, "equivalence: need at least one patch");
    EquivalenceReport rep;
    size_t agree = 0, total = 0;
    for (size_t ws = 0; ws < n_weight_seeds; ++ws) {
        EncoderParams params = EncoderParams::init(cfg, seed + 1000 * (ws + 1));
        for (size_t is = 0; is < n_input_seeds; ++is) {
            CounterRng rng = CounterRng(seed).fork(ws * 4096 + is);
            std::vector<Mat> patches;
            patches.reserve(g_t);
            for (size_t t = 0; t < g_t; ++t)
                patches.push_back(random_patch(rng, cfg.n_channels, cfg.patch_samples));

            EncoderState stream_state(cfg);
            std::vector<Vec> stream_logits;
            stream_logits.reserve(g_t);
            for (size_t t = 0; t < g_t; ++t)
                stream_logits.push_back(
                    classify_logits(params, encode_step(params, stream_state, patches[t])));

            EncoderState scan_state(cfg);
            Mat hiddens = encode_sequence(params, scan_state, patches);

            for (size_t t = 0; t < g_t; ++t) {
                Vec h(hiddens.row(t), hiddens.row(t) + cfg.d_model);
                Vec scan_logits = classify_logits(params, h);
                const Vec& sl = stream_logits[t];
                for (size_t i = 0; i < sl.size(); ++i)
                    rep.max_logit_diff = std::max(rep.max_logit_diff, std::abs(sl[i] - scan_logits[i]));
                if (cfg.n_classes == 2) {
                    const double pa = sigmoid(sl[0]);
                    const double pb = sigmoid(scan_logits[0]);
                    rep.max_prob_diff = std::max(rep.max_prob_diff, std::abs(pa - pb));
                    agree += ((pa >= 0.5) == (pb >= 0.5)) ? 1 : 0;
                } else {
                    Vec pa = sl, pb = scan_logits;
                    softmax_inplace(pa.data(), pa.size());
                    softmax_inplace(pb.data(), pb.size());
                    for (size_t i = 0; i < pa.size(); ++i)
                        rep.max_prob_diff = std::max(rep.max_prob_diff, std::abs(pa[i] - pb[i]));
                    const auto arg = [](const Vec& v) {
                        return std::max_element(v.begin(), v.end()) - v.begin();
                    };
                    agree += (arg(pa) == arg(pb)) ? 1 : 0;
                }
                total += 1;
            }
            rep.runs += 1;
        }
    }
    rep.compared_positions = total;
    rep.label_agreement = total ? static_cast<double>(agree) / static_cast<double>(total) : 1.0;
    return rep;
}

FlopReport flop_report(const ModelConfig& cfg, double update_rate_hz) {
    cfg.validate();
    const double d = static_cast<double>(cfg.d_model);
    const double c = static_cast<double>(cfg.n_channels);
    const double p = static_cast<double>(cfg.patch_samples);
    const double q = static_cast<double>(cfg.n_queries);
    const double h_emb = static_cast<double>(cfg.embed_heads);
    const double dh_emb = d / h_emb;
    const double heads = static_cast<double>(cfg.heads);
    const double n = static_cast<double>(cfg.d_state);
    const double ph = static_cast<double>(cfg.d_head);
    const double r = static_cast<double>(cfg.rank);
    const double pairs = n / 2.0;
    const double blocks = static_cast<double>(cfg.n_blocks);
    const double ffn = static_cast<double>(cfg.ffn_dim());
    const double logits = static_cast<double>(cfg.n_logits());

    FlopReport rep;
    rep.update_rate_hz = update_rate_hz;

    // Channel embedder: K/V projections + bias and channel-feature adds,
    // attention scores + softmax + weighted values, output projection.
    rep.channel_embedder = c * 2.0 * (2.0 * p * d + 2.0 * d)        // K,V matvec + adds
                           + h_emb * q * c * (2.0 * dh_emb + 1.0)   // scaled scores
                           + 4.0 * h_emb * q * c                    // softmax
                           + h_emb * q * c * 2.0 * dh_emb           // attn . V
                           + 2.0 * (q * d) * d + d;                 // output proj + bias

    // Mamba-style SSM step.
    const bool trap = cfg.mode == DiscretizationMode::Trapezoidal;
    double per_head = (2.0 * d + 2.0)                     // delta proj + softplus
                      + (trap ? 2.0 * d + 2.0 : 0.0)      // lambda proj + sigmoid
                      + 4.0                               // decay exp(-delta*exp(a_log))
                      + pairs * 5.0                       // phase update + cos/sin
                      + 2.0 * pairs * r * 6.0             // rotate B and C columns
                      + 2.0 * (r * ph) * ph               // rank lift
                      + 2.0 * n * r * ph + n * ph         // B~ X + delta scaling
                      + (trap ? 5.0 : 2.0) * n * ph       // state update
                      + 2.0 * n * r * ph                  // readout C~^T S
                      + r * ph;                           // gate apply
    double per_block = 2.0 * d * d                        // inner projection
                       + 2.0 * (2.0 * (n * r) * d)        // B, C projections
                       + 2.0 * (r * ph) * d + r * ph      // gate projection + silu
                       + heads * per_head
                       + 2.0 * d * (heads * r * ph);      // output projection
    rep.ssm_steps = blocks * per_block;

    rep.ffns = blocks * (3.0 * 2.0 * d * ffn + 2.0 * ffn);

    rep.norms_head = blocks * 2.0 * (4.0 * d + 2.0)  // two RMSNorms per block
                     + blocks * 2.0 * d              // two residual adds per block
                     + d                             // positional add
                     + 2.0 * d * logits + logits     // head matvec + bias
                     + logits;                       // sigmoid / softmax
    rep.total = rep.channel_embedder + rep.ssm_steps + rep.ffns + rep.norms_head;
    rep.sustained_flops_per_s = rep.total * update_rate_hz;
    return rep;
}

StateReport state_bytes(const ModelConfig& cfg, Precision prec, size_t rqn_window,
                        bool causal_filter) {
    const size_t pb = precision_bytes(prec);
    StateReport rep;
    rep.ssm_state_bytes = cfg.n_blocks * cfg.heads * cfg.d_state * cfg.d_head * pb;
    size_t total = rep.ssm_state_bytes;
    total += cfg.n_blocks * cfg.heads * cfg.d_state * cfg.d_head * pb;  // trapezoidal buffer
    total += cfg.n_blocks * cfg.heads * (cfg.d_state / 2) * pb;         // cumulative phases
    total += 2 * cfg.n_channels * rqn_window * pb;                      // RQN ring + sorted copy
    if (causal_filter) total += cfg.n_channels * 8 * 2 * pb;            // 8 biquad sections
    rep.total_session_bytes = total;
    return rep;
}

std::vector<LatencyStats> latency_bench(const ModelConfig& cfg,
                                        const std::vector<double>& context_lengths_s,
                                        size_t timed_patches, size_t warmup_patches,
                                        uint64_t seed) {
    check(!context_lengths_s.empty(), "latency_bench: need at least one context length");
    EncoderParams params = EncoderParams::init(cfg, seed);
    CounterRng rng(seed);
    // A small pool of random patches cycled through the session.
    std::vector<Mat> pool;
    for (size_t i = 0; i < 64; ++i)
        pool.push_back(random_patch(rng, cfg.n_channels, cfg.patch_samples));

    std::vector<LatencyStats> out;
    for (double ctx_s : context_lengths_s) {
        check(ctx_s > 0.0, "latency_bench: context length must be positive");
        SessionOptions opts;
        opts.mode = StreamMode::persistent;
        StreamSession session(params, opts);
        const size_t ctx_patches = std::max<size_t>(
            1, static_cast<size_t>(std::llround(ctx_s * opts.fs / static_cast<double>(cfg.patch_samples))));
        for (size_t i = 0; i < ctx_patches; ++i) session.step(pool[i % pool.size()]);
        for (size_t i = 0; i < warmup_patches; ++i) session.step(pool[i % pool.size()]);

        Vec lat;
        lat.reserve(timed_patches);
        for (size_t i = 0; i < timed_patches; ++i) {
            TraceRecord rec = session.step(pool[i % pool.size()]);
            lat.push_back(rec.step_latency_s);
        }
        std::sort(lat.begin(), lat.end());
        LatencyStats st;
        st.context_s = ctx_s;
        st.context_patches = ctx_patches;
        double sum = 0.0;
        for (double v : lat) sum += v;
        st.mean_s = sum / static_cast<double>(lat.size());
        st.p50_s = lat[lat.size() / 2];
        st.p99_s = lat[std::min(lat.size() - 1, static_cast<size_t>(0.99 * static_cast<double>(lat.size())))];
        out.push_back(st);
    }
    return out;
}

OnsetReport onset_metrics(const Trace& trace, const std::vector<Annotation>& annotations,
                          double fs, size_t patch_samples) {
    OnsetReport rep;
    if (trace.records.empty()) throw argument_error("onset_metrics: empty trace");
    const double patch_s = static_cast<double>(patch_samples) / fs;
    const size_t g = trace.records.size();
    const auto prob_of = [&](size_t idx) { return trace.records[idx].probs[0]; };
    const long window_patches = std::lround(5.0 / patch_s);

    double sum_mean = 0.0, sum_peak = 0.0, sum_at = 0.0;
    for (const Annotation& a : annotations) {
        const long onset_patch = static_cast<long>(a.onset_s / patch_s);
        if (onset_patch < 0 || onset_patch >= static_cast<long>(g)) {
            rep.events_skipped += 1;
            continue;
        }
        sum_at += prob_of(static_cast<size_t>(onset_patch));

        double m = 0.0;
        size_t m_n = 0;
        for (long i = onset_patch; i <= std::min<long>(onset_patch + window_patches, static_cast<long>(g) - 1); ++i) {
            m += prob_of(static_cast<size_t>(i));
            m_n += 1;
        }
        sum_mean += m / static_cast<double>(m_n);

        double peak = 0.0;
        for (long i = std::max<long>(0, onset_patch - window_patches);
             i <= std::min<long>(onset_patch + window_patches, static_cast<long>(g) - 1); ++i)
            peak = std::max(peak, prob_of(static_cast<size_t>(i)));
        sum_peak += peak;
        rep.events_used += 1;
    }
    if (rep.events_used > 0) {
        rep.mean_prob_at_onset = sum_mean / static_cast<double>(rep.events_used);
        rep.peak_prob_near_onset = sum_peak / static_cast<double>(rep.events_used);
        rep.prob_at_onset_patch = sum_at / static_cast<double>(rep.events_used);
    }
    return rep;
}

void write_trace_csv(const Trace& trace, const std::string& path, bool include_latency,
                     const std::string& header_comment) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw integrity_error("trace: cannot open for write: " + path);
    f << "# trace_schema=1\n";
    if (!header_comment.empty()) f << "# " << header_comment << "\n";
    const size_t n_probs = trace.records.empty() ? 1 : trace.records[0].probs.size();
    const size_t n_blocks = trace.records.empty() ? 0 : trace.records[0].block_norms.size();
    f << "patch_index,time_s";
    for (size_t i = 0; i < n_probs; ++i) f << ",prob" << (n_probs > 1 ? std::to_string(i) : "");
    for (size_t b = 0; b < n_blocks; ++b) f << ",block" << b << "_state_norm";
    if (include_latency) f << ",step_latency_s";
    f << "\n";
    char buf[64];
    for (const TraceRecord& r : trace.records) {
        f << r.patch_index;
        std::snprintf(buf, sizeof(buf), ",%.9f", r.time_s);
        f << buf;
        for (double p : r.probs) {
            std::snprintf(buf, sizeof(buf), ",%.17g", p);
            f << buf;
        }
        for (double n : r.block_norms) {
            std::snprintf(buf, sizeof(buf), ",%.17g", n);
            f << buf;
        }
        if (include_latency) {
            std::snprintf(buf, sizeof(buf), ",%.9f", r.step_latency_s);
            f << buf;
        }
        f << "\n";
    }
}

}  // namespace eegstream
