#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eegstream/encoder.hpp"
#include "eegstream/preprocess.hpp"
#include "eegstream/synth.hpp"

namespace eegstream {

enum class StreamMode { persistent, windowed };

struct SessionOptions {
    StreamMode mode = StreamMode::persistent;
    double reset_period_s = 5.0;  // windowed mode: encoder reset cadence
    double fs = 256.0;
    size_t rqn_window = 1280;
    bool causal_filter = false;  // optional forward-only bandpass before RQN
    double filter_lo_hz = 0.1, filter_hi_hz = 75.0;
    bool capture_hiddens = false;
};

struct TraceRecord {
    size_t patch_index = 0;
    double time_s = 0.0;
    Vec probs;
    Vec block_norms;  // per-block state Frobenius norm
    double step_latency_s = 0.0;
};

struct Trace {
    std::vector<TraceRecord> records;
    std::vector<Vec> hiddens;  // filled when capture_hiddens is set
};

// End-to-end streaming context: causal filters -> sliding RQN -> encoder ->
// classifier. Windowed mode resets the encoder state (never the signal-path
// buffers) at period boundaries.
class StreamSession {
public:
    StreamSession(const EncoderParams& params, const SessionOptions& opts);

    TraceRecord step(const Mat& raw_patch);
    void reset_encoder();

    const EncoderState& encoder_state() const { return enc_state_; }
    const SessionOptions& options() const { return opts_; }
    size_t patches_seen() const { return patch_index_; }
    size_t patch_samples() const { return params_.config.patch_samples; }
    const Vec& last_hidden() const { return last_hidden_; }

    // Live persistent-memory footprint, counted at the accounting precision.
    size_t measured_bytes(Precision prec = Precision::f32) const;

private:
    const EncoderParams& params_;
    SessionOptions opts_;
    EncoderState enc_state_;
    RqnState rqn_;
    std::vector<BiquadCascade> filters_;  // per channel, when enabled
    size_t patch_index_ = 0;
    size_t patches_per_reset_ = 0;
    Vec last_hidden_;
};

// Folds StreamSession::step over all patches of the recording.
Trace run_recording(StreamSession& session, const Recording& rec);

// Patch-level binary labels: 1 when the patch interval overlaps any
// annotation.
std::vector<int> patch_labels(const Recording& rec, size_t patch_samples);

struct EquivalenceReport {
    double max_logit_diff = 0.0;
    double max_prob_diff = 0.0;
    double label_agreement = 1.0;  // fraction in [0, 1]
    size_t runs = 0;
    size_t compared_positions = 0;
};

// Streaming fold vs parallel scan over the full encoder + head on random
// inputs; the two execution paths are mutual oracles.
EquivalenceReport equivalence_report(const ModelConfig& cfg, size_t n_input_seeds,
                                     size_t n_weight_seeds, size_t g_t = 80,
                                     uint64_t seed = 42);

struct FlopReport {
    double channel_embedder = 0.0;
    double ssm_steps = 0.0;
    double ffns = 0.0;
    double norms_head = 0.0;
    double total = 0.0;
    double update_rate_hz = 16.0;
    double sustained_flops_per_s = 0.0;
};

// Analytical per-step FLOP counts for the streaming step. Convention:
// matmul m x k x n = 2mkn, bias/residual adds = 1 per element, elementwise
// transcendental (silu, exp, sigmoid, cos, ...) = 1 per element, softmax =
// 4 per element.
FlopReport flop_report(const ModelConfig& cfg, double update_rate_hz = 16.0);

struct StateReport {
    size_t ssm_state_bytes = 0;      // S only
    size_t total_session_bytes = 0;  // + trapezoidal buffer, phases, RQN/filter state
};

StateReport state_bytes(const ModelConfig& cfg, Precision prec = Precision::f32,
                        size_t rqn_window = 1280, bool causal_filter = false);

struct LatencyStats {
    double context_s = 0.0;
    size_t context_patches = 0;
    double mean_s = 0.0;
    double p50_s = 0.0;
    double p99_s = 0.0;
};

// Measures per-step wall time after pre-advancing the session to each
// context length; warm-up steps are excluded from the timed window.
std::vector<LatencyStats> latency_bench(const ModelConfig& cfg,
                                        const std::vector<double>& context_lengths_s,
                                        size_t timed_patches = 1000, size_t warmup_patches = 50,
                                        uint64_t seed = 42);

struct OnsetReport {
    double mean_prob_at_onset = 0.0;   // mean prob over [onset, onset+5 s]
    double peak_prob_near_onset = 0.0; // max prob over [onset-5 s, onset+5 s]
    double prob_at_onset_patch = 0.0;  // prob at the patch containing onset
    size_t events_used = 0;
    size_t events_skipped = 0;
};

OnsetReport onset_metrics(const Trace& trace, const std::vector<Annotation>& annotations,
                          double fs, size_t patch_samples);

// Versioned trace CSV (schema v1). The measured-latency column is opt-in so
// default outputs stay byte-reproducible for a fixed config and seed. The
// header comment (e.g. the run's config hash) is embedded when provided.
void write_trace_csv(const Trace& trace, const std::string& path, bool include_latency = false,
                     const std::string& header_comment = "");

}  // namespace eegstream
