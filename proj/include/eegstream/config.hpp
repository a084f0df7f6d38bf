#pragma once

#include <cstdint>
#include <string>

#include "eegstream/encoder.hpp"
#include "eegstream/flowlab.hpp"
#include "eegstream/synth.hpp"

namespace eegstream {

struct PreprocessConfig {
    double fs = 256.0;
    double bandpass_lo = 0.1;
    double bandpass_hi = 75.0;
    double notch_lo = 58.0;
    double notch_hi = 62.0;
    bool montage = false;
};

struct StreamConfig {
    std::string mode = "persistent";  // or "windowed"
    double reset_s = 5.0;
    bool causal_filter = false;
    size_t rqn_window = 1280;
    double update_rate_hz = 16.0;
};

struct SslConfig {
    size_t steps = 200;
    double lr = 0.05;
    double mask_ratio = 0.4;
    size_t block_len = 2;
    size_t k_future = 3;
    double lambda_arm = 0.5;
    double lambda_mask = 0.5;
    size_t g_t = 12;
    size_t dec_hidden = 8;
};

struct FlowConfig {
    std::string objective = "mae";
    size_t depth = 2;
    double rho = 0.5;
    double lambda = 1.0;
    double init_scale = 1e-6;
    double horizon = 1e18;
};

// Sectioned key=value run configuration; unknown sections or keys are
// rejected and every output records the hash of the canonical rendering.
struct RunConfig {
    ModelConfig model;
    PreprocessConfig preprocess;
    StreamConfig stream;
    SynthSpec synth;
    SslConfig ssl;
    FlowConfig flowlab;
    uint64_t seed = 42;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// "section.key=value" flag override.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Fixed-order rendering of every key; the config hash is FNV-1a 64 of this.
std::string canonical_config_text(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);

FlowLabSpec flow_spec_from(const RunConfig& cfg);

}  // namespace eegstream
