#include "eegstream/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace eegstream {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        check(pos == s.size(), "config: bad numeric value '" + s + "'");
        return v;
    } catch (const argument_error&) {
        throw;
    } catch (const std::exception&) {
        throw argument_error("config: bad numeric value '" + s + "'");
    }
}

size_t parse_size(const std::string& s) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        check(pos == s.size() && v >= 0, "config: bad integer value '" + s + "'");
        return static_cast<size_t>(v);
    } catch (const argument_error&) {
        throw;
    } catch (const std::exception&) {
        throw argument_error("config: bad integer value '" + s + "'");
    }
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw argument_error("config: bad boolean value '" + s + "'");
}

struct Entry {
    std::string section, key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

#define E_SIZE(sec, name, field)                                                       \
    {#sec, #name, [](const RunConfig& c) { return std::to_string(c.field); },          \
     [](RunConfig& c, const std::string& v) { c.field = parse_size(v); }}
#define E_DOUBLE(sec, name, field)                                                     \
    {#sec, #name, [](const RunConfig& c) { return fmt_double(c.field); },              \
     [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }}
#define E_BOOL(sec, name, field)                                                       \
    {#sec, #name, [](const RunConfig& c) { return c.field ? "true" : "false"; },       \
     [](RunConfig& c, const std::string& v) { c.field = parse_bool(v); }}
#define E_STR(sec, name, field)                                                        \
    {#sec, #name, [](const RunConfig& c) { return c.field; },                          \
     [](RunConfig& c, const std::string& v) { c.field = v; }}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> all = {
        E_SIZE(model, d_model, model.d_model),
        E_SIZE(model, n_blocks, model.n_blocks),
        E_SIZE(model, d_state, model.d_state),
        E_SIZE(model, d_head, model.d_head),
        E_SIZE(model, heads, model.heads),
        E_SIZE(model, ffn_expansion, model.ffn_expansion),
        E_SIZE(model, rank, model.rank),
        E_SIZE(model, n_queries, model.n_queries),
        E_SIZE(model, embed_heads, model.embed_heads),
        E_SIZE(model, patch_samples, model.patch_samples),
        E_SIZE(model, pos_period, model.pos_period),
        E_SIZE(model, n_channels, model.n_channels),
        E_SIZE(model, n_classes, model.n_classes),
        E_SIZE(model, scan_chunk, model.scan_chunk),
        E_DOUBLE(model, rms_eps, model.rms_eps),
        {"model", "mode",
         [](const RunConfig& c) {
             return c.model.mode == DiscretizationMode::Euler ? "euler" : "trapezoidal";
         },
         [](RunConfig& c, const std::string& v) {
             if (v == "euler")
                 c.model.mode = DiscretizationMode::Euler;
             else if (v == "trapezoidal")
                 c.model.mode = DiscretizationMode::Trapezoidal;
             else
                 throw argument_error("config: model.mode must be euler or trapezoidal");
         }},
        E_DOUBLE(preprocess, fs, preprocess.fs),
        E_DOUBLE(preprocess, bandpass_lo, preprocess.bandpass_lo),
        E_DOUBLE(preprocess, bandpass_hi, preprocess.bandpass_hi),
        E_DOUBLE(preprocess, notch_lo, preprocess.notch_lo),
        E_DOUBLE(preprocess, notch_hi, preprocess.notch_hi),
        E_BOOL(preprocess, montage, preprocess.montage),
        E_STR(stream, mode, stream.mode),
        E_DOUBLE(stream, reset_s, stream.reset_s),
        E_BOOL(stream, causal_filter, stream.causal_filter),
        E_SIZE(stream, rqn_window, stream.rqn_window),
        E_DOUBLE(stream, update_rate_hz, stream.update_rate_hz),
        E_DOUBLE(synth, fs, synth.fs),
        E_SIZE(synth, n_channels, synth.n_channels),
        E_DOUBLE(synth, duration_s, synth.duration_s),
        E_DOUBLE(synth, amp_delta, synth.band_amps.delta),
        E_DOUBLE(synth, amp_theta, synth.band_amps.theta),
        E_DOUBLE(synth, amp_alpha, synth.band_amps.alpha),
        E_DOUBLE(synth, amp_beta, synth.band_amps.beta),
        E_DOUBLE(synth, amp_gamma, synth.band_amps.gamma),
        E_DOUBLE(synth, noise_amp, synth.noise_amp),
        E_DOUBLE(synth, blink_per_min, synth.blink_per_min),
        E_DOUBLE(synth, muscle_per_min, synth.muscle_per_min),
        E_DOUBLE(synth, pop_per_min, synth.pop_per_min),
        E_DOUBLE(synth, event_rate_per_min, synth.events.rate_per_min),
        E_DOUBLE(synth, event_duration_s, synth.events.duration_s),
        E_STR(synth, event_carrier, synth.events.carrier_band),
        E_DOUBLE(synth, event_gain, synth.events.amplitude_gain),
        E_DOUBLE(synth, event_precursor_lead_s, synth.events.precursor_lead_s),
        E_SIZE(ssl, steps, ssl.steps),
        E_DOUBLE(ssl, lr, ssl.lr),
        E_DOUBLE(ssl, mask_ratio, ssl.mask_ratio),
        E_SIZE(ssl, block_len, ssl.block_len),
        E_SIZE(ssl, k_future, ssl.k_future),
        E_DOUBLE(ssl, lambda_arm, ssl.lambda_arm),
        E_DOUBLE(ssl, lambda_mask, ssl.lambda_mask),
        E_SIZE(ssl, g_t, ssl.g_t),
        E_SIZE(ssl, dec_hidden, ssl.dec_hidden),
        E_STR(flowlab, objective, flowlab.objective),
        E_SIZE(flowlab, depth, flowlab.depth),
        E_DOUBLE(flowlab, rho, flowlab.rho),
        E_DOUBLE(flowlab, lambda, flowlab.lambda),
        E_DOUBLE(flowlab, init_scale, flowlab.init_scale),
        E_DOUBLE(flowlab, horizon, flowlab.horizon),
        {"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) {
             c.seed = static_cast<uint64_t>(parse_size(v));
         }},
    };
    return all;
}

#undef E_SIZE
#undef E_DOUBLE
#undef E_BOOL
#undef E_STR

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

void set_key(RunConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value) {
    for (const Entry& e : entries()) {
        if (e.section == section && e.key == key) {
            e.set(cfg, value);
            return;
        }
    }
    throw argument_error("config: unknown key " + section + "." + key);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            check(line.back() == ']', "config: malformed section at line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const Entry& e : entries()) known = known || e.section == section;
            check(known, "config: unknown section [" + section + "]");
            continue;
        }
        const size_t eq = line.find('=');
        check(eq != std::string::npos, "config: expected key=value at line " + std::to_string(line_no));
        check(!section.empty(), "config: key outside any section at line " + std::to_string(line_no));
        set_key(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw argument_error("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    check(eq != std::string::npos, "override: expected section.key=value");
    const std::string lhs = trim(assignment.substr(0, eq));
    const size_t dot = lhs.find('.');
    check(dot != std::string::npos, "override: expected section.key=value");
    set_key(cfg, lhs.substr(0, dot), lhs.substr(dot + 1), trim(assignment.substr(eq + 1)));
}

std::string canonical_config_text(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const Entry& e : entries()) {
        if (e.section != section) {
            section = e.section;
            out += "[" + section + "]\n";
        }
        out += e.key + " = " + e.get(cfg) + "\n";
    }
    return out;
}

uint64_t config_hash(const RunConfig& cfg) {
    const std::string text = canonical_config_text(cfg);
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

FlowLabSpec flow_spec_from(const RunConfig& cfg) {
    FlowLabSpec spec;
    spec.objective = flow_objective_from_string(cfg.flowlab.objective);
    spec.depth = cfg.flowlab.depth;
    spec.rho = cfg.flowlab.rho;
    spec.lambda = cfg.flowlab.lambda;
    spec.init_scale = cfg.flowlab.init_scale;
    spec.horizon = cfg.flowlab.horizon;
    return spec;
}

}  // namespace eegstream
