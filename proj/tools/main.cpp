// eegstream: command-line surface for the streaming EEG engine.
//
// Every command reads the sectioned key=value config (defaults embedded),
// applies --set overrides, and writes deterministic CSV/JSON outputs into a
// run directory named by the config hash and seed. Exit codes: 0 success,
// 2 bad arguments or config, 3 numeric/training failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "eegstream/checkpoint.hpp"
#include "eegstream/config.hpp"
#include "eegstream/flowlab.hpp"
#include "eegstream/metrics.hpp"
#include "eegstream/preprocess.hpp"
#include "eegstream/ssl.hpp"
#include "eegstream/stream.hpp"
#include "eegstream/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eegstream;

namespace {

struct CliState {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_root = "runs";
    RunConfig cfg;
    fs::path run_dir;
};

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void prepare(CliState& st) {
    st.cfg = st.config_path.empty() ? RunConfig{} : load_run_config(st.config_path);
    for (const std::string& o : st.overrides) apply_override(st.cfg, o);
    st.run_dir = fs::path(st.out_root) /
                 (hex64(config_hash(st.cfg)) + "-s" + std::to_string(st.cfg.seed));
    fs::create_directories(st.run_dir);
    std::ofstream f(st.run_dir / "config.ini", std::ios::trunc);
    f << canonical_config_text(st.cfg);
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw integrity_error("cannot open for write: " + path.string());
    f << j.dump(2) << "\n";
}

json run_header(const CliState& st) {
    return json{{"schema_version", 1},
                {"config_hash", hex64(config_hash(st.cfg))},
                {"seed", st.cfg.seed}};
}

ModelConfig model_from(const RunConfig& cfg) {
    ModelConfig m = cfg.model;
    m.validate();
    return m;
}

SessionOptions session_options(const RunConfig& cfg) {
    SessionOptions opts;
    opts.mode = cfg.stream.mode == "windowed" ? StreamMode::windowed : StreamMode::persistent;
    if (cfg.stream.mode != "windowed" && cfg.stream.mode != "persistent")
        throw argument_error("stream.mode must be persistent or windowed");
    opts.reset_period_s = cfg.stream.reset_s;
    opts.fs = cfg.preprocess.fs;
    opts.rqn_window = cfg.stream.rqn_window;
    opts.causal_filter = cfg.stream.causal_filter;
    opts.filter_lo_hz = cfg.preprocess.bandpass_lo;
    opts.filter_hi_hz = cfg.preprocess.bandpass_hi;
    return opts;
}

SynthSpec synth_from(const RunConfig& cfg) {
    SynthSpec s = cfg.synth;
    s.seed = cfg.seed;
    return s;
}

int cmd_gen(CliState& st, const std::string& out_rec) {
    Recording rec = gen_recording(synth_from(st.cfg));
    const fs::path rec_path = out_rec.empty() ? st.run_dir / "recording.bin" : fs::path(out_rec);
    write_recording(rec, rec_path.string());
    write_annotations_json(rec, (rec_path.string() + ".annotations.json"));
    json j = run_header(st);
    j["recording"] = rec_path.string();
    j["n_channels"] = rec.n_channels();
    j["n_samples"] = rec.n_samples();
    j["n_events"] = rec.annotations.size();
    write_json(st.run_dir / "gen_summary.json", j);
    std::cout << "wrote " << rec_path.string() << " (" << rec.annotations.size() << " events)\n";
    return 0;
}

int cmd_preprocess(CliState& st, const std::string& in_rec, const std::string& out_rec,
                   const std::string& band_stop, bool apply_montage) {
    Recording rec = read_recording(in_rec);
    const double fs = rec.fs;

    if (apply_montage || st.cfg.preprocess.montage) {
        rec.samples = bipolar_montage(rec.samples, rec.channel_names, double_banana_22());
        rec.channel_names.clear();
        for (const auto& [a, b] : double_banana_22()) rec.channel_names.push_back(a + "-" + b);
    }

    if (!band_stop.empty()) {
        rec.samples = band_stop_ablate(rec.samples, band_stop, fs);
    } else {
        BiquadCascade bp = design_butterworth(
            4, FilterKind::bandpass, {st.cfg.preprocess.bandpass_lo, st.cfg.preprocess.bandpass_hi},
            fs);
        BiquadCascade notch = design_butterworth(
            4, FilterKind::bandstop, {st.cfg.preprocess.notch_lo, st.cfg.preprocess.notch_hi}, fs);
        rec.samples = filtfilt(notch, filtfilt(bp, rec.samples));
        if (fs != 256.0) {
            rec.samples = resample(rec.samples, fs, 256.0);
            rec.fs = 256.0;
        }
    }
    rec.validate();
    write_recording(rec, out_rec);
    std::cout << "wrote " << out_rec << "\n";
    return 0;
}

int cmd_stream(CliState& st, const std::string& in_rec, bool timing) {
    Recording rec = read_recording(in_rec);
    ModelConfig mc = model_from(st.cfg);
    check(rec.n_channels() == mc.n_channels, "stream: recording channels do not match model");
    EncoderParams params = EncoderParams::init(mc, st.cfg.seed);
    StreamSession session(params, session_options(st.cfg));
    Trace trace = run_recording(session, rec);
    write_trace_csv(trace, (st.run_dir / "trace.csv").string(), timing,
                    "config_hash=" + hex64(config_hash(st.cfg)));

    json j = run_header(st);
    j["mode"] = st.cfg.stream.mode;
    j["n_patches"] = trace.records.size();
    OnsetReport onset = onset_metrics(trace, rec.annotations, rec.fs, mc.patch_samples);
    j["onset"] = {{"mean_prob_at_onset", onset.mean_prob_at_onset},
                  {"peak_prob_near_onset", onset.peak_prob_near_onset},
                  {"prob_at_onset_patch", onset.prob_at_onset_patch},
                  {"events_used", onset.events_used},
                  {"events_skipped", onset.events_skipped}};
    write_json(st.run_dir / "stream_summary.json", j);
    std::cout << "wrote " << (st.run_dir / "trace.csv").string() << "\n";
    return 0;
}

int cmd_bench_equivalence(CliState& st, size_t input_seeds, size_t weight_seeds, size_t g_t) {
    EquivalenceReport rep =
        equivalence_report(model_from(st.cfg), input_seeds, weight_seeds, g_t, st.cfg.seed);
    json j = run_header(st);
    j["input_seeds"] = input_seeds;
    j["weight_seeds"] = weight_seeds;
    j["g_t"] = g_t;
    j["max_logit_diff"] = rep.max_logit_diff;
    j["max_prob_diff"] = rep.max_prob_diff;
    j["label_agreement"] = rep.label_agreement;
    j["compared_positions"] = rep.compared_positions;
    write_json(st.run_dir / "equivalence.json", j);
    std::printf("max_logit_diff=%.3e max_prob_diff=%.3e agreement=%.4f\n", rep.max_logit_diff,
                rep.max_prob_diff, rep.label_agreement);
    return 0;
}

int cmd_bench_latency(CliState& st, std::vector<double> contexts, size_t patches, size_t warmup) {
    if (contexts.empty()) contexts = {5.0, 3600.0};
    auto stats = latency_bench(model_from(st.cfg), contexts, patches, warmup, st.cfg.seed);
    std::ofstream f(st.run_dir / "latency.csv", std::ios::trunc);
    f << "# latency_schema=1\n# config_hash=" << hex64(config_hash(st.cfg))
      << "\ncontext_s,context_patches,mean_s,p50_s,p99_s\n";
    for (const auto& s : stats) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.3f,%zu,%.9f,%.9f,%.9f\n", s.context_s,
                      s.context_patches, s.mean_s, s.p50_s, s.p99_s);
        f << buf;
        std::printf("context %8.1f s: mean %.3f ms p50 %.3f ms p99 %.3f ms\n", s.context_s,
                    s.mean_s * 1e3, s.p50_s * 1e3, s.p99_s * 1e3);
    }
    return 0;
}

int cmd_bench_flops(CliState& st) {
    FlopReport rep = flop_report(model_from(st.cfg), st.cfg.stream.update_rate_hz);
    json j = run_header(st);
    j["components"] = {{"channel_embedder", rep.channel_embedder},
                       {"ssm_steps", rep.ssm_steps},
                       {"ffns", rep.ffns},
                       {"norms_head", rep.norms_head}};
    j["total_per_step"] = rep.total;
    j["update_rate_hz"] = rep.update_rate_hz;
    j["sustained_flops_per_s"] = rep.sustained_flops_per_s;
    write_json(st.run_dir / "flops.json", j);
    std::printf("channel_embedder %.2fM  ssm_steps %.2fM  ffns %.2fM  norms_head %.2fM\n",
                rep.channel_embedder / 1e6, rep.ssm_steps / 1e6, rep.ffns / 1e6,
                rep.norms_head / 1e6);
    std::printf("total %.2fM/step -> %.3f GFLOP/s at %.0f Hz\n", rep.total / 1e6,
                rep.sustained_flops_per_s / 1e9, rep.update_rate_hz);
    return 0;
}

int cmd_bench_state(CliState& st) {
    StateReport rep = state_bytes(model_from(st.cfg), Precision::f32, st.cfg.stream.rqn_window,
                                  st.cfg.stream.causal_filter);
    json j = run_header(st);
    j["ssm_state_bytes"] = rep.ssm_state_bytes;
    j["total_session_bytes"] = rep.total_session_bytes;
    write_json(st.run_dir / "state.json", j);
    std::printf("ssm_state_bytes=%zu (%.1f KB)  total_session_bytes=%zu\n", rep.ssm_state_bytes,
                rep.ssm_state_bytes / 1024.0, rep.total_session_bytes);
    return 0;
}

int cmd_ablate_band(CliState& st, const std::string& in_rec, const std::string& band,
                    const std::string& out_rec) {
    (void)st;
    Recording rec = read_recording(in_rec);
    rec.samples = band_stop_ablate(rec.samples, band, rec.fs);
    write_recording(rec, out_rec);
    std::cout << "wrote " << out_rec << " (" << band << " stopped)\n";
    return 0;
}

int cmd_train_toy(CliState& st, const std::string& stage) {
    check(stage == "stage1" || stage == "stage2", "train-toy: stage must be stage1 or stage2");
    ToyTrainConfig tc;
    tc.model = ModelConfig::micro();
    tc.steps = st.cfg.ssl.steps;
    tc.lr = st.cfg.ssl.lr;
    tc.mask_ratio = st.cfg.ssl.mask_ratio;
    tc.mask_block_len = st.cfg.ssl.block_len;
    tc.k_future = st.cfg.ssl.k_future;
    tc.lambda_arm = st.cfg.ssl.lambda_arm;
    tc.lambda_mask = st.cfg.ssl.lambda_mask;
    tc.g_t = st.cfg.ssl.g_t;
    tc.dec_hidden = st.cfg.ssl.dec_hidden;
    tc.seed = st.cfg.seed;
    Vec curve = toy_train(stage == "stage1" ? 1 : 2, tc);

    std::ofstream f(st.run_dir / ("loss_" + stage + ".csv"), std::ios::trunc);
    f << "# loss_schema=1\n# config_hash=" << hex64(config_hash(st.cfg)) << "\nstep,loss\n";
    for (size_t i = 0; i < curve.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, curve[i]);
        f << buf;
    }
    std::printf("%s: loss %.4f -> %.4f over %zu steps\n", stage.c_str(), curve.front(),
                curve.back(), curve.size() - 1);
    return 0;
}

int cmd_flowlab(CliState& st) {
    FlowResult res = deep_linear_flow(flow_spec_from(st.cfg));
    std::ofstream f(st.run_dir / "flow_trajectory.csv", std::ios::trunc);
    f << "# flow_schema=1\n# config_hash=" << hex64(config_hash(st.cfg)) << "\nt,w\n";
    for (size_t i = 0; i < res.t.size(); ++i) {
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", res.t[i], res.w[i]);
        f << buf;
    }
    json j = run_header(st);
    j["objective"] = st.cfg.flowlab.objective;
    j["depth"] = st.cfg.flowlab.depth;
    j["rho"] = st.cfg.flowlab.rho;
    j["terminal_w"] = res.terminal_w;
    j["fixed_point"] = res.w_inf;
    j["escape_time"] = res.escape_time;
    j["escaped"] = res.escaped;
    j["converged"] = res.converged;
    write_json(st.run_dir / "flow_summary.json", j);
    std::printf("terminal %.6f (fixed point %.6f), escape time %.6g\n", res.terminal_w, res.w_inf,
                res.escape_time);
    return 0;
}

Trace read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw argument_error("eval: cannot open trace " + path);
    Trace trace;
    std::string line;
    int prob_col = -1;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (prob_col < 0) {
            std::stringstream ss(line);
            std::string col;
            int idx = 0;
            while (std::getline(ss, col, ',')) {
                if (col.rfind("prob", 0) == 0 && prob_col < 0) prob_col = idx;
                ++idx;
            }
            check(prob_col >= 0, "eval: trace has no prob column");
            continue;
        }
        std::stringstream ss(line);
        std::string col;
        TraceRecord rec;
        int idx = 0;
        while (std::getline(ss, col, ',')) {
            if (idx == 0) rec.patch_index = std::stoull(col);
            if (idx == 1) rec.time_s = std::stod(col);
            if (idx == prob_col) rec.probs = {std::stod(col)};
            ++idx;
        }
        trace.records.push_back(rec);
    }
    return trace;
}

int cmd_eval(CliState& st, const std::string& in_rec, const std::string& trace_path) {
    Recording rec = read_recording(in_rec);
    Trace trace = read_trace_csv(trace_path);
    ModelConfig mc = model_from(st.cfg);

    std::vector<int> labels = patch_labels(rec, mc.patch_samples);
    check(labels.size() == trace.records.size(), "eval: trace/recording patch count mismatch");
    ScoredSet set;
    for (size_t i = 0; i < labels.size(); ++i)
        set.push_back({trace.records[i].probs[0], labels[i]});

    json j = run_header(st);
    j["n_patches"] = labels.size();
    try {
        j["auroc"] = auroc(set);
        j["aupr"] = aupr(set);
        j["bac_t0.5"] = balanced_accuracy(set, 0.5);
        const double yt = youden_threshold(set);
        j["youden_threshold"] = yt;
        j["bac_youden"] = balanced_accuracy(set, yt);
    } catch (const undefined_metric_error& e) {
        j["metrics_error"] = e.what();
    }
    OnsetReport onset = onset_metrics(trace, rec.annotations, rec.fs, mc.patch_samples);
    j["onset"] = {{"mean_prob_at_onset", onset.mean_prob_at_onset},
                  {"peak_prob_near_onset", onset.peak_prob_near_onset},
                  {"prob_at_onset_patch", onset.prob_at_onset_patch},
                  {"events_used", onset.events_used},
                  {"events_skipped", onset.events_skipped}};
    write_json(st.run_dir / "eval.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming state-space EEG engine"};
    app.require_subcommand(1);
    app.fallthrough();
    CliState st;
    app.add_option("--config", st.config_path, "run config file (sectioned key=value)");
    app.add_option("--set", st.overrides, "override: section.key=value (repeatable)");
    app.add_option("--out", st.out_root, "output root directory");

    std::string out_rec, in_rec, band, stage, trace_path;
    bool timing = false, montage = false;
    size_t input_seeds = 30, weight_seeds = 3, g_t = 80, patches = 1000, warmup = 50;
    std::vector<double> contexts;

    auto* gen = app.add_subcommand("gen", "generate a synthetic recording");
    gen->add_option("--out-rec", out_rec, "recording output path");

    auto* pre = app.add_subcommand("preprocess", "offline zero-phase conditioning");
    pre->add_option("--in", in_rec, "input recording")->required();
    pre->add_option("--out-rec", out_rec, "output recording")->required();
    pre->add_option("--band-stop", band, "apply only the named band-stop");
    pre->add_flag("--montage", montage, "apply the 22-derivation bipolar montage");

    std::string mode_flag;
    double reset_s_flag = -1.0;
    auto* strm = app.add_subcommand("stream", "run a streaming session over a recording");
    strm->add_option("--in", in_rec, "input recording")->required();
    strm->add_option("--mode", mode_flag, "persistent or windowed");
    strm->add_option("--reset-s", reset_s_flag, "windowed reset period in seconds");
    strm->add_flag("--timing", timing, "include measured step latency in the trace");

    auto* bench = app.add_subcommand("bench", "benchmarks and accounting");
    bench->require_subcommand(1);
    auto* beq = bench->add_subcommand("equivalence", "streaming vs parallel execution");
    beq->add_option("--input-seeds,--seeds", input_seeds);
    beq->add_option("--weight-seeds", weight_seeds);
    beq->add_option("--g-t", g_t);
    auto* blat = bench->add_subcommand("latency", "per-step latency vs context length");
    blat->add_option("--contexts", contexts, "context lengths in seconds");
    blat->add_option("--patches", patches);
    blat->add_option("--warmup", warmup);
    auto* bflops = bench->add_subcommand("flops", "analytical per-step FLOP table");
    auto* bstate = bench->add_subcommand("state", "persistent state accounting");

    auto* abl = app.add_subcommand("ablate-band", "band-stop a recording");
    abl->add_option("--in", in_rec)->required();
    abl->add_option("--band", band)->required();
    abl->add_option("--out-rec", out_rec)->required();

    auto* toy = app.add_subcommand("train-toy", "numeric-gradient training on the micro model");
    toy->add_option("stage", stage, "stage1 or stage2")->required();

    auto* flow = app.add_subcommand("flowlab", "deep-linear objective flow");

    auto* ev = app.add_subcommand("eval", "metrics from a trace and annotated recording");
    ev->add_option("--in", in_rec)->required();
    ev->add_option("--trace", trace_path)->required();

    CLI11_PARSE(app, argc, argv);

    auto fail = [](int code, const char* type, const std::string& msg) {
        json err{{"error", {{"type", type}, {"message", msg}}}};
        std::cerr << err.dump() << "\n";
        return code;
    };

    try {
        if (!mode_flag.empty()) st.overrides.push_back("stream.mode=" + mode_flag);
        if (reset_s_flag > 0.0)
            st.overrides.push_back("stream.reset_s=" + std::to_string(reset_s_flag));
        prepare(st);
        if (gen->parsed()) return cmd_gen(st, out_rec);
        if (pre->parsed()) return cmd_preprocess(st, in_rec, out_rec, band, montage);
        if (strm->parsed()) return cmd_stream(st, in_rec, timing);
        if (bench->parsed()) {
            if (beq->parsed()) return cmd_bench_equivalence(st, input_seeds, weight_seeds, g_t);
            if (blat->parsed()) return cmd_bench_latency(st, contexts, patches, warmup);
            if (bflops->parsed()) return cmd_bench_flops(st);
            if (bstate->parsed()) return cmd_bench_state(st);
        }
        if (abl->parsed()) return cmd_ablate_band(st, in_rec, band, out_rec);
        if (toy->parsed()) return cmd_train_toy(st, stage);
        if (flow->parsed()) return cmd_flowlab(st);
        if (ev->parsed()) return cmd_eval(st, in_rec, trace_path);
        return fail(2, "argument_error", "no subcommand");
    } catch (const argument_error& e) {
        return fail(2, "argument_error", e.what());
    } catch (const version_error& e) {
        return fail(2, "version_error", e.what());
    } catch (const integrity_error& e) {
        return fail(2, "integrity_error", e.what());
    } catch (const numeric_error& e) {
        return fail(3, "numeric_error", e.what());
    } catch (const training_error& e) {
        return fail(3, "training_error", e.what());
    } catch (const std::exception& e) {
        return fail(3, "runtime_error", e.what());
    }
}
