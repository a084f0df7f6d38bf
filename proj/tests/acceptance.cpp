// Acceptance suite: every gate criterion in one binary, one PASS/FAIL line
// each. Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "eegstream/flowlab.hpp"
#include "eegstream/kernels.hpp"
#include "eegstream/metrics.hpp"
#include "eegstream/preprocess.hpp"
#include "eegstream/ssl.hpp"
#include "eegstream/stream.hpp"
#include "eegstream/synth.hpp"

using namespace eegstream;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// Narrow sweep model, structurally identical to the default configuration
// (4 blocks, 11 heads, state 64, rank 4, trapezoidal), sized for a
// single-core minute budget.
ModelConfig sweep_config() {
    ModelConfig c;
    c.d_model = 132;
    c.d_head = 12;
    c.heads = 11;
    c.d_state = 64;
    c.n_blocks = 4;
    c.rank = 4;
    c.n_channels = 22;
    return c;
}

// Session-scale model for the streaming ablations.
ModelConfig ablation_config() {
    ModelConfig c;
    c.d_model = 88;
    c.d_head = 8;
    c.heads = 11;
    c.d_state = 32;
    c.n_blocks = 4;
    c.rank = 2;
    c.n_channels = 8;
    return c;
}

ModelConfig causality_config() {
    ModelConfig c;
    c.d_model = 16;
    c.n_blocks = 2;
    c.d_state = 8;
    c.d_head = 8;
    c.heads = 2;
    c.rank = 1;
    c.n_queries = 2;
    c.embed_heads = 2;
    c.patch_samples = 8;
    c.n_channels = 4;
    return c;
}

SynthSpec precursor_spec(uint64_t seed, double duration_s) {
    SynthSpec s;
    s.n_channels = 8;
    s.duration_s = duration_s;
    s.seed = seed;
    s.blink_per_min = 0.0;
    s.muscle_per_min = 0.0;
    s.pop_per_min = 0.0;
    s.events.rate_per_min = 1.2;
    s.events.duration_s = 16.0;
    s.events.carrier_band = "delta";
    s.events.amplitude_gain = 6.0;
    s.events.precursor_lead_s = 10.0;
    return s;
}

// Long-context variant: a single-band background turns the carrier gain into
// a pure amplitude event. The sliding normalization absorbs amplitude within
// its 5 s buffer, so evidence visible to a 5 s window is confined to the
// onset transient while a persistent state can integrate the 10 s precursor.
SynthSpec long_context_spec(uint64_t seed, double duration_s) {
    SynthSpec s = precursor_spec(seed, duration_s);
    s.band_amps = {20.0, 0.0, 0.0, 0.0, 0.0};
    s.noise_amp = 1.0;
    return s;
}

struct HiddenSet {
    std::vector<Vec> hiddens;
    std::vector<int> labels;
};

HiddenSet collect_hiddens(const EncoderParams& params, const Recording& rec, StreamMode mode) {
    SessionOptions opts;
    opts.mode = mode;
    opts.reset_period_s = 5.0;
    opts.capture_hiddens = true;
    StreamSession session(params, opts);
    Trace trace = run_recording(session, rec);
    HiddenSet out;
    out.hiddens = trace.hiddens;
    out.labels = patch_labels(rec, params.config.patch_samples);
    out.labels.resize(out.hiddens.size());
    return out;
}

// Logistic head fit with numeric gradients on standardized hidden features.
struct FittedHead {
    Vec mean, inv_std, w;
    double b = 0.0;

    double score(const Vec& h) const {
        double z = b;
        for (size_t i = 0; i < w.size(); ++i) z += w[i] * (h[i] - mean[i]) * inv_std[i];
        return sigmoid(z);
    }
};

// Plain logistic regression on standardized features (closed-form gradient;
// the numeric-gradient machinery stays confined to the objective labs).
FittedHead fit_head(const HiddenSet& train, size_t steps = 400, double lr = 1.0) {
    const size_t d = train.hiddens[0].size();
    const size_t n = train.hiddens.size();
    FittedHead head;
    head.mean.assign(d, 0.0);
    head.inv_std.assign(d, 1.0);
    for (const Vec& h : train.hiddens)
        for (size_t i = 0; i < d; ++i) head.mean[i] += h[i];
    for (size_t i = 0; i < d; ++i) head.mean[i] /= static_cast<double>(n);
    Vec var(d, 0.0);
    for (const Vec& h : train.hiddens)
        for (size_t i = 0; i < d; ++i) var[i] += (h[i] - head.mean[i]) * (h[i] - head.mean[i]);
    for (size_t i = 0; i < d; ++i)
        head.inv_std[i] = 1.0 / std::sqrt(var[i] / static_cast<double>(n) + 1e-9);

    std::vector<Vec> x(n, Vec(d));
    for (size_t r = 0; r < n; ++r)
        for (size_t i = 0; i < d; ++i)
            x[r][i] = (train.hiddens[r][i] - head.mean[i]) * head.inv_std[i];

    Vec theta(d + 1, 0.0);
    for (size_t step = 0; step < steps; ++step) {
        Vec g(d + 1, 0.0);
        for (size_t r = 0; r < n; ++r) {
            double z = theta[d];
            for (size_t i = 0; i < d; ++i) z += theta[i] * x[r][i];
            const double e = sigmoid(z) - static_cast<double>(train.labels[r]);
            for (size_t i = 0; i < d; ++i) g[i] += e * x[r][i];
            g[d] += e;
        }
        for (size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * g[i] / static_cast<double>(n);
    }
    head.w.assign(theta.begin(), theta.begin() + static_cast<long>(d));
    head.b = theta[d];
    return head;
}

void append_hiddens(HiddenSet& a, const HiddenSet& b) {
    a.hiddens.insert(a.hiddens.end(), b.hiddens.begin(), b.hiddens.end());
    a.labels.insert(a.labels.end(), b.labels.begin(), b.labels.end());
}

double head_auroc(const FittedHead& head, const HiddenSet& set) {
    ScoredSet scored;
    for (size_t i = 0; i < set.hiddens.size(); ++i)
        scored.push_back({head.score(set.hiddens[i]), set.labels[i]});
    return auroc(scored);
}

// ---------------------------------------------------------------- criteria

bool c1_equivalence(std::string& detail) {
    const double t0 = now_s();
    EquivalenceReport sweep = equivalence_report(sweep_config(), 30, 3, 80, 42);
    EquivalenceReport paper = equivalence_report(ModelConfig::paper(), 1, 1, 80, 7);
    const double elapsed = now_s() - t0;
    detail = fmt("sweep 30x3: logit %.2e prob %.2e agree %.4f; default-width spot: %.2e; %.1f s",
                 sweep.max_logit_diff, sweep.max_prob_diff, sweep.label_agreement,
                 paper.max_logit_diff, elapsed);
    return sweep.max_logit_diff <= 1e-9 && sweep.max_prob_diff <= 1e-10 &&
           sweep.label_agreement == 1.0 && paper.max_logit_diff <= 1e-9 &&
           paper.max_prob_diff <= 1e-10 && paper.label_agreement == 1.0 && elapsed <= 60.0;
}

bool c2_flops(std::string& detail) {
    FlopReport rep = flop_report(ModelConfig::paper(), 16.0);
    const double ffn_err = std::abs(rep.ffns - 47.60e6) / 47.60e6;
    const double total_err = std::abs(rep.total - 76.76e6) / 76.76e6;
    const bool sustained_ok = rep.sustained_flops_per_s == rep.total * 16.0;
    const double ref_sustained = 76.76e6 * 16.0;
    const bool ref_ok = std::abs(ref_sustained - 1.23e9) / 1.23e9 < 0.005;
    detail = fmt("ffns %.4gM (err %.3f%%), total %.4gM (err %.1f%%), sustained %.4g, ref 16Hz -> %.4g",
                 rep.ffns / 1e6, ffn_err * 100, rep.total / 1e6, total_err * 100,
                 rep.sustained_flops_per_s, ref_sustained);
    return ffn_err <= 0.005 && total_err <= 0.25 && sustained_ok && ref_ok;
}

bool c3_state(std::string& detail) {
    StateReport rep = state_bytes(ModelConfig::paper());
    bool ok = rep.ssm_state_bytes == 720896;

    ModelConfig mc = causality_config();
    EncoderParams params = EncoderParams::init(mc, 3);
    SessionOptions opts;
    opts.rqn_window = 256;
    StreamSession session(params, opts);
    CounterRng rng(4);
    Mat patch(mc.n_channels, mc.patch_samples);
    for (double& v : patch.a) v = rng.normal();
    session.step(patch);
    const size_t at_first = session.measured_bytes();
    for (size_t i = 1; i < 100000; ++i) session.step(patch);
    const size_t at_last = session.measured_bytes();
    ok = ok && at_first == at_last;
    detail = fmt("ssm_state_bytes=%zu; live bytes @1=%zu @1e5=%zu", rep.ssm_state_bytes, at_first,
                 at_last);
    return ok;
}

bool c4_latency(std::string& detail) {
    auto stats = latency_bench(ablation_config(), {5.0, 3600.0}, 1000, 50, 11);
    const double rel =
        std::abs(stats[0].mean_s - stats[1].mean_s) / std::max(stats[0].mean_s, stats[1].mean_s);
    detail = fmt("mean 5s ctx %.3f ms vs 1h ctx %.3f ms (rel diff %.1f%%)", stats[0].mean_s * 1e3,
                 stats[1].mean_s * 1e3, rel * 100);
    return rel < 0.20;
}

bool c5_causality(std::string& detail) {
    ModelConfig mc = causality_config();
    EncoderParams params = EncoderParams::init(mc, 5);
    CounterRng rng(6);
    size_t fails = 0;

    for (int trial = 0; trial < 100; ++trial) {
        const size_t g = 16;
        const size_t cut = 1 + rng.next_below(g - 1);
        Mat tokens(g, mc.d_model);
        for (double& v : tokens.a) v = rng.normal();
        EncoderState s1(mc), s2(mc);
        Mat base = encode_token_sequence(params, s1, tokens);
        Mat perturbed_tokens = tokens;
        perturbed_tokens.at(cut, rng.next_below(mc.d_model)) += 3.0;
        Mat pert = encode_token_sequence(params, s2, perturbed_tokens);
        for (size_t t = 0; t < cut; ++t)
            for (size_t i = 0; i < mc.d_model; ++i)
                if (base.at(t, i) != pert.at(t, i)) ++fails;
    }

    for (int trial = 0; trial < 100; ++trial) {
        const size_t n = 200;
        const size_t cut = 1 + rng.next_below(n - 1);
        Vec sig(n);
        for (double& v : sig) v = rng.normal();
        RqnState a(1, 64), b(1, 64);
        Vec sig2 = sig;
        for (size_t t = cut; t < n; ++t) sig2[t] += 50.0;
        for (size_t t = 0; t < cut; ++t)
            if (a.step({sig[t]})[0] != b.step({sig2[t]})[0]) ++fails;
    }

    // teacher latent targets (stage-2) and clean-token ARM targets (stage-1)
    for (int trial = 0; trial < 100; ++trial) {
        const size_t g = 12;
        const size_t cut = 1 + rng.next_below(g - 1);
        Mat tokens(g, mc.d_model);
        for (double& v : tokens.a) v = rng.normal();
        Mat t1 = teacher_targets(params, tokens);
        Mat tokens2 = tokens;
        for (size_t i = 0; i < mc.d_model; ++i) tokens2.at(cut, i) -= 2.0;
        Mat t2 = teacher_targets(params, tokens2);
        for (size_t t = 0; t < cut; ++t)
            for (size_t i = 0; i < mc.d_model; ++i)
                if (t1.at(t, i) != t2.at(t, i)) ++fails;
    }
    detail = fmt("encoder + rqn + ssl targets, 100 randomized trials each, %zu mismatches", fails);
    return fails == 0;
}

bool c6_rqn_oracle(std::string& detail) {
    const size_t w = 1280, n = 10000;
    RqnState st(2, w);
    CounterRng rng(12);
    std::vector<Vec> history(2);
    double walk = 0.0;
    double max_err = 0.0;
    for (size_t t = 0; t < n; ++t) {
        walk += rng.normal();
        const double heavy = rng.normal() * (rng.next_double() < 0.02 ? 50.0 : 1.0);
        const Vec sample{walk, heavy};
        Vec got = st.step(sample);
        for (size_t c = 0; c < 2; ++c) {
            history[c].push_back(sample[c]);
            const size_t lo = history[c].size() > w ? history[c].size() - w : 0;
            Vec window(history[c].begin() + static_cast<long>(lo), history[c].end());
            std::sort(window.begin(), window.end());
            const double med = sorted_quantile(window, 0.5);
            const double iqr = sorted_quantile(window, 0.75) - sorted_quantile(window, 0.25);
            max_err = std::max(max_err, std::abs(got[c] - (sample[c] - med) / (iqr + 1e-6)));
        }
    }
    RqnState cst(1, w);
    bool const_ok = true;
    for (size_t t = 0; t < 2000; ++t) const_ok = const_ok && cst.step({4.2})[0] == 0.0;
    detail = fmt("max |stream - sort oracle| = %.2e over 1e4 steps; constant input exact zero: %s",
                 max_err, const_ok ? "yes" : "no");
    return max_err <= 1e-12 && const_ok;
}

bool c7_filters(std::string& detail) {
    auto db = [](double m) { return 20.0 * std::log10(std::max(m, 1e-30)); };
    BiquadCascade bp = design_butterworth(4, FilterKind::bandpass, {0.1, 75.0}, 256.0);
    const double lo_edge = db(bp.magnitude_at(0.1, 256.0));
    const double hi_edge = db(bp.magnitude_at(75.0, 256.0));
    bool ok = std::abs(lo_edge + 3.0103) <= 0.5 && std::abs(hi_edge + 3.0103) <= 0.5;

    BiquadCascade notch = design_butterworth(4, FilterKind::bandstop, {58.0, 62.0}, 256.0);
    const double at60 = db(notch.magnitude_at(60.0, 256.0));
    ok = ok && at60 <= -30.0;

    // zero-phase check: peak cross-correlation lag must be zero
    Vec x(4096);
    for (size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(2.0 * 3.14159265358979323846 * 10.0 * static_cast<double>(i) / 256.0);
    Vec y = filtfilt(bp, x);
    int best_lag = 0;
    double best = -1e300;
    for (int lag = -8; lag <= 8; ++lag) {
        double acc = 0.0;
        for (size_t i = 256; i + 256 < x.size(); ++i) {
            const long j = static_cast<long>(i) + lag;
            acc += x[i] * y[static_cast<size_t>(j)];
        }
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    ok = ok && best_lag == 0;

    double worst_pole = std::max(bp.max_pole_magnitude(), notch.max_pole_magnitude());
    for (const char* band : {"delta", "theta", "alpha", "beta", "gamma"}) {
        const BandRange r = band_range(band);
        worst_pole = std::max(
            worst_pole,
            design_butterworth(4, FilterKind::bandstop, {r.lo_hz, r.hi_hz}, 256.0).max_pole_magnitude());
    }
    ok = ok && worst_pole < 1.0 - 1e-6;
    detail = fmt("edges %.2f/%.2f dB, notch %.1f dB, filtfilt lag %d, worst pole %.8f", lo_edge,
                 hi_edge, at60, best_lag, worst_pole);
    return ok;
}

bool c8_persistent_direction(std::string& detail) {
    const double t0 = now_s();
    size_t wins = 0;
    std::string per_seed;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        EncoderParams params = EncoderParams::init(ablation_config(), 900 + seed);
        Recording train_a = gen_recording(long_context_spec(1000 + seed, 150.0));
        Recording train_b = gen_recording(long_context_spec(3000 + seed, 150.0));
        Recording test_rec = gen_recording(long_context_spec(2000 + seed, 150.0));

        double auc[2];
        for (int m = 0; m < 2; ++m) {
            const StreamMode mode = m == 0 ? StreamMode::persistent : StreamMode::windowed;
            HiddenSet train = collect_hiddens(params, train_a, mode);
            append_hiddens(train, collect_hiddens(params, train_b, mode));
            HiddenSet test = collect_hiddens(params, test_rec, mode);
            FittedHead head = fit_head(train);
            auc[m] = head_auroc(head, test);
        }
        wins += auc[0] >= auc[1] ? 1 : 0;
        per_seed += fmt(" s%llu:%.3f/%.3f", static_cast<unsigned long long>(seed), auc[0], auc[1]);
    }
    const double elapsed = now_s() - t0;
    detail = fmt("persistent/windowed AUROC per seed:%s -> %zu/5 wins, %.0f s", per_seed.c_str(),
                 wins, elapsed);
    return wins >= 4 && elapsed <= 600.0;
}

bool c9_band_ablation(std::string& detail) {
    SynthSpec spec = precursor_spec(7001, 150.0);
    spec.events.duration_s = 12.0;
    spec.events.precursor_lead_s = 4.0;
    Recording train_a = gen_recording(spec);
    spec.seed = 7003;
    Recording train_b = gen_recording(spec);
    spec.seed = 7002;
    Recording test_rec = gen_recording(spec);

    EncoderParams params = EncoderParams::init(ablation_config(), 77);
    HiddenSet train = collect_hiddens(params, train_a, StreamMode::persistent);
    append_hiddens(train, collect_hiddens(params, train_b, StreamMode::persistent));
    FittedHead head = fit_head(train);

    HiddenSet clean = collect_hiddens(params, test_rec, StreamMode::persistent);
    const double base = head_auroc(head, clean);

    std::string table;
    double delta_drop = 0.0, best_other = -1e9;
    for (const char* band : {"delta", "theta", "alpha", "beta", "gamma"}) {
        Recording ablated = test_rec;
        ablated.samples = band_stop_ablate(test_rec.samples, band, test_rec.fs);
        HiddenSet hs = collect_hiddens(params, ablated, StreamMode::persistent);
        const double drop = base - head_auroc(head, hs);
        table += fmt(" %s:%.3f", band, drop);
        if (std::string(band) == "delta")
            delta_drop = drop;
        else
            best_other = std::max(best_other, drop);
    }
    detail = fmt("baseline %.3f, drops:%s", base, table.c_str());
    return delta_drop > best_other;
}

bool c10_ssl(std::string& detail) {
    // mask cardinality across sizes and ratios
    CounterRng rng(21);
    bool mask_ok = true;
    for (size_t g : {10u, 20u, 40u, 80u})
        for (double ratio : {0.25, 0.4, 0.5}) {
            MaskSpec m = make_token_mask(g, ratio, 3, rng);
            mask_ok = mask_ok &&
                      m.indices.size() == static_cast<size_t>(std::llround(ratio * static_cast<double>(g)));
        }

    // oracle-predictor zeros
    ModelConfig mc = ModelConfig::micro();
    SslHeads heads = SslHeads::init(mc, 3, 8, rng);
    std::fill(heads.g_w.a.begin(), heads.g_w.a.end(), 0.0);
    for (size_t i = 0; i < mc.d_model; ++i) heads.g_w.at(i, i) = 1.0;
    std::fill(heads.g_b.begin(), heads.g_b.end(), 0.0);
    Mat targets(6, mc.d_model);
    for (double& v : targets.a) v = rng.normal();
    Mat hiddens(6, mc.d_model);
    for (size_t t = 0; t + 1 < 6; ++t)
        for (size_t i = 0; i < mc.d_model; ++i) hiddens.at(t, i) = targets.at(t + 1, i);
    const bool zero_ok = arm_loss(hiddens, targets, heads) == 0.0;

    std::fill(heads.gmask_w.a.begin(), heads.gmask_w.a.end(), 0.0);
    for (size_t i = 0; i < mc.d_model; ++i) heads.gmask_w.at(i, i) = 1.0;
    std::fill(heads.gmask_b.begin(), heads.gmask_b.end(), 0.0);
    MaskSpec mk;
    mk.indices = {1, 3};
    const bool jepa_ok = jepa_masked_loss(hiddens, hiddens, mk, heads) == 0.0;

    // EMA geometric convergence
    Vec student(50), phi(50);
    for (double& v : student) v = rng.normal();
    for (double& v : phi) v = rng.normal();
    double gap0 = 0.0;
    for (size_t i = 0; i < 50; ++i) gap0 += (phi[i] - student[i]) * (phi[i] - student[i]);
    gap0 = std::sqrt(gap0);
    bool ema_ok = true;
    const double tau = 0.97;
    Vec phi_n = phi;
    for (int n = 1; n <= 80; ++n) {
        ema_update(phi_n, student, tau);
        double gap = 0.0;
        for (size_t i = 0; i < 50; ++i) gap += (phi_n[i] - student[i]) * (phi_n[i] - student[i]);
        gap = std::sqrt(gap);
        ema_ok = ema_ok && std::abs(gap - std::pow(tau, n) * gap0) <= 1e-10;
    }

    // 200-step toy training on three seeds per stage
    std::string curves;
    bool train_ok = true;
    for (int stage : {1, 2}) {
        for (uint64_t seed : {42ull, 43ull, 44ull}) {
            ToyTrainConfig cfg;
            cfg.steps = 200;
            cfg.seed = seed;
            Vec curve = toy_train(stage, cfg);
            const double ratio = curve.back() / curve.front();
            curves += fmt(" s%d/%llu:%.2f", stage, static_cast<unsigned long long>(seed), ratio);
            train_ok = train_ok && ratio <= 0.7;
        }
    }
    detail = fmt("mask %s, oracle-zero %s, ema %s, loss ratios:%s", mask_ok ? "ok" : "BAD",
                 (zero_ok && jepa_ok) ? "ok" : "BAD", ema_ok ? "ok" : "BAD", curves.c_str());
    return mask_ok && zero_ok && jepa_ok && ema_ok && train_ok;
}

bool c11_flowlab(std::string& detail) {
    bool fixed_ok = true;
    for (size_t depth : {2u, 3u})
        for (double rho : {0.3, 0.5, 0.7}) {
            FlowLabSpec spec;
            spec.depth = depth;
            spec.rho = rho;
            spec.init_scale = 1e-6;
            spec.objective = FlowObjective::MAE;
            fixed_ok = fixed_ok &&
                       std::abs(deep_linear_flow(spec).terminal_w -
                                std::pow(rho, static_cast<double>(depth) / (depth + 1.0))) < 1e-3;
            spec.objective = FlowObjective::JEPA;
            fixed_ok = fixed_ok &&
                       std::abs(deep_linear_flow(spec).terminal_w -
                                std::pow(rho, static_cast<double>(depth))) < 1e-3;
        }

    auto escape = [](FlowObjective obj, size_t depth, double rho, double eps) {
        FlowLabSpec spec;
        spec.objective = obj;
        spec.depth = depth;
        spec.rho = rho;
        spec.init_scale = eps;
        return deep_linear_flow(spec).escape_time;
    };
    const double j3 = escape(FlowObjective::JEPA, 2, 0.3, 1e-8);
    const double j5 = escape(FlowObjective::JEPA, 2, 0.5, 1e-8);
    const double j7 = escape(FlowObjective::JEPA, 2, 0.7, 1e-8);
    const bool jepa_order = j3 > j5 && j5 > j7;
    const double m3 = escape(FlowObjective::MAE, 2, 0.3, 1e-8);
    const double m7 = escape(FlowObjective::MAE, 2, 0.7, 1e-8);
    const bool mae_flat = std::abs(m3 - m7) / m7 < 0.05;

    bool slope_ok = true;
    std::string slopes;
    for (size_t depth : {2u, 3u}) {
        Vec le, lt;
        for (double eps : {1e-5, 1e-6, 1e-7, 1e-8}) {
            le.push_back(std::log(eps));
            lt.push_back(std::log(escape(FlowObjective::JEPA, depth, 0.5, eps)));
        }
        double mx = 0, my = 0;
        for (size_t i = 0; i < 4; ++i) {
            mx += le[i];
            my += lt[i];
        }
        mx /= 4;
        my /= 4;
        double num = 0, den = 0;
        for (size_t i = 0; i < 4; ++i) {
            num += (le[i] - mx) * (lt[i] - my);
            den += (le[i] - mx) * (le[i] - mx);
        }
        const double slope = num / den;
        const double expect = -(2.0 * static_cast<double>(depth) - 1.0) / static_cast<double>(depth);
        slopes += fmt(" L%zu:%.3f(ref %.3f)", depth, slope, expect);
        slope_ok = slope_ok && std::abs(slope - expect) / std::abs(expect) < 0.15;
    }
    detail = fmt("fixed points %s; jepa t* %.3g>%.3g>%.3g, mae rel gap %.3f; slopes%s",
                 fixed_ok ? "ok" : "BAD", j3, j5, j7, std::abs(m3 - m7) / m7, slopes.c_str());
    return fixed_ok && jepa_order && mae_flat && slope_ok;
}

bool c12_metrics(std::string& detail) {
    // pairwise oracle, exhaustive over labelings of tied score multisets
    auto auroc_oracle = [](const ScoredSet& set) {
        double wins = 0.0;
        size_t pairs = 0;
        for (const Scored& p : set) {
            if (!p.label) continue;
            for (const Scored& n : set) {
                if (n.label) continue;
                ++pairs;
                wins += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
            }
        }
        return wins / static_cast<double>(pairs);
    };
    auto aupr_oracle = [](const ScoredSet& set) {
        std::vector<double> th;
        for (const Scored& s : set) th.push_back(s.score);
        std::sort(th.begin(), th.end(), std::greater<double>());
        th.erase(std::unique(th.begin(), th.end()), th.end());
        size_t pos = 0;
        for (const Scored& s : set) pos += s.label ? 1 : 0;
        std::vector<std::pair<double, double>> pr;
        for (double t : th) {
            size_t tp = 0, fp = 0;
            for (const Scored& s : set)
                if (s.score >= t) (s.label ? tp : fp) += 1;
            pr.emplace_back(static_cast<double>(tp) / pos, static_cast<double>(tp) / (tp + fp));
        }
        double area = 0.0, prev = 0.0;
        for (size_t i = 0; i < pr.size(); ++i) {
            double env = 0.0;
            for (size_t j = i; j < pr.size(); ++j) env = std::max(env, pr[j].second);
            area += (pr[i].first - prev) * env;
            prev = pr[i].first;
        }
        return area;
    };

    const Vec grid{0.1, 0.2, 0.2, 0.5, 0.5, 0.5, 0.8, 0.9};
    size_t cases = 0;
    double max_aupr_err = 0.0;
    bool auroc_exact = true;
    for (size_t n = 2; n <= 8; ++n) {
        for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
            ScoredSet s;
            for (size_t i = 0; i < n; ++i) s.push_back({grid[i], (mask >> i) & 1u ? 1 : 0});
            auroc_exact = auroc_exact && auroc(s) == auroc_oracle(s);
            max_aupr_err = std::max(max_aupr_err, std::abs(aupr(s) - aupr_oracle(s)));
            ++cases;
        }
    }

    CounterRng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        ScoredSet s;
        bool pos = false, neg = false;
        for (int i = 0; i < 50; ++i) {
            Scored v{std::round(rng.next_double() * 20.0) / 20.0, rng.next_double() < 0.35 ? 1 : 0};
            pos |= v.label == 1;
            neg |= v.label == 0;
            s.push_back(v);
        }
        if (!pos) s[0].label = 1;
        if (!neg) s[1].label = 0;
        auroc_exact = auroc_exact && auroc(s) == auroc_oracle(s);
        max_aupr_err = std::max(max_aupr_err, std::abs(aupr(s) - aupr_oracle(s)));
        ++cases;
    }

    // balanced accuracy against an exhaustive threshold sweep
    bool bac_ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        ScoredSet s;
        bool pos = false, neg = false;
        for (int i = 0; i < 20; ++i) {
            Scored v{std::round(rng.next_double() * 10.0) / 10.0, rng.next_double() < 0.5 ? 1 : 0};
            pos |= v.label == 1;
            neg |= v.label == 0;
            s.push_back(v);
        }
        if (!pos) s[0].label = 1;
        if (!neg) s[1].label = 0;
        const double yt = youden_threshold(s);
        double best_j = -2.0, best_t = 0.0;
        std::vector<double> th;
        for (const Scored& v : s) th.push_back(v.score);
        std::sort(th.begin(), th.end());
        th.erase(std::unique(th.begin(), th.end()), th.end());
        size_t pos_n = 0, neg_n = 0;
        for (const Scored& v : s) (v.label ? pos_n : neg_n) += 1;
        for (double t : th) {
            size_t tp = 0, fp = 0;
            for (const Scored& v : s)
                if (v.score >= t) (v.label ? tp : fp) += 1;
            const double j = static_cast<double>(tp) / pos_n - static_cast<double>(fp) / neg_n;
            if (j > best_j) {
                best_j = j;
                best_t = t;
            }
        }
        bac_ok = bac_ok && yt == best_t;
    }
    detail = fmt("%zu cases: auroc exact %s, aupr max err %.2e, youden sweep %s", cases,
                 auroc_exact ? "yes" : "NO", max_aupr_err, bac_ok ? "ok" : "BAD");
    return auroc_exact && max_aupr_err <= 1e-12 && bac_ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "streaming-parallel equivalence (30x3, f64)", c1_equivalence},
        {2, "analytical FLOP accounting", c2_flops},
        {3, "persistent state byte accounting", c3_state},
        {4, "latency constant in context length", c4_latency},
        {5, "causality suite (encoder, RQN, SSL targets)", c5_causality},
        {6, "streaming RQN equals sort oracle", c6_rqn_oracle},
        {7, "filter design suite", c7_filters},
        {8, "persistent >= windowed AUROC on precursor events", c8_persistent_direction},
        {9, "delta band-stop causes the largest AUROC drop", c9_band_ablation},
        {10, "SSL invariants and 200-step toy training", c10_ssl},
        {11, "deep-linear flow lab", c11_flowlab},
        {12, "metric oracles (exhaustive + pairwise)", c12_metrics},
    };

    int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failures = 0;
    for (const Criterion& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %2d. %s — %s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    detail.c_str());
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }
    if (failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria FAILED\n", failures);
    return failures;
}
