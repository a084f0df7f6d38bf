#include "eegstream/synth.hpp"

#include <cmath>
#include <fstream>

#include "eegstream/checkpoint.hpp"  // crc32
#include "eegstream/preprocess.hpp"  // band_range
#include "eegstream/rng.hpp"
#include "binio.hpp"

#include <json.hpp>

namespace eegstream {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr char kMagic[4] = {'E', 'E', 'G', 'R'};
constexpr uint32_t kVersion = 1;

const char* kBandNames[5] = {"delta", "theta", "alpha", "beta", "gamma"};

// Deterministic sample count for a Poisson-like arrival process.
size_t arrival_count(double expected, CounterRng& rng) {
    const size_t base = static_cast<size_t>(expected);
    const double frac = expected - static_cast<double>(base);
    return base + (rng.next_double() < frac ? 1 : 0);
}

void add_windowed_burst(Mat& x, size_t channel, size_t start, size_t len, double freq_hz,
                        double phase, double amp, double fs) {
    const size_t t1 = std::min(x.cols, start + len);
    for (size_t t = start; t < t1; ++t) {
        const double u = static_cast<double>(t - start) / static_cast<double>(len);
        const double win = 0.5 - 0.5 * std::cos(kTwoPi * u);  // Hann
        x.at(channel, t) += amp * win * std::sin(kTwoPi * freq_hz * static_cast<double>(t) / fs + phase);
    }
}

}  // namespace

double BandAmps::of(const std::string& band) const {
    if (band == "delta") return delta;
    if (band == "theta") return theta;
    if (band == "alpha") return alpha;
    if (band == "beta") return beta;
    if (band == "gamma") return gamma;
    throw argument_error("BandAmps: unknown band " + band);
}

void Recording::validate() const {
    check(fs > 0.0, "recording: fs must be > 0");
    check(channel_names.size() == samples.rows, "recording: channel name count mismatch");
    for (double v : samples.a)
        if (!std::isfinite(v)) throw numeric_error("recording: non-finite sample");
    for (const Annotation& a : annotations)
        check(a.onset_s >= 0.0 && a.onset_s < a.offset_s && a.offset_s <= duration_s() + 1e-9,
              "recording: annotation outside signal");
}

Recording gen_recording(const SynthSpec& spec) {
    check(spec.fs > 0.0 && spec.n_channels >= 1 && spec.duration_s > 0.0,
          "gen_recording: invalid spec");
    const size_t t_len = static_cast<size_t>(spec.duration_s * spec.fs);
    const size_t c_len = spec.n_channels;
    CounterRng root(spec.seed);

    Recording rec;
    rec.fs = spec.fs;
    rec.samples = Mat(c_len, t_len);
    for (size_t c = 0; c < c_len; ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "CH%02zu", c + 1);
        rec.channel_names.emplace_back(name);
    }

    // Event placement first: the per-sample carrier gain multiplies the
    // band oscillators below. Events draw from their own stream so the
    // background is unchanged when events are disabled.
    Vec carrier_gain(t_len, 1.0);
    size_t carrier_band_index = 0;
    if (spec.events.rate_per_min > 0.0) {
        for (size_t b = 0; b < 5; ++b)
            if (spec.events.carrier_band == kBandNames[b]) carrier_band_index = b;
        check(spec.events.carrier_band == kBandNames[carrier_band_index],
              "gen_recording: unknown carrier band " + spec.events.carrier_band);
        CounterRng ev = root.fork(3000);
        const double lead = spec.events.precursor_lead_s;
        const double ramp_s = 1.0;
        const double pg = 1.0 + 0.25 * (spec.events.amplitude_gain - 1.0);
        // Stratified placement: one slot per expected event, jittered inside
        // the slot, so the configured rate is honored on every seed.
        const double span = spec.duration_s - lead - 4.0;
        const double footprint = spec.events.duration_s + lead + 2.0;
        size_t n_events = static_cast<size_t>(
            std::llround(spec.events.rate_per_min * spec.duration_s / 60.0));
        if (span > footprint && n_events > 0) {
            n_events = std::min(n_events, static_cast<size_t>(span / footprint));
        } else {
            n_events = 0;
        }
        const double slot = n_events ? span / static_cast<double>(n_events) : 0.0;
        for (size_t k = 0; k < n_events; ++k) {
            const double jitter = ev.uniform(0.0, std::max(0.0, slot - footprint));
            const double onset = lead + 2.0 + static_cast<double>(k) * slot + jitter;
            const long onset_i = std::lround(onset * spec.fs);
            const long offset_i = onset_i + std::lround(spec.events.duration_s * spec.fs);
            const long lead_i = std::lround(lead * spec.fs);
            const long ramp_i = std::lround(ramp_s * spec.fs);
            for (long t = std::max(0L, onset_i - lead_i); t < onset_i; ++t) {
                const double u = static_cast<double>(t - (onset_i - lead_i)) /
                                 static_cast<double>(lead_i);
                carrier_gain[static_cast<size_t>(t)] = 1.0 + (pg - 1.0) * u;
            }
            for (long t = onset_i; t < std::min<long>(offset_i, static_cast<long>(t_len)); ++t) {
                const double ramp =
                    (t - onset_i < ramp_i)
                        ? static_cast<double>(t - onset_i) / static_cast<double>(ramp_i)
                        : 1.0;
                carrier_gain[static_cast<size_t>(t)] =
                    1.0 + (spec.events.amplitude_gain - 1.0) * ramp;
            }
            rec.annotations.push_back({static_cast<double>(onset_i) / spec.fs,
                                       static_cast<double>(offset_i) / spec.fs, "seizure"});
        }
    }

    // Band oscillators with slowly wandering in-band frequency.
    for (size_t c = 0; c < c_len; ++c) {
        for (size_t b = 0; b < 5; ++b) {
            const double amp = spec.band_amps.of(kBandNames[b]);
            if (amp <= 0.0) continue;
            const BandRange r = band_range(kBandNames[b]);
            CounterRng rng = root.fork(c * 8 + b);
            const double f_center = 0.5 * (r.lo_hz + r.hi_hz);
            const double f_span = 0.35 * (r.hi_hz - r.lo_hz);
            const double f_mod = rng.uniform(0.02, 0.08);
            const double mod_phase = rng.uniform(0.0, kTwoPi);
            double phase = rng.uniform(0.0, kTwoPi);
            const bool carries_event = (spec.events.rate_per_min > 0.0 && b == carrier_band_index);
            for (size_t t = 0; t < t_len; ++t) {
                const double ts = static_cast<double>(t) / spec.fs;
                const double f = f_center + f_span * std::sin(kTwoPi * f_mod * ts + mod_phase);
                phase += kTwoPi * f / spec.fs;
                const double g = carries_event ? carrier_gain[t] : 1.0;
                rec.samples.at(c, t) += amp * g * std::sin(phase);
            }
        }
    }

    // 1/f-shaped noise (Voss-McCartney rows).
    if (spec.noise_amp > 0.0) {
        constexpr size_t kRows = 16;
        for (size_t c = 0; c < c_len; ++c) {
            CounterRng rng = root.fork(1000 + c);
            double rows[kRows];
            for (double& r : rows) r = rng.uniform(-1.0, 1.0);
            const double scale = spec.noise_amp / std::sqrt(static_cast<double>(kRows));
            for (size_t t = 0; t < t_len; ++t) {
                for (size_t k = 0; k < kRows; ++k)
                    if ((t & ((1ull << k) - 1)) == 0) rows[k] = rng.uniform(-1.0, 1.0);
                double s = 0.0;
                for (size_t k = 0; k < kRows; ++k) s += rows[k];
                rec.samples.at(c, t) += scale * s;
            }
        }
    }

    // Artifacts: blinks (frontal slow bumps), muscle bursts, electrode pops.
    const double minutes = spec.duration_s / 60.0;
    {
        CounterRng rng = root.fork(2000);
        const size_t n = arrival_count(spec.blink_per_min * minutes, rng);
        const size_t frontal = std::max<size_t>(1, c_len / 4);
        for (size_t i = 0; i < n; ++i) {
            const size_t start = rng.next_below(t_len);
            const size_t len = static_cast<size_t>(0.4 * spec.fs);
            const double phase = rng.uniform(0.0, kTwoPi);
            for (size_t c = 0; c < frontal; ++c)
                add_windowed_burst(rec.samples, c, start, len, 2.0, phase, 80.0, spec.fs);
        }
    }
    {
        CounterRng rng = root.fork(2001);
        const size_t n = arrival_count(spec.muscle_per_min * minutes, rng);
        for (size_t i = 0; i < n; ++i) {
            const size_t start = rng.next_below(t_len);
            const size_t len = static_cast<size_t>(0.6 * spec.fs);
            const double f = rng.uniform(25.0, 60.0);
            for (size_t c = 0; c < c_len; ++c) {
                if (rng.next_double() < 0.5) continue;
                add_windowed_burst(rec.samples, c, start, len, f, rng.uniform(0.0, kTwoPi), 30.0,
                                   spec.fs);
            }
        }
    }
    {
        CounterRng rng = root.fork(2002);
        const size_t n = arrival_count(spec.pop_per_min * minutes, rng);
        for (size_t i = 0; i < n; ++i) {
            const size_t start = rng.next_below(t_len);
            const size_t c = rng.next_below(c_len);
            const double amp = 200.0 * (rng.next_double() < 0.5 ? 1.0 : -1.0);
            const size_t len = static_cast<size_t>(0.3 * spec.fs);
            for (size_t t = start; t < std::min(t_len, start + len); ++t) {
                const double dt = static_cast<double>(t - start) / spec.fs;
                rec.samples.at(c, t) += amp * std::exp(-dt / 0.05);
            }
        }
    }

    rec.validate();
    return rec;
}

void write_recording(const Recording& rec, const std::string& path) {
    rec.validate();
    binio::ByteWriter w;
    w.raw(kMagic, 4);
    w.pod<uint32_t>(kVersion);
    w.pod<double>(rec.fs);
    w.pod<uint32_t>(static_cast<uint32_t>(rec.n_channels()));
    w.pod<uint64_t>(rec.n_samples());
    for (const std::string& name : rec.channel_names) w.str(name);
    for (double v : rec.samples.a) w.pod<float>(static_cast<float>(v));
    w.pod<uint32_t>(static_cast<uint32_t>(rec.annotations.size()));
    for (const Annotation& a : rec.annotations) {
        w.pod<double>(a.onset_s);
        w.pod<double>(a.offset_s);
        w.str(a.label);
    }
    w.pod<uint32_t>(crc32(w.buf.data(), w.buf.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw integrity_error("recording: cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(w.buf.data()),
            static_cast<std::streamsize>(w.buf.size()));
    if (!f) throw integrity_error("recording: write failed: " + path);
}

Recording read_recording(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw integrity_error("recording: cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw integrity_error("recording: truncated file");
    uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (crc32(bytes.data(), bytes.size() - 4) != stored)
        throw integrity_error("recording: checksum mismatch");

    binio::ByteReader r(bytes.data(), bytes.size() - 4, "recording");
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw integrity_error("recording: bad magic");
    const uint32_t version = r.pod<uint32_t>();
    if (version != kVersion)
        throw version_error("recording: unsupported version " + std::to_string(version));

    Recording rec;
    rec.fs = r.pod<double>();
    const uint32_t c_len = r.pod<uint32_t>();
    const uint64_t t_len = r.pod<uint64_t>();
    for (uint32_t c = 0; c < c_len; ++c) rec.channel_names.push_back(r.str());
    rec.samples = Mat(c_len, static_cast<size_t>(t_len));
    for (double& v : rec.samples.a) v = static_cast<double>(r.pod<float>());
    const uint32_t n_annot = r.pod<uint32_t>();
    for (uint32_t i = 0; i < n_annot; ++i) {
        Annotation a;
        a.onset_s = r.pod<double>();
        a.offset_s = r.pod<double>();
        a.label = r.str();
        rec.annotations.push_back(std::move(a));
    }
    if (r.off != r.n) throw integrity_error("recording: trailing bytes");
    rec.validate();
    return rec;
}

void write_annotations_json(const Recording& rec, const std::string& path) {
    nlohmann::json j;
    j["fs"] = rec.fs;
    j["duration_s"] = rec.duration_s();
    j["annotations"] = nlohmann::json::array();
    for (const Annotation& a : rec.annotations)
        j["annotations"].push_back({{"onset_s", a.onset_s}, {"offset_s", a.offset_s},
                                    {"label", a.label}});
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw integrity_error("annotations: cannot open for write: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace eegstream
