#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegstream/tensor.hpp"

namespace eegstream {

struct Annotation {
    double onset_s = 0.0;
    double offset_s = 0.0;
    std::string label;
};

// Multichannel sampled signal plus event annotations.
struct Recording {
    double fs = 256.0;
    std::vector<std::string> channel_names;
    Mat samples;  // C x T
    std::vector<Annotation> annotations;

    size_t n_channels() const { return samples.rows; }
    size_t n_samples() const { return samples.cols; }
    double duration_s() const { return static_cast<double>(samples.cols) / fs; }
    void validate() const;
};

struct BandAmps {
    double delta = 20.0, theta = 10.0, alpha = 15.0, beta = 5.0, gamma = 2.0;
    double of(const std::string& band) const;
};

// Labeled "seizure" events: the carrier band's amplitude is multiplied by
// `amplitude_gain` over [onset, offset] (1 s ramp-in), preceded by a low
// precursor of gain 1 + 0.25*(gain-1) ramping up over `precursor_lead_s`.
struct EventSpec {
    double rate_per_min = 0.0;  // 0 disables events
    double duration_s = 20.0;
    std::string carrier_band = "delta";
    double amplitude_gain = 2.5;
    double precursor_lead_s = 10.0;
};

struct SynthSpec {
    double fs = 256.0;
    size_t n_channels = 22;
    double duration_s = 60.0;
    BandAmps band_amps;
    double noise_amp = 5.0;  // 1/f-shaped background
    double blink_per_min = 2.0;
    double muscle_per_min = 1.0;
    double pop_per_min = 0.3;
    EventSpec events;
    uint64_t seed = 42;
};

// Deterministic synthetic EEG: per-band oscillators with slowly wandering
// in-band frequency and random per-channel phases, 1/f noise, artifact
// bursts, and labeled events. Fully determined by spec.seed.
Recording gen_recording(const SynthSpec& spec);

// Binary container: magic, version, fs, channel table, f32 samples, the
// annotation table, and a whole-file CRC-32. Round trips are bit-exact.
void write_recording(const Recording& rec, const std::string& path);
Recording read_recording(const std::string& path);

// JSON sidecar with the annotation list.
void write_annotations_json(const Recording& rec, const std::string& path);

}  // namespace eegstream
