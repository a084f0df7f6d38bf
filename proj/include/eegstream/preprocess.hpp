#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "eegstream/tensor.hpp"

namespace eegstream {

struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

// Cascade of second-order sections with per-section delay state
// (direct form II transposed). Single-owner streaming object.
struct BiquadCascade {
    std::vector<Biquad> sections;
    std::vector<std::array<double, 2>> state;

    void reset();
    // Largest pole magnitude across sections.
    double max_pole_magnitude() const;
    // |H(e^{j 2 pi f / fs})|
    double magnitude_at(double freq_hz, double fs_hz) const;
};

enum class FilterKind { lowpass, highpass, bandpass, bandstop };

// Analog Butterworth prototype -> frequency transform -> bilinear transform
// with prewarping -> second-order sections. `order` is the prototype order;
// bandpass/bandstop double it.
BiquadCascade design_butterworth(size_t order, FilterKind kind, const std::vector<double>& cutoffs_hz,
                                 double fs_hz);

// Strictly causal single-sample update through the cascade.
double causal_filter_step(BiquadCascade& cascade, double sample);

// Causal filtering of a whole signal (zero initial state).
Vec filter_forward(const BiquadCascade& cascade, const Vec& x);

// Zero-phase filtering: odd-reflection padding, forward pass, reverse,
// forward again, reverse. Squares the magnitude response.
Vec filtfilt(const BiquadCascade& cascade, const Vec& x);
Mat filtfilt(const BiquadCascade& cascade, const Mat& x);

// Windowed-sinc rational resampling; per-sample kernel normalization keeps
// DC exact. Output length = round(len * fs_out / fs_in).
Vec resample(const Vec& x, double fs_in, double fs_out = 256.0);
Mat resample(const Mat& x, double fs_in, double fs_out = 256.0);

// Ordered (anode, cathode) electrode pairs; out[k] = anode - cathode.
using MontageMap = std::vector<std::pair<std::string, std::string>>;

// The standard 22-derivation longitudinal bipolar (double banana) map.
const MontageMap& double_banana_22();

Mat bipolar_montage(const Mat& unipolar, const std::vector<std::string>& electrode_names,
                    const MontageMap& map);

// Window-level robust quartile normalization: per channel
// (x - median) / (IQR + 1e-6), quartiles by linear interpolation of order
// statistics.
Mat rqn_window(const Mat& window);

// Quartile of an ascending-sorted range, linear interpolation convention
// h = (n-1) q.
double sorted_quantile(const Vec& sorted, double q);

// Causal sliding RQN over a ring buffer of the last `window` samples per
// channel. Order statistics are exact: a sorted copy of the buffer is
// maintained alongside the ring.
class RqnState {
public:
    explicit RqnState(size_t n_channels, size_t window = 1280, double eps = 1e-6);
    RqnState() = default;

    // Normalize one multichannel sample and absorb it into the buffers.
    Vec step(const Vec& sample);
    double step_channel(size_t channel, double x);

    size_t channels() const { return ring_.size(); }
    size_t window() const { return window_; }
    size_t fill(size_t channel) const { return fill_[channel]; }
    size_t buffer_bytes(size_t precision_bytes) const;

private:
    size_t window_ = 0;
    double eps_ = 1e-6;
    std::vector<Vec> ring_;
    std::vector<Vec> sorted_;
    std::vector<size_t> fill_;
    std::vector<size_t> head_;
};

struct BandRange {
    double lo_hz, hi_hz;
};

// Canonical EEG bands: delta 0.5-4, theta 4-8, alpha 8-13, beta 13-30,
// gamma 30-75.
BandRange band_range(const std::string& band);

// Zero-phase 4th-order Butterworth band-stop at the named band's edges.
Mat band_stop_ablate(const Mat& signal, const std::string& band, double fs_hz = 256.0);

}  // namespace eegstream
