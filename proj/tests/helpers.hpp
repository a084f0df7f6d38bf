#pragma once

#include <cmath>
#include <vector>

#include "eegstream/rng.hpp"
#include "eegstream/tensor.hpp"

namespace testutil {

// Goertzel-style single-bin DFT power (independent spectral oracle).
inline double power_at(const eegstream::Vec& x, double fs, double freq_hz) {
    const double w = 2.0 * 3.14159265358979323846 * freq_hz / fs;
    double re = 0.0, im = 0.0;
    for (size_t n = 0; n < x.size(); ++n) {
        re += x[n] * std::cos(w * static_cast<double>(n));
        im -= x[n] * std::sin(w * static_cast<double>(n));
    }
    const double scale = static_cast<double>(x.size());
    return (re * re + im * im) / (scale * scale);
}

inline double band_power(const eegstream::Vec& x, double fs, double lo, double hi, int bins = 24) {
    double acc = 0.0;
    for (int i = 0; i < bins; ++i) {
        const double f = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / bins;
        acc += power_at(x, fs, f);
    }
    return acc / bins;
}

inline eegstream::Vec sine(double freq_hz, double fs, size_t n, double amp = 1.0,
                           double phase = 0.0) {
    eegstream::Vec x(n);
    for (size_t i = 0; i < n; ++i)
        x[i] = amp * std::sin(2.0 * 3.14159265358979323846 * freq_hz * static_cast<double>(i) / fs + phase);
    return x;
}

inline eegstream::Vec random_vec(eegstream::CounterRng& rng, size_t n, double scale = 1.0) {
    eegstream::Vec v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

inline double max_abs_diff(const eegstream::Vec& a, const eegstream::Vec& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace testutil
