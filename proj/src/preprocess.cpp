#include "eegstream/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace eegstream {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

struct Zpk {
    std::vector<cplx> z, p;
    double k = 1.0;
};

Zpk butter_prototype(size_t order) {
    Zpk zpk;
    for (size_t i = 1; i <= order; ++i) {
        const double theta = kPi * (2.0 * i + order - 1.0) / (2.0 * order);
        zpk.p.emplace_back(std::cos(theta), std::sin(theta));
    }
    zpk.k = 1.0;
    return zpk;
}

cplx prod_neg(const std::vector<cplx>& v) {
    cplx r(1.0, 0.0);
    for (const cplx& x : v) r *= -x;
    return r;
}

Zpk lp2lp(const Zpk& in, double wo) {
    Zpk out;
    for (const cplx& z : in.z) out.z.push_back(z * wo);
    for (const cplx& p : in.p) out.p.push_back(p * wo);
    const int degree = static_cast<int>(in.p.size()) - static_cast<int>(in.z.size());
    out.k = in.k * std::pow(wo, degree);
    return out;
}

Zpk lp2hp(const Zpk& in, double wo) {
    Zpk out;
    for (const cplx& z : in.z) out.z.push_back(wo / z);
    for (const cplx& p : in.p) out.p.push_back(wo / p);
    const size_t degree = in.p.size() - in.z.size();
    for (size_t i = 0; i < degree; ++i) out.z.emplace_back(0.0, 0.0);
    out.k = in.k * (prod_neg(in.z) / prod_neg(in.p)).real();
    return out;
}

Zpk lp2bp(const Zpk& in, double wo, double bw) {
    Zpk out;
    for (const cplx& z : in.z) {
        const cplx zh = z * (bw / 2.0);
        const cplx disc = std::sqrt(zh * zh - wo * wo);
        out.z.push_back(zh + disc);
        out.z.push_back(zh - disc);
    }
    for (const cplx& p : in.p) {
        const cplx ph = p * (bw / 2.0);
        const cplx disc = std::sqrt(ph * ph - wo * wo);
        out.p.push_back(ph + disc);
        out.p.push_back(ph - disc);
    }
    const size_t degree = in.p.size() - in.z.size();
    for (size_t i = 0; i < degree; ++i) out.z.emplace_back(0.0, 0.0);
    out.k = in.k * std::pow(bw, degree);
    return out;
}

Zpk lp2bs(const Zpk& in, double wo, double bw) {
    Zpk out;
    for (const cplx& z : in.z) {
        const cplx zh = (bw / 2.0) / z;
        const cplx disc = std::sqrt(zh * zh - wo * wo);
        out.z.push_back(zh + disc);
        out.z.push_back(zh - disc);
    }
    for (const cplx& p : in.p) {
        const cplx ph = (bw / 2.0) / p;
        const cplx disc = std::sqrt(ph * ph - wo * wo);
        out.p.push_back(ph + disc);
        out.p.push_back(ph - disc);
    }
    const size_t degree = in.p.size() - in.z.size();
    for (size_t i = 0; i < degree; ++i) {
        out.z.emplace_back(0.0, wo);
        out.z.emplace_back(0.0, -wo);
    }
    out.k = in.k * (prod_neg(in.z) / prod_neg(in.p)).real();
    return out;
}

Zpk bilinear(const Zpk& in, double fs) {
    const double fs2 = 2.0 * fs;
    Zpk out;
    cplx num(1.0, 0.0), den(1.0, 0.0);
    for (const cplx& z : in.z) {
        out.z.push_back((fs2 + z) / (fs2 - z));
        num *= (fs2 - z);
    }
    for (const cplx& p : in.p) {
        out.p.push_back((fs2 + p) / (fs2 - p));
        den *= (fs2 - p);
    }
    const size_t degree = in.p.size() - in.z.size();
    for (size_t i = 0; i < degree; ++i) out.z.emplace_back(-1.0, 0.0);
    out.k = in.k * (num / den).real();
    return out;
}

// Group a conjugate-symmetric root set into pairs (z, conj z) or (r1, r2).
std::vector<std::pair<cplx, cplx>> pair_roots(std::vector<cplx> roots) {
    std::vector<std::pair<cplx, cplx>> pairs;
    std::vector<cplx> reals;
    std::vector<cplx> upper;
    for (const cplx& r : roots) {
        if (std::abs(r.imag()) < 1e-12)
            reals.push_back(r);
        else if (r.imag() > 0)
            upper.push_back(r);
    }
    for (const cplx& u : upper) pairs.emplace_back(u, std::conj(u));
    std::sort(reals.begin(), reals.end(),
              [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
    for (size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);
    if (reals.size() % 2 == 1) pairs.emplace_back(reals.back(), cplx(0.0, 0.0));
    return pairs;
}

BiquadCascade zpk2sos(const Zpk& zpk) {
    check(zpk.p.size() >= zpk.z.size(), "zpk2sos: more zeros than poles");
    auto pole_pairs = pair_roots(zpk.p);
    auto zero_pairs = pair_roots(zpk.z);
    // Sections ordered with poles closest to the unit circle last; each pole
    // pair takes the nearest remaining zero pair.
    std::sort(pole_pairs.begin(), pole_pairs.end(),
              [](const auto& a, const auto& b) { return std::abs(a.first) < std::abs(b.first); });

    BiquadCascade cascade;
    std::vector<bool> used(zero_pairs.size(), false);
    for (const auto& pp : pole_pairs) {
        Biquad bq;
        bq.a1 = -(pp.first + pp.second).real();
        bq.a2 = (pp.first * pp.second).real();
        size_t best = zero_pairs.size();
        double best_d = 0.0;
        for (size_t i = 0; i < zero_pairs.size(); ++i) {
            if (used[i]) continue;
            const double dist = std::abs(zero_pairs[i].first - pp.first);
            if (best == zero_pairs.size() || dist < best_d) {
                best = i;
                best_d = dist;
            }
        }
        if (best < zero_pairs.size()) {
            used[best] = true;
            bq.b0 = 1.0;
            bq.b1 = -(zero_pairs[best].first + zero_pairs[best].second).real();
            bq.b2 = (zero_pairs[best].first * zero_pairs[best].second).real();
        } else {
            bq.b0 = 1.0;
            bq.b1 = bq.b2 = 0.0;
        }
        cascade.sections.push_back(bq);
    }
    check(std::all_of(used.begin(), used.end(), [](bool b) { return b; }),
          "zpk2sos: unpaired zeros");
    if (!cascade.sections.empty()) {
        Biquad& first = cascade.sections.front();
        first.b0 *= zpk.k;
        first.b1 *= zpk.k;
        first.b2 *= zpk.k;
    }
    cascade.state.assign(cascade.sections.size(), {0.0, 0.0});
    return cascade;
}

}  // namespace

void BiquadCascade::reset() {
    for (auto& s : state) s = {0.0, 0.0};
}

double BiquadCascade::max_pole_magnitude() const {
    double m = 0.0;
    for (const Biquad& s : sections) {
        // roots of z^2 + a1 z + a2
        const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
        m = std::max(m, std::abs((-s.a1 + disc) / 2.0));
        m = std::max(m, std::abs((-s.a1 - disc) / 2.0));
    }
    return m;
}

double BiquadCascade::magnitude_at(double freq_hz, double fs_hz) const {
    const cplx zi = std::exp(cplx(0.0, -2.0 * kPi * freq_hz / fs_hz));
    cplx h(1.0, 0.0);
    for (const Biquad& s : sections) {
        h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
    }
    return std::abs(h);
}

BiquadCascade design_butterworth(size_t order, FilterKind kind,
                                 const std::vector<double>& cutoffs_hz, double fs_hz) {
    check(order >= 1, "design_butterworth: order must be >= 1");
    check(fs_hz > 0.0, "design_butterworth: fs must be > 0");
    const bool band = (kind == FilterKind::bandpass || kind == FilterKind::bandstop);
    check(cutoffs_hz.size() == (band ? 2u : 1u),
          "design_butterworth: wrong number of cutoffs for filter kind");
    for (double f : cutoffs_hz)
        check(f > 0.0 && f < fs_hz / 2.0, "design_butterworth: cutoff outside (0, fs/2)");
    if (band) check(cutoffs_hz[0] < cutoffs_hz[1], "design_butterworth: cutoffs must ascend");

    auto warp = [&](double f) { return 2.0 * fs_hz * std::tan(kPi * f / fs_hz); };
    const Zpk proto = butter_prototype(order);
    Zpk analog;
    if (kind == FilterKind::lowpass) {
        analog = lp2lp(proto, warp(cutoffs_hz[0]));
    } else if (kind == FilterKind::highpass) {
        analog = lp2hp(proto, warp(cutoffs_hz[0]));
    } else {
        const double w1 = warp(cutoffs_hz[0]), w2 = warp(cutoffs_hz[1]);
        const double wo = std::sqrt(w1 * w2), bw = w2 - w1;
        analog = (kind == FilterKind::bandpass) ? lp2bp(proto, wo, bw) : lp2bs(proto, wo, bw);
    }
    return zpk2sos(bilinear(analog, fs_hz));
}

double causal_filter_step(BiquadCascade& cascade, double sample) {
    double x = sample;
    for (size_t i = 0; i < cascade.sections.size(); ++i) {
        const Biquad& s = cascade.sections[i];
        auto& st = cascade.state[i];
        const double y = s.b0 * x + st[0];
        st[0] = s.b1 * x - s.a1 * y + st[1];
        st[1] = s.b2 * x - s.a2 * y;
        x = y;
    }
    return x;
}

Vec filter_forward(const BiquadCascade& cascade, const Vec& x) {
    BiquadCascade c = cascade;
    c.reset();
    Vec y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = causal_filter_step(c, x[i]);
    return y;
}

Vec filtfilt(const BiquadCascade& cascade, const Vec& x) {
    const size_t pad = 3 * (cascade.sections.size() * 2);
    check(x.size() > pad, "filtfilt: signal too short for edge padding");
    const size_t n = x.size();
    Vec ext(n + 2 * pad);
    for (size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
    for (size_t i = 0; i < n; ++i) ext[pad + i] = x[i];
    for (size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    Vec y = filter_forward(cascade, ext);
    std::reverse(y.begin(), y.end());
    y = filter_forward(cascade, y);
    std::reverse(y.begin(), y.end());
    return Vec(y.begin() + static_cast<long>(pad), y.begin() + static_cast<long>(pad + n));
}

Mat filtfilt(const BiquadCascade& cascade, const Mat& x) {
    Mat out(x.rows, x.cols);
    for (size_t c = 0; c < x.rows; ++c) {
        Vec row(x.row(c), x.row(c) + x.cols);
        Vec f = filtfilt(cascade, row);
        std::copy(f.begin(), f.end(), out.row(c));
    }
    return out;
}

Vec resample(const Vec& x, double fs_in, double fs_out) {
    check(fs_in > 0.0 && fs_out > 0.0, "resample: rates must be > 0");
    if (fs_in == fs_out) return x;
    const size_t n = x.size();
    const size_t out_len = static_cast<size_t>(std::llround(static_cast<double>(n) * fs_out / fs_in));
    Vec y(out_len, 0.0);
    const double ratio = fs_in / fs_out;           // input samples per output sample
    const double fc = std::min(1.0, fs_out / fs_in);  // relative to input Nyquist
    const double half_width = 32.0 / fc;
    for (size_t m = 0; m < out_len; ++m) {
        const double t = static_cast<double>(m) * ratio;
        const long k0 = static_cast<long>(std::ceil(t - half_width));
        const long k1 = static_cast<long>(std::floor(t + half_width));
        double acc = 0.0, wsum = 0.0;
        for (long k = std::max(0L, k0); k <= std::min(static_cast<long>(n) - 1, k1); ++k) {
            const double dt = t - static_cast<double>(k);
            const double u = dt / half_width;  // in [-1, 1]
            // Blackman window
            const double win = 0.42 + 0.5 * std::cos(kPi * u) + 0.08 * std::cos(2.0 * kPi * u);
            const double arg = kPi * fc * dt;
            const double s = (std::abs(arg) < 1e-12) ? 1.0 : std::sin(arg) / arg;
            const double w = s * win;
            acc += w * x[static_cast<size_t>(k)];
            wsum += w;
        }
        y[m] = (wsum != 0.0) ? acc / wsum * 1.0 : 0.0;
    }
    return y;
}

Mat resample(const Mat& x, double fs_in, double fs_out) {
    if (fs_in == fs_out) return x;
    Mat out;
    for (size_t c = 0; c < x.rows; ++c) {
        Vec row(x.row(c), x.row(c) + x.cols);
        Vec r = resample(row, fs_in, fs_out);
        if (c == 0) out = Mat(x.rows, r.size());
        std::copy(r.begin(), r.end(), out.row(c));
    }
    return out;
}

const MontageMap& double_banana_22() {
    static const MontageMap map = {
        {"FP1", "F7"}, {"F7", "T3"},  {"T3", "T5"},  {"T5", "O1"},  {"FP2", "F8"}, {"F8", "T4"},
        {"T4", "T6"},  {"T6", "O2"},  {"A1", "T3"},  {"T3", "C3"},  {"C3", "CZ"},  {"CZ", "C4"},
        {"C4", "T4"},  {"T4", "A2"},  {"FP1", "F3"}, {"F3", "C3"},  {"C3", "P3"},  {"P3", "O1"},
        {"FP2", "F4"}, {"F4", "C4"},  {"C4", "P4"},  {"P4", "O2"}};
    return map;
}

Mat bipolar_montage(const Mat& unipolar, const std::vector<std::string>& electrode_names,
                    const MontageMap& map) {
    check(unipolar.rows == electrode_names.size(), "bipolar_montage: name/row count mismatch");
    auto index_of = [&](const std::string& name) -> size_t {
        for (size_t i = 0; i < electrode_names.size(); ++i)
            if (electrode_names[i] == name) return i;
        throw argument_error("bipolar_montage: missing electrode " + name);
    };
    Mat out(map.size(), unipolar.cols);
    for (size_t k = 0; k < map.size(); ++k) {
        const size_t a = index_of(map[k].first);
        const size_t b = index_of(map[k].second);
        for (size_t t = 0; t < unipolar.cols; ++t)
            out.at(k, t) = unipolar.at(a, t) - unipolar.at(b, t);
    }
    return out;
}

double sorted_quantile(const Vec& sorted, double q) {
    check(!sorted.empty(), "sorted_quantile: empty input");
    if (sorted.size() == 1) return sorted[0];
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const size_t i = static_cast<size_t>(h);
    const double frac = h - static_cast<double>(i);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

Mat rqn_window(const Mat& window) {
    check(window.cols >= 4, "rqn_window: need at least 4 samples");
    Mat out(window.rows, window.cols);
    Vec sorted(window.cols);
    for (size_t c = 0; c < window.rows; ++c) {
        std::copy(window.row(c), window.row(c) + window.cols, sorted.begin());
        std::sort(sorted.begin(), sorted.end());
        const double med = sorted_quantile(sorted, 0.5);
        const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
        const double denom = iqr + 1e-6;
        for (size_t t = 0; t < window.cols; ++t)
            out.at(c, t) = (window.at(c, t) - med) / denom;
    }
    return out;
}

RqnState::RqnState(size_t n_channels, size_t window, double eps)
    : window_(window), eps_(eps), ring_(n_channels), sorted_(n_channels),
      fill_(n_channels, 0), head_(n_channels, 0) {
    check(window >= 1, "RqnState: window must be >= 1");
    for (size_t c = 0; c < n_channels; ++c) {
        ring_[c].assign(window, 0.0);
        sorted_[c].reserve(window);
    }
}

double RqnState::step_channel(size_t channel, double x) {
    check(channel < ring_.size(), "RqnState: channel out of range");
    Vec& ring = ring_[channel];
    Vec& sorted = sorted_[channel];
    size_t& fill = fill_[channel];
    size_t& head = head_[channel];

    if (fill == window_) {
        const double old = ring[head];
        auto it = std::lower_bound(sorted.begin(), sorted.end(), old);
        sorted.erase(it);
    } else {
        fill += 1;
    }
    ring[head] = x;
    head = (head + 1) % window_;
    sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), x), x);

    const double med = sorted_quantile(sorted, 0.5);
    const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    return (x - med) / (iqr + eps_);
}

Vec RqnState::step(const Vec& sample) {
    check(sample.size() == ring_.size(), "RqnState: channel count mismatch");
    Vec out(sample.size());
    for (size_t c = 0; c < sample.size(); ++c) out[c] = step_channel(c, sample[c]);
    return out;
}

size_t RqnState::buffer_bytes(size_t precision_bytes) const {
    // ring + sorted copy per channel
    return 2 * ring_.size() * window_ * precision_bytes;
}

BandRange band_range(const std::string& band) {
    if (band == "delta") return {0.5, 4.0};
    if (band == "theta") return {4.0, 8.0};
    if (band == "alpha") return {8.0, 13.0};
    if (band == "beta") return {13.0, 30.0};
    if (band == "gamma") return {30.0, 75.0};
    throw argument_error("band_range: unknown band " + band);
}

Mat band_stop_ablate(const Mat& signal, const std::string& band, double fs_hz) {
    const BandRange r = band_range(band);
    BiquadCascade stop = design_butterworth(4, FilterKind::bandstop, {r.lo_hz, r.hi_hz}, fs_hz);
    return filtfilt(stop, signal);
}

}  // namespace eegstream
