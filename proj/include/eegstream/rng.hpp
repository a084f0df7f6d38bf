#pragma once

#include <cmath>
#include <cstdint>

namespace eegstream {

// All randomness in the project flows through this counter-based generator so
// that runs are reproducible bit-for-bit across platforms. Draw k of stream
// `seed` is the SplitMix64 finalizer applied to seed + (k+1)*GOLDEN, pure
// 64-bit integer arithmetic.
inline uint64_t splitmix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

    explicit CounterRng(uint64_t seed = 0) : seed_(seed) {}

    // Derive an independent stream, e.g. per channel or per tensor.
    CounterRng fork(uint64_t stream_id) const {
        return CounterRng(splitmix64(seed_ ^ (kGolden * (stream_id + 1))));
    }

    uint64_t next_u64() {
        counter_ += 1;
        return splitmix64(seed_ + counter_ * kGolden);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller; the second deviate of each pair is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_ = 0;
    uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace eegstream
