#pragma once

#include <cstdint>

namespace cooc {

// Seedable counter-style generator built on the splitmix64 finalizer.
// Every random decision in the toolkit flows through this type so that
// corpora, weight initialization and shuffles are reproducible from a
// single seed. The exact scheme is documented in docs/FORMATS.md;
// changing any constant here changes generated corpora.
class Rng {
public:
    explicit Rng(uint64_t state) : state_(state) {}

    // Independent stream keyed by (seed, a, b). Distinct keys give
    // statistically independent sequences.
    static Rng from_stream(uint64_t seed, uint64_t a, uint64_t b = 0) {
        uint64_t s = mix(seed + 0x9E3779B97F4A7C15ull);
        s = mix(s ^ (a + 0xBF58476D1CE4E5B9ull));
        s = mix(s ^ (b + 0x94D049BB133111EBull));
        return Rng(s);
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform in [0, 1), 53 mantissa bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound). Multiply-shift mapping; the bias of
    // bound/2^64 is negligible for our bounds.
    uint32_t next_below(uint32_t bound) {
        return static_cast<uint32_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    // Uniform integer in [lo, hi], inclusive.
    int next_int(int lo, int hi) {
        return lo + static_cast<int>(next_below(static_cast<uint32_t>(hi - lo + 1)));
    }

    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Approximate standard normal via the 12-uniform sum. Uses only
    // additions, so deviates are bit-identical on any IEEE-754 platform.
    // Tails truncate at +/-6 sigma, which is irrelevant for 8-bit pixels.
    double next_gaussian() {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += next_unit();
        return s - 6.0;
    }

    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
};

} // namespace cooc
