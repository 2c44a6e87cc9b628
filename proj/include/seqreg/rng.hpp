#pragma once

#include <cstdint>
#include <vector>

namespace seqreg {

// SplitMix64. Every piece of randomness in the project (parameter init,
// dropout masks, synthetic fixtures, shuffling) flows from one of these so
// that a run is fully determined by its seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). n must be positive; modulo bias is
    // irrelevant at the scales used here.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Derives an independent stream from a root seed and a stream index.
inline SplitMix64 seeded_stream(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mixer(seed ^ (0xA5A5A5A5DEADBEEFULL + stream * 0x9E3779B97F4A7C15ULL));
    return SplitMix64(mixer.next_u64());
}

} // namespace seqreg
