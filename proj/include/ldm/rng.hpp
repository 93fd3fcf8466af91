#pragma once

#include <cstdint>

namespace ldm {

/// splitmix64 stream. Deliberately not std::mt19937 /
/// std::uniform_int_distribution: their outputs are implementation-defined,
/// and split membership must be byte-identical across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw in [0, bound). Rejection-free multiply-shift would bias
    /// large bounds; bounds here are tiny (rating counts), so rejection
    /// sampling stays cheap and exact.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Stateless mix of a base seed with a stream id (e.g. a user id), so
/// per-entity draws are independent of iteration order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 rng(seed ^ (0x9E3779B97F4A7C15ULL + stream * 0xD1B54A32D192ED03ULL));
    return rng.next();
}

} // namespace ldm
