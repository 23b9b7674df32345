#pragma once

#include <cstdint>

namespace lineage {

/// Counter-based deterministic random stream (splitmix64).
///
/// Standard-library distributions are implementation-defined, so every draw
/// that can reach an output file goes through this generator instead. Streams
/// are cheap to construct; sampling code derives one per (seed, draw index)
/// so results do not depend on any parallel schedule.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) : state_(seed) {}

    /// Independent substream for a draw index (or any other label).
    static RandomStream substream(uint64_t seed, uint64_t index, uint64_t lane = 0) {
        RandomStream mix(seed);
        uint64_t a = mix.next() ^ (index * 0x9E3779B97F4A7C15ULL);
        RandomStream mix2(a);
        return RandomStream(mix2.next() ^ (lane * 0xBF58476D1CE4E5B9ULL));
    }

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound). bound must be nonzero.
    uint64_t uniform(uint64_t bound) {
        // rejection sampling; bias-free for every bound
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1).
    double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

} // namespace lineage
