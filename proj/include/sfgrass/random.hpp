#pragma once

#include <cstdint>

namespace sfgrass {

/// SplitMix64 generator. Fully specified 64-bit state, so streams are
/// bit-reproducible across platforms; substreams are derived by hashing a
/// (seed, stream-id) pair, which keeps columns independent of how many
/// other columns exist.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (-1, 1).
    double next_symmetric() { return 2.0 * next_unit() - 1.0; }

private:
    std::uint64_t state_;
};

/// Derive an independent substream seed from (seed, stream id).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mix(seed ^ (0xa0761d6478bd642fULL + stream * 0xe7037ed1a0b428dbULL));
    mix.next_u64();
    return mix.next_u64();
}

} // namespace sfgrass
