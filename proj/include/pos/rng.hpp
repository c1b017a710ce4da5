#pragma once

// Counter-based random streams.
//
// Generator: Philox4x32-10 (Salmon et al., SC'11), key = 64-bit master seed
// split into two 32-bit words (low word first). The 128-bit counter is laid
// out as [block_lo, block_hi, stream_lo, stream_hi]: the upper 64 bits name a
// stream, the lower 64 bits index 128-bit output blocks within it. Each block
// yields two 64-bit words, word = (out[1] << 32) | out[0], then
// (out[3] << 32) | out[2].
//
// Stream identifiers are derived with derive_stream(parent, index), a
// SplitMix64 finalizer applied to parent ^ (index * golden ratio). Any
// re-implementation that follows these rules reproduces every draw.
//
// Uniforms are (word >> 11) + 0.5 scaled by 2^-53, so they never hit 0 or 1.
// Normal variates use inversion through normal_quantile: one uniform each.

#include <array>
#include <cstdint>
#include <limits>

namespace pos {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key);

std::uint64_t splitmix64_mix(std::uint64_t z);

inline std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t index) {
    return splitmix64_mix(parent ^ (index * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
}

// Well-known stream purposes, so independent stages never share a stream.
namespace streams {
inline constexpr std::uint64_t kMcmc = 1;
inline constexpr std::uint64_t kPhase3Effects = 2;
inline constexpr std::uint64_t kProgramSim = 3;
inline constexpr std::uint64_t kCalibration = 4;
inline constexpr std::uint64_t kBridge = 5;
inline constexpr std::uint64_t kBinary = 6;
inline constexpr std::uint64_t kPosterior = 7;
}  // namespace streams

class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream_id) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (have_ == 0) refill();
        return buffer_[2 - have_--];
    }

    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
    double normal();
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // A child stream keyed on the same seed.
    RngStream child(std::uint64_t index) const { return RngStream(key_, derive_stream(stream_, index)); }

    std::uint64_t stream_id() const { return stream_; }

private:
    RngStream(Philox4x32Key key, std::uint64_t stream) : key_(key), stream_(stream) {}
    void refill();

    Philox4x32Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int have_ = 0;
};

// Root stream for a pipeline stage: derive_stream(0, purpose) under the seed.
inline RngStream stage_stream(std::uint64_t seed, std::uint64_t purpose) {
    return RngStream(seed, derive_stream(0, purpose));
}

}  // namespace pos
