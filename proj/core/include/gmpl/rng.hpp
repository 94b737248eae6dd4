#pragma once

#include <array>
#include <cstdint>

namespace gmpl {

/// Philox-4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Identifies an independent random stream. Streams are addressed, never
/// split at runtime: (seed, trial, lane) fully determines the output, so a
/// Monte Carlo run gives the same histogram for any thread count.
struct StreamId {
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
    std::uint32_t lane = 0;  // sub-stream within a trial, < 2^32
};

/// Sequential reader over a counter-based stream.
class RandomStream {
public:
    explicit RandomStream(StreamId id);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double next_double();
    /// Uniform on (0, 1]; safe for log().
    double next_open_double();

    const StreamId& id() const { return id_; }

private:
    void refill();

    StreamId id_;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

/// SplitMix64 finaliser; used to derive lane identifiers from labels.
std::uint64_t mix64(std::uint64_t x);

}  // namespace gmpl
