#include "gmpl/rng.hpp"

namespace gmpl {

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;

inline void round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        round(counter, key);
    }
    return counter;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(StreamId id) : id_(id) {}

void RandomStream::refill() {
    const std::array<std::uint32_t, 4> ctr = {
        block_++, id_.lane, static_cast<std::uint32_t>(id_.trial),
        static_cast<std::uint32_t>(id_.trial >> 32)};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(id_.seed),
                                              static_cast<std::uint32_t>(id_.seed >> 32)};
    buf_ = philox4x32(ctr, key);
    pos_ = 0;
}

std::uint32_t RandomStream::next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
}

std::uint64_t RandomStream::next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double RandomStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace gmpl
