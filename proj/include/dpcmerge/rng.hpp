#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dpcmerge {

// Philox4x32-10 counter-based generator (Salmon et al., Random123). A stream is
// fully determined by (key, stream id); draws are pure functions of the block
// counter, so every Monte Carlo run owns an independent substream and batches
// reproduce regardless of execution order.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Philox4x32(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static Block bijection(Block ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

    result_type operator()() {
        if (lane_ == 4) {
            const Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                            static_cast<std::uint32_t>(stream_),
                            static_cast<std::uint32_t>(stream_ >> 32)};
            out_ = bijection(ctr, key_);
            ++block_;
            lane_ = 0;
        }
        return out_[lane_++];
    }

    // 53-bit uniform in [0, 1).
    double uniform01() {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi] (inclusive), rejection sampled.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        const std::uint64_t limit = std::numeric_limits<std::uint32_t>::max() -
                                    (std::uint64_t{std::numeric_limits<std::uint32_t>::max()} + 1) % span;
        std::uint64_t draw;
        do draw = (*this)();
        while (draw > limit);
        return lo + draw % span;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

    Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Block out_{};
    int lane_ = 4;
};

}  // namespace dpcmerge
