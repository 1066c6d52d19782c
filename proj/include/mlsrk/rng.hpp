#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mlsrk {

// Purpose tags used as the first key component when deriving sub-streams.
enum class StreamPurpose : std::uint64_t {
    data = 1,
    prior = 2,
    proposal = 3,
    accept = 4,
    filter = 5,
    propagate = 6,
    resample = 7,
    select = 8,
    level = 9,
    repetition = 10,
    sample = 11,
    observation_noise = 12,
    reference = 13,
};

/// Counter-based random stream (Philox4x32-10) addressed by a 128-bit key.
///
/// A stream is a small value type. `derive` produces an independent child
/// stream from a key component, so any (purpose, level, chain, iteration,
/// interval, particle) tuple maps to a fixed sequence regardless of which
/// thread consumes it or in what order.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed) : key_(splitmix64(seed)), nonce_(splitmix64(~seed)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    RngStream derive(std::uint64_t component) const {
        RngStream child(*this);
        child.key_ = splitmix64(key_ ^ splitmix64(component + 0x632be59bd9b4e019ULL));
        child.nonce_ = splitmix64(nonce_ + component * 0x9e3779b97f4a7c15ULL + child.key_);
        child.counter_ = 0;
        child.buffered_ = 0;
        return child;
    }
    RngStream derive(StreamPurpose purpose) const {
        return derive(static_cast<std::uint64_t>(purpose));
    }
    template <class First, class... Rest>
    RngStream derive(First first, Rest... rest) const
        requires(sizeof...(Rest) > 0)
    {
        return derive(first).derive(rest...);
    }

    result_type operator()() {
        if (buffered_ == 0) refill();
        return block_[--buffered_];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    friend bool operator==(const RngStream& a, const RngStream& b) {
        return a.key_ == b.key_ && a.nonce_ == b.nonce_ && a.counter_ == b.counter_ &&
               a.buffered_ == b.buffered_;
    }

private:
    static constexpr std::uint64_t splitmix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    void refill() {
        std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_),
                                         static_cast<std::uint32_t>(counter_ >> 32),
                                         static_cast<std::uint32_t>(nonce_),
                                         static_cast<std::uint32_t>(nonce_ >> 32)};
        std::uint32_t k0 = static_cast<std::uint32_t>(key_);
        std::uint32_t k1 = static_cast<std::uint32_t>(key_ >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        ++counter_;
        block_[0] = (std::uint64_t{ctr[0]} << 32) | ctr[1];
        block_[1] = (std::uint64_t{ctr[2]} << 32) | ctr[3];
        buffered_ = 2;
    }

    std::uint64_t key_;
    std::uint64_t nonce_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> block_{};
    int buffered_ = 0;
};

}  // namespace mlsrk
