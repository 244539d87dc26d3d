#pragma once

#include <cmath>
#include <cstdint>

namespace iloco {

// Splittable counter-style PRNG. Each (seed, stream_id) pair names an
// independent stream whose draw sequence depends only on those two values,
// never on thread scheduling, so parallel consumers get pre-assigned
// streams and results stay bit-identical at any thread count.
//
// Core is the SplitMix64 state walk with a per-stream odd increment;
// uniform integers use rejection sampling and the Gaussian uses the
// Marsaglia polar transform, all built from integer ops plus sqrt/log.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id) {
        state_ = mix64(seed ^ mix64(stream_id + kGolden));
        gamma_ = mix64(stream_id * kGolden + 0x1f123bb5159a55e5ULL) | 1ULL;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Derived stream independent of this stream's current position.
    RngStream substream(std::uint64_t child) const {
        return RngStream(seed_, mix64(stream_id_ + kGolden * (child + 1)));
    }

    std::uint64_t next_u64() {
        state_ += gamma_;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in {0, ..., bound-1}, unbiased via rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (-bound) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t u = next_u64();
            if (u >= threshold) return u % bound;
        }
    }

    // Standard normal via the polar method (second variate discarded).
    double next_gaussian() {
        for (;;) {
            const double u = 2.0 * next_double() - 1.0;
            const double v = 2.0 * next_double() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    double next_gaussian(double mean, double sd) {
        return mean + sd * next_gaussian();
    }

    bool next_bernoulli(double p) { return next_double() < p; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    // SplitMix64 finalizer.
    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
    std::uint64_t gamma_;
};

}  // namespace iloco
