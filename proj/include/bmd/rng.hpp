#pragma once

#include <cstdint>

namespace bmd {

// Counter-based stream: the state is derived from (seed, replicate, stream)
// alone, so any substream can be regenerated independently of draw order.
class SplitRng {
public:
    SplitRng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream) {
        state_ = mix(mix(mix(0x9E3779B97F4A7C15ULL ^ seed) + replicate) + stream);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // uniform on [0,1) with 53 random bits
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // exact binomial as a Bernoulli sum; n is small in all designs here
    long binomial(long n, double p) {
        long k = 0;
        for (long i = 0; i < n; ++i)
            if (next_double() < p) ++k;
        return k;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27; z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }
    std::uint64_t state_;
};

}  // namespace bmd
