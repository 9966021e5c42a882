#pragma once

#include <cmath>
#include <cstdint>

namespace episim {

// Counter-based stream derivation: every stream is keyed by a tuple of
// 64-bit words (seed, individual, infection index, ...) so that draws are
// reproducible independently of event ordering and thread scheduling.
// Core generator is xoshiro256++ seeded through splitmix64.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RandomStream {
public:
    RandomStream() : RandomStream(0) {}

    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    // Derive a sub-stream from a key tuple; mixing is non-linear so that
    // related keys (k, i) and (k, i+1) give unrelated streams.
    template <typename... Keys>
    RandomStream derive(Keys... keys) const {
        std::uint64_t sm = s_[0] ^ (s_[1] << 1);
        ((sm = splitmix64(sm) ^ static_cast<std::uint64_t>(keys)), ...);
        return RandomStream(splitmix64(sm));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1); 53-bit mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Strictly positive uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    // Index into a normalized probability vector.
    template <typename Vec>
    std::size_t categorical(const Vec& probs) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.empty() ? 0 : probs.size() - 1;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

} // namespace episim
