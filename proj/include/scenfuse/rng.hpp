#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace scenfuse {

// Deterministic, platform-portable PRNG used for every seeded operation in the
// project. Fixtures and sampled scenarios must be byte-identical across
// compilers and OSes, so no std::*_distribution is used anywhere; draws are
// defined arithmetically below.
//
// Stream: xoshiro256++ (Blackman & Vigna), state seeded with splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
        spare_valid_ = false;
    }

    // Derives an independent child stream; used to give each trip/dataset its
    // own stream so generation order does not matter.
    Rng fork(std::uint64_t stream_id) {
        std::uint64_t mix = next_u64();
        return Rng(mix ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Fixed-point multiply keeps the mapping
    // identical on every platform; the modulo-free bias (< 2^-64 * n) is
    // irrelevant at fixture scale.
    std::uint64_t below(std::uint64_t n) {
        using u128 = unsigned __int128;
        return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; consumes uniforms in a fixed pattern.
    double normal() {
        if (spare_valid_) {
            spare_valid_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * pi() * u2;
        spare_ = r * std::sin(theta);
        spare_valid_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::uint64_t i = items.size(); i > 1; --i) {
            std::uint64_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    static constexpr double pi() { return 3.141592653589793238462643383279502884; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool spare_valid_ = false;
};

}  // namespace scenfuse
