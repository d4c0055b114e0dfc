#pragma once
// Deterministic, platform-independent random streams. Every stochastic routine
// takes (seed, purpose) and derives an independent substream, so results are
// reproducible across runs and unaffected by how many draws other components
// consume.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace netecon {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// xoshiro256** seeded via splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x), x = w ^ (x + 0x9e3779b97f4a7c15ULL);
        have_normal_ = false;
    }
    Rng(std::uint64_t seed, std::string_view purpose, std::uint64_t id = 0)
        : Rng(splitmix64(seed ^ splitmix64(fnv1a64(purpose) + 0x51ed270b0a1c3b2dULL * id))) {}

    std::uint64_t next_u64() {
        std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on (0,1); never returns 0 or 1
    double uniform() {
        std::uint64_t u = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(u) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection to avoid modulo bias
        std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t u;
        do { u = next_u64(); } while (u >= lim);
        return u % n;
    }

    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1)), a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log(uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool have_normal_ = false;
};

}  // namespace netecon
