#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace fasttab {

// Deterministic xoshiro256++ generator seeded through splitmix64.
// Hand-rolled (including Box-Muller) so that identical seeds produce
// identical streams on every platform, which std::normal_distribution
// does not guarantee.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& si : s_) si = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    uint64_t randint(uint64_t n) { return next_u64() % n; }

    double normal(double mu = 0.0, double sigma = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mu + sigma * spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return mu + sigma * r * std::cos(th);
    }

    // Stable per-id derivation so parallel sample generation never depends
    // on iteration order.
    static uint64_t derive(uint64_t master_seed, const std::string& id) {
        uint64_t h = master_seed ^ 0x9e3779b97f4a7c15ULL;
        for (unsigned char c : id) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        uint64_t x = h;
        return splitmix64(x);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& state) {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fasttab
