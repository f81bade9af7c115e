#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace slidar {

// splitmix64, used for stateless per-key noise draws.
inline uint64_t hash_mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
    return hash_mix(seed ^ hash_mix(v));
}

inline double hash_to_unit(uint64_t h) {
    // 53 mantissa bits -> [0, 1)
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Deterministic RNG with portable distributions. std:: distributions are
// implementation-defined, so exponential/normal are derived from raw
// uniform bits here; fixed seeds then reproduce byte-identical artifacts
// across standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return hash_to_unit(engine_()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    uint64_t uniform_int(uint64_t n) { return engine_() % n; }

    double exponential(double mean) {
        double u = uniform();
        return -mean * std::log1p(-u);
    }

    double normal(double mean = 0.0, double std_dev = 1.0) {
        // Box-Muller
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + std_dev * r * std::cos(2.0 * M_PI * u2);
    }

    Rng split(uint64_t stream) { return Rng(hash_combine(state_hash(), stream)); }

  private:
    uint64_t state_hash() { return engine_(); }

    std::mt19937_64 engine_;
};

// Stateless gaussian draw from a key; used by the oracle model so noise is a
// function of what is being perturbed, not of evaluation order.
inline double keyed_normal(uint64_t key) {
    double u1 = hash_to_unit(hash_mix(key));
    double u2 = hash_to_unit(hash_mix(key ^ 0xabcdef1234567890ULL));
    while (u1 <= 0.0) {
        key = hash_mix(key + 1);
        u1 = hash_to_unit(key);
    }
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline double keyed_uniform(uint64_t key) { return hash_to_unit(hash_mix(key)); }

} // namespace slidar
