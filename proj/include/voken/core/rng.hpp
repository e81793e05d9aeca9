#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "voken/core/types.hpp"

namespace voken {

// Deterministic RNG used everywhere. The engine (mt19937_64) is fully
// specified by the standard and the distribution code below is our own,
// so streams are reproducible across compilers and stdlib versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_base_(seed), eng_(mix(seed)) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0,1)
    real uniform() {
        return real((next_u64() >> 11) * (1.0 / 9007199254740992.0));
    }

    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    int64_t uniform_int(int64_t n) {
        return int64_t(next_u64() % uint64_t(n));
    }

    // uniform integer in [lo, hi] inclusive
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + uniform_int(hi - lo + 1);
    }

    bool bernoulli(real p) { return uniform() < p; }

    // standard normal, Box-Muller with cached spare
    real normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        real u1 = uniform();
        real u2 = uniform();
        while (u1 <= real(1e-12)) u1 = uniform();
        const real r = std::sqrt(real(-2) * std::log(u1));
        const real a = real(2.0 * 3.14159265358979323846) * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    real normal(real mean, real stddev) { return mean + stddev * normal(); }

    // derive an independent stream, e.g. one per sampled image
    Rng fork(uint64_t salt) const {
        return Rng(seed_base_ ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    }

private:
    static uint64_t mix(uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    uint64_t seed_base_ = 0;
    std::mt19937_64 eng_;
    real spare_ = 0;
    bool has_spare_ = false;
};

}  // namespace voken
