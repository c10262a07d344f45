#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tddsim {

/**
 * Error taxonomy used across the simulator.
 * ConfigError: rejected scenario/parameter input (CLI exit code 2).
 * SimulationError: internal inconsistency detected at run time (exit code 3).
 */
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

// ---- unit helpers -----------------------------------------------------------

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

// Floor at -300 dB so silent links stay finite.
inline double lin_to_db(double lin) {
    return lin > 1e-30 ? 10.0 * std::log10(lin) : -300.0;
}
inline double mw_to_dbm(double mw) { return lin_to_db(mw); }

// ---- deterministic RNG ------------------------------------------------------

// splitmix64: used both as a stream seeder and as a key mixer.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Order-independent key derivation: hash an arbitrary tuple of 64-bit words.
inline uint64_t mix_key(uint64_t a) {
    uint64_t s = a;
    return splitmix64(s);
}
template <typename... Rest>
inline uint64_t mix_key(uint64_t a, Rest... rest) {
    uint64_t s = a ^ (0x9e3779b97f4a7c15ULL * (1 + sizeof...(rest)));
    uint64_t h = splitmix64(s);
    return h ^ (mix_key(static_cast<uint64_t>(rest)...) * 0xff51afd7ed558ccdULL);
}

/**
 * Small xoshiro256** stream seeded from a 64-bit key. Every random quantity in
 * the simulator is drawn from a stream keyed by (seed, purpose, ids...), so
 * evaluation order never changes results.
 */
class Rng {
public:
    explicit Rng(uint64_t key) {
        uint64_t s = key;
        for (auto& w : s_) w = splitmix64(s);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in (0, 1]: never returns 0 so log() stays finite.
    double next_uniform() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // CN(0,1): unit average power per complex element.
    std::complex<double> next_cnormal() {
        constexpr double inv_sqrt2 = 0.70710678118654752440;
        const double re = next_normal();
        const double im = next_normal();
        return {re * inv_sqrt2, im * inv_sqrt2};
    }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// One-shot uniform draw for a key; used for per-TB decode outcomes.
inline double keyed_uniform(uint64_t key) {
    Rng r(key);
    return r.next_uniform();
}

}  // namespace tddsim
