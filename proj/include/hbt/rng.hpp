#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace hbt {

/// One SplitMix64 step. Used only to whiten seed material.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Independent engine for (seed, stream). The same pair always yields the
/// same sequence, no matter which worker thread asks for it; that is what
/// makes every result independent of the worker count.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    splitmix64(s);
    s ^= (stream + 1) * 0xA3EC4E93C5F6B7A9ull;
    const std::uint64_t a = splitmix64(s);
    const std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Standard normals via the trigonometric Box-Muller transform. Hand-rolled
/// because std::normal_distribution is not bit-identical across standard
/// libraries and reproducibility is part of the contract.
struct NormalGen {
    std::mt19937_64* gen;
    double spare = 0.0;
    bool has_spare = false;

    explicit NormalGen(std::mt19937_64& g) : gen(&g) {}

    double operator()() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        const double u1 = 1.0 - uniform01(*gen);  // (0, 1], keeps log finite
        const double u2 = uniform01(*gen);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        spare = r * std::sin(phi);
        has_spare = true;
        return r * std::cos(phi);
    }
};

/// Circular complex Gaussian with unit mean square modulus:
/// re and im are independent N(0, 1/2).
inline std::complex<double> circular_gaussian(NormalGen& ng) {
    const double scale = M_SQRT1_2;
    const double re = ng() * scale;
    const double im = ng() * scale;
    return {re, im};
}

}  // namespace hbt
