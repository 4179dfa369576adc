#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dhac {

// Seeded generator with distribution helpers implemented here rather than via
// <random> distributions, whose output is implementation-defined. Identical
// seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent stream keyed by (seed, label, index). Used for per-trial and
    // per-subsystem randomness so that parallel and serial runs agree.
    static Rng substream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform over the open interval (0, 1) with every mantissa bit random:
    // the binade is drawn geometrically and the 52 fraction bits uniformly.
    double open01_full_mantissa();

    bool bernoulli(double p);

private:
    std::mt19937_64 engine_;
};

std::uint64_t fnv1a64(std::string_view text);

}  // namespace dhac
