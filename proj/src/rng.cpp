#include "dhac/rng.hpp"

#include <bit>
#include <cmath>

namespace dhac {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::substream(std::uint64_t seed, std::string_view label, std::uint64_t index) {
    const std::uint64_t tag = fnv1a64(label);
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(tag),  static_cast<std::uint32_t>(tag >> 32),
        static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    Rng r(0);
    r.engine_.seed(seq);
    return r;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == ~0ULL) return static_cast<std::int64_t>(next());
    const std::uint64_t range = span + 1;
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = ~0ULL - (~0ULL % range) - 1;
    std::uint64_t x;
    do {
        x = next();
    } while (x > limit);
    return lo + static_cast<std::int64_t>(x % range);
}

double Rng::uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::open01_full_mantissa() {
    int exponent = -1;
    for (;;) {
        const std::uint64_t bits = next();
        if (bits != 0) {
            exponent -= std::countr_zero(bits);
            break;
        }
        exponent -= 64;
        if (exponent < -1000) break;
    }
    const std::uint64_t fraction = next() >> 12;
    const double mantissa = 1.0 + static_cast<double>(fraction) * 0x1.0p-52;
    return std::ldexp(mantissa, exponent);
}

bool Rng::bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform01() < p;
}

}  // namespace dhac
