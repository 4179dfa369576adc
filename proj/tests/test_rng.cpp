#include <doctest.h>

#include <cmath>
#include <set>

#include "dhac/rng.hpp"

using namespace dhac;

TEST_CASE("fnv1a64 matches published vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("engine is the standard mt19937_64") {
    // The standard fixes the 10000th draw for the default seed 5489.
    Rng r(5489);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = r.next();
    CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("substreams are deterministic and keyed by label and index") {
    auto first = [](std::uint64_t seed, const char* label, std::uint64_t index) {
        return Rng::substream(seed, label, index).next();
    };
    CHECK(first(7, "inputs/fir", 3) == first(7, "inputs/fir", 3));
    std::set<std::uint64_t> seen{first(7, "inputs/fir", 3), first(8, "inputs/fir", 3), first(7, "inputs/rk2", 3),
                                 first(7, "inputs/fir", 4), first(7, "inputs/fir", 3ULL << 32)};
    CHECK(seen.size() == 5);
}

TEST_CASE("uniform_int stays in range and reaches both ends") {
    Rng r(11);
    bool lo = false, hi = false;
    for (int i = 0; i < 2000; ++i) {
        const auto v = r.uniform_int(-3, 4);
        REQUIRE(v >= -3);
        REQUIRE(v <= 4);
        lo |= v == -3;
        hi |= v == 4;
    }
    CHECK(lo);
    CHECK(hi);
    CHECK(r.uniform_int(5, 5) == 5);
    // Full 64-bit span takes the raw draw.
    Rng a(3), b(3);
    CHECK(static_cast<std::uint64_t>(a.uniform_int(INT64_MIN, INT64_MAX)) == b.next());
}

TEST_CASE("uniform_int is unbiased over a small range") {
    Rng r(99);
    int counts[6] = {};
    const int n = 60000;
    for (int i = 0; i < n; ++i) ++counts[r.uniform_int(0, 5)];
    for (int c : counts) CHECK(std::abs(c - n / 6) < 400);  // about 4.4 sigma
}

TEST_CASE("open01_full_mantissa lies in (0, 1) and uses the low mantissa bits") {
    Rng r(5);
    int low_bit_set = 0;
    double sum = 0.0;
    for (int i = 0; i < 4000; ++i) {
        const double x = r.open01_full_mantissa();
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
        int e = 0;
        const double m = std::frexp(x, &e);  // m in [0.5, 1)
        if (static_cast<std::uint64_t>(std::ldexp(m, 53)) & 1u) ++low_bit_set;
        sum += x;
    }
    CHECK(low_bit_set > 1700);
    CHECK(low_bit_set < 2300);
    CHECK(sum / 4000 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("bernoulli extremes draw nothing") {
    Rng a(1), b(1);
    CHECK(a.bernoulli(1.0));
    CHECK_FALSE(a.bernoulli(0.0));
    CHECK(a.next() == b.next());
}
