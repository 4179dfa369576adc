#include "dhac/arith.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace dhac {

namespace {

std::uint16_t bits16(std::int16_t v) { return static_cast<std::uint16_t>(v); }
std::int16_t from_bits(std::uint32_t v) { return static_cast<std::int16_t>(static_cast<std::uint16_t>(v)); }

std::uint32_t low_mask(int k) { return k >= 32 ? 0xFFFFFFFFu : ((1u << k) - 1u); }

std::uint16_t loa(std::uint16_t a, std::uint16_t b, int k) {
    const std::uint32_t m = low_mask(k);
    const std::uint32_t high = ((static_cast<std::uint32_t>(a) >> k) + (static_cast<std::uint32_t>(b) >> k)) << k;
    return static_cast<std::uint16_t>(high | ((a | b) & m));
}

std::uint16_t trunc_add(std::uint16_t a, std::uint16_t b, int k) {
    const std::uint32_t m = ~low_mask(k);
    return static_cast<std::uint16_t>((a & m) + (b & m));
}

// Each segment's carry-in is the carry-out its predecessor would produce with
// carry-in 0, so carries travel at most one segment.
std::uint16_t segmented_carry(std::uint16_t a, std::uint16_t b, int s) {
    const std::uint32_t m = low_mask(s);
    std::uint32_t result = 0;
    std::uint32_t carry = 0;
    for (int off = 0; off < 16; off += s) {
        const std::uint32_t sa = (static_cast<std::uint32_t>(a) >> off) & m;
        const std::uint32_t sb = (static_cast<std::uint32_t>(b) >> off) & m;
        result |= ((sa + sb + carry) & m) << off;
        carry = (sa + sb) >> s;
    }
    return static_cast<std::uint16_t>(result);
}

}  // namespace

bool IntUnit::is_adder() const {
    return kind == Kind::Exact || kind == Kind::LOA || kind == Kind::TruncAdd || kind == Kind::SegmentedCarry;
}

bool IntUnit::is_multiplier() const {
    return kind == Kind::Exact || kind == Kind::TruncMul || kind == Kind::BrokenArray || kind == Kind::LogApprox;
}

void IntUnit::validate() const {
    switch (kind) {
        case Kind::LOA:
        case Kind::TruncAdd:
        case Kind::TruncMul:
            if (k < 0 || k > 15) throw ConfigError("unit-param", label() + ": k must be in [0, 15]");
            break;
        case Kind::BrokenArray:
            if (k < 0 || k > 31) throw ConfigError("unit-param", label() + ": k must be in [0, 31]");
            break;
        case Kind::SegmentedCarry:
            if (k < 2 || k > 16) throw ConfigError("unit-param", label() + ": s must be in [2, 16]");
            break;
        case Kind::Exact:
        case Kind::LogApprox:
            break;
    }
}

std::string IntUnit::label() const {
    switch (kind) {
        case Kind::Exact:
            return "exact";
        case Kind::LOA:
            return "LOA" + std::to_string(k);
        case Kind::TruncAdd:
            return "TA" + std::to_string(k);
        case Kind::SegmentedCarry:
            return "SC" + std::to_string(k);
        case Kind::TruncMul:
            return "TM" + std::to_string(k);
        case Kind::BrokenArray:
            return "BA" + std::to_string(k);
        case Kind::LogApprox:
            return "LOG";
    }
    return "?";
}

IntUnit IntUnit::parse(const std::string& kind, int k) {
    IntUnit u;
    if (kind == "exact" || kind == "Exact")
        u = exact();
    else if (kind == "loa" || kind == "LOA")
        u = loa(k);
    else if (kind == "trunc_add" || kind == "TruncAdd" || kind == "TA")
        u = trunc_add(k);
    else if (kind == "segmented_carry" || kind == "SegmentedCarry" || kind == "SC")
        u = segmented_carry(k);
    else if (kind == "trunc_mul" || kind == "TruncMul" || kind == "TM")
        u = trunc_mul(k);
    else if (kind == "broken_array" || kind == "BrokenArray" || kind == "BA")
        u = broken_array(k);
    else if (kind == "log" || kind == "log_approx" || kind == "LogApprox" || kind == "LOG")
        u = log_approx();
    else
        throw ConfigError("unit-kind", "unknown unit kind '" + kind + "'");
    u.validate();
    return u;
}

Backend Backend::approximate(IntUnit adder, IntUnit multiplier, int fp_trunc_bits) {
    Backend b;
    b.paradigm = Paradigm::Approximate;
    b.adder = adder;
    b.multiplier = multiplier;
    b.fp.truncated_bits = fp_trunc_bits;
    b.validate();
    return b;
}

void Backend::validate() const {
    adder.validate();
    multiplier.validate();
    if (!adder.is_adder()) throw ConfigError("unit-kind", adder.label() + " is not an adder model");
    if (!multiplier.is_multiplier()) throw ConfigError("unit-kind", multiplier.label() + " is not a multiplier model");
    if (fp.truncated_bits < 0 || fp.truncated_bits > 52)
        throw ConfigError("fp-bits", "fp_trunc_bits must be in [0, 52]");
    if (paradigm == Paradigm::Accurate &&
        (adder.kind != IntUnit::Kind::Exact || multiplier.kind != IntUnit::Kind::Exact || fp.truncated_bits != 0))
        throw ConfigError("paradigm", "accurate backend must use exact units");
}

std::string Backend::label() const {
    if (paradigm == Paradigm::Accurate) return "exact";
    std::string s;
    const bool int_exact = adder.kind == IntUnit::Kind::Exact && multiplier.kind == IntUnit::Kind::Exact;
    if (!int_exact) s = adder.label() + "+" + multiplier.label();
    if (fp.truncated_bits != 0 || int_exact) {
        if (!s.empty()) s += "+";
        s += "fp" + std::to_string(fp.truncated_bits);
    }
    return s;
}

std::int16_t add16(const IntUnit& model, std::int16_t a, std::int16_t b) {
    const std::uint16_t x = bits16(a);
    const std::uint16_t y = bits16(b);
    switch (model.kind) {
        case IntUnit::Kind::LOA:
            return from_bits(loa(x, y, model.k));
        case IntUnit::Kind::TruncAdd:
            return from_bits(trunc_add(x, y, model.k));
        case IntUnit::Kind::SegmentedCarry:
            return from_bits(segmented_carry(x, y, model.k));
        default:
            return from_bits(static_cast<std::uint32_t>(x) + y);
    }
}

std::int16_t sub16(const IntUnit& model, std::int16_t a, std::int16_t b) {
    return add16(model, a, from_bits(0u - static_cast<std::uint32_t>(bits16(b))));
}

std::uint32_t umul_trunc(std::uint32_t a, std::uint32_t b, int k) { return a * (b & ~low_mask(k)); }

std::uint32_t umul_broken_array(std::uint32_t a, std::uint32_t b, int k) {
    std::uint32_t r = 0;
    for (int i = 0; i < 16; ++i) {
        if (!((a >> i) & 1u)) continue;
        for (int j = 0; j < 16; ++j)
            if (((b >> j) & 1u) && i + j >= k) r += 1u << (i + j);
    }
    return r;
}

std::uint32_t umul_mitchell(std::uint32_t a, std::uint32_t b) {
    if (a == 0 || b == 0) return 0;
    const int k1 = std::bit_width(a) - 1;
    const int k2 = std::bit_width(b) - 1;
    const std::uint64_t m1 = a - (1u << k1);
    const std::uint64_t m2 = b - (1u << k2);
    const std::uint64_t s = (m1 << k2) + (m2 << k1);
    const std::uint64_t base = 1ull << (k1 + k2);
    return static_cast<std::uint32_t>(s < base ? base + s : 2 * s);
}

std::int16_t mul16(const IntUnit& model, std::int16_t a, std::int16_t b) {
    if (model.kind == IntUnit::Kind::Exact)
        return from_bits(static_cast<std::uint32_t>(static_cast<std::int32_t>(a) * static_cast<std::int32_t>(b)));
    // Sign-magnitude: the unsigned core sees |a| and |b| (|-32768| = 32768 fits).
    const bool negative = (a < 0) != (b < 0);
    const std::uint32_t ma = static_cast<std::uint32_t>(std::abs(static_cast<std::int32_t>(a)));
    const std::uint32_t mb = static_cast<std::uint32_t>(std::abs(static_cast<std::int32_t>(b)));
    std::uint32_t p = 0;
    switch (model.kind) {
        case IntUnit::Kind::TruncMul:
            p = umul_trunc(ma, mb, model.k);
            break;
        case IntUnit::Kind::BrokenArray:
            p = umul_broken_array(ma, mb, model.k);
            break;
        case IntUnit::Kind::LogApprox:
            p = umul_mitchell(ma, mb);
            break;
        default:
            p = ma * mb;
            break;
    }
    return from_bits(negative ? 0u - p : p);
}

double trunc_mantissa(double x, int k) {
    if (!std::isfinite(x) || k <= 0) return x;
    if (k > 52) k = 52;
    const std::uint64_t mask = ~((std::uint64_t{1} << k) - 1);
    return std::bit_cast<double>(std::bit_cast<std::uint64_t>(x) & mask);
}

double fp_op(const FpTruncModel& model, FpOp op, double a, double b) {
    const int k = model.truncated_bits;
    const double x = trunc_mantissa(a, k);
    switch (op) {
        case FpOp::Add:
            return x + trunc_mantissa(b, k);
        case FpOp::Sub:
            return x - trunc_mantissa(b, k);
        case FpOp::Mul:
            return x * trunc_mantissa(b, k);
        case FpOp::Div: {
            const double y = trunc_mantissa(b, k);
            if (y == 0.0) throw EvalError("div-by-zero", "floating-point division by zero");
            return x / y;
        }
        case FpOp::Tan:
            return std::tan(x);
        case FpOp::Arctan:
            return std::atan(x);
    }
    return x;
}

namespace {

template <class T>
ErrorStats stats_impl(std::span<const T> exact, std::span<const T> approx, double eps) {
    if (exact.size() != approx.size()) throw StatsError("length", "exact and approx differ in length");
    if (exact.empty()) throw StatsError("empty", "error_stats needs at least one sample");
    ErrorStats s;
    std::size_t zero = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const double e = static_cast<double>(exact[i]);
        const double a = static_cast<double>(approx[i]);
        if (exact[i] == approx[i]) ++zero;
        const double rel = std::abs(a - e) / std::max(std::abs(e), eps);
        sum += rel;
        s.max_rel_err = std::max(s.max_rel_err, rel);
    }
    s.mre = sum / static_cast<double>(exact.size());
    s.zero_error_fraction = static_cast<double>(zero) / static_cast<double>(exact.size());
    return s;
}

}  // namespace

ErrorStats error_stats(std::span<const std::int64_t> exact, std::span<const std::int64_t> approx) {
    return stats_impl(exact, approx, 1.0);
}

ErrorStats error_stats(std::span<const double> exact, std::span<const double> approx) {
    return stats_impl(exact, approx, std::numeric_limits<double>::min());
}

}  // namespace dhac
