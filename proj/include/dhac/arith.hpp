#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "dhac/error.hpp"

namespace dhac {

// Parametric 16-bit unit models. Parameter 0 (for LOA, TruncAdd, TruncMul,
// BrokenArray) and s = 16 (SegmentedCarry) degenerate to exact arithmetic.
struct IntUnit {
    enum class Kind : std::uint8_t {
        Exact,
        LOA,             // adder: low k bits are a|b, high part exact with carry-in 0
        TruncAdd,        // adder: low k bits of both operands cleared
        SegmentedCarry,  // adder: s-bit segments, carry-in speculated from the previous segment only
        TruncMul,        // multiplier: low k bits of |b| cleared
        BrokenArray,     // multiplier: partial-product bits in columns < k dropped
        LogApprox,       // multiplier: Mitchell log-domain product
    };

    Kind kind = Kind::Exact;
    int k = 0;

    static IntUnit exact() { return {}; }
    static IntUnit loa(int k) { return {Kind::LOA, k}; }
    static IntUnit trunc_add(int k) { return {Kind::TruncAdd, k}; }
    static IntUnit segmented_carry(int s) { return {Kind::SegmentedCarry, s}; }
    static IntUnit trunc_mul(int k) { return {Kind::TruncMul, k}; }
    static IntUnit broken_array(int k) { return {Kind::BrokenArray, k}; }
    static IntUnit log_approx() { return {Kind::LogApprox, 0}; }

    bool is_adder() const;
    bool is_multiplier() const;
    void validate() const;  // throws ConfigError on out-of-range parameters

    // Short label such as "LOA4", "TM4", "LOG", "exact".
    std::string label() const;
    // Inverse of label(); accepts the JSON kind names as well.
    static IntUnit parse(const std::string& kind, int k);

    friend bool operator==(const IntUnit&, const IntUnit&) = default;
};

struct FpTruncModel {
    int truncated_bits = 0;  // in [0, 52]
    friend bool operator==(const FpTruncModel&, const FpTruncModel&) = default;
};

enum class Paradigm : std::uint8_t { Accurate, Approximate };

struct Backend {
    Paradigm paradigm = Paradigm::Accurate;
    IntUnit adder;
    IntUnit multiplier = IntUnit::exact();
    FpTruncModel fp;
    std::uint64_t seed = 0;  // reserved; current models are deterministic

    static Backend exact() { return {}; }
    static Backend approximate(IntUnit adder, IntUnit multiplier, int fp_trunc_bits = 0);
    static Backend fp_truncation(int bits) { return approximate(IntUnit::exact(), IntUnit::exact(), bits); }

    // Throws ConfigError if the models are invalid or an Accurate backend
    // carries inexact models.
    void validate() const;
    std::string label() const;  // e.g. "LOA4+TM4", "fp20", "exact"

    friend bool operator==(const Backend&, const Backend&) = default;
};

std::int16_t add16(const IntUnit& model, std::int16_t a, std::int16_t b);
std::int16_t sub16(const IntUnit& model, std::int16_t a, std::int16_t b);
std::int16_t mul16(const IntUnit& model, std::int16_t a, std::int16_t b);

// Unsigned 16x16 multiplier cores; mul16 applies them to magnitudes.
std::uint32_t umul_trunc(std::uint32_t a, std::uint32_t b, int k);
std::uint32_t umul_broken_array(std::uint32_t a, std::uint32_t b, int k);
std::uint32_t umul_mitchell(std::uint32_t a, std::uint32_t b);

double trunc_mantissa(double x, int k);

enum class FpOp : std::uint8_t { Add, Sub, Mul, Div, Tan, Arctan };

double fp_op(const FpTruncModel& model, FpOp op, double a, double b = 0.0);

struct ErrorStats {
    double mre = 0.0;
    double max_rel_err = 0.0;
    double zero_error_fraction = 0.0;
};

ErrorStats error_stats(std::span<const std::int64_t> exact, std::span<const std::int64_t> approx);
ErrorStats error_stats(std::span<const double> exact, std::span<const double> approx);

}  // namespace dhac
