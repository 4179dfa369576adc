#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dhac/graph.hpp"
#include "dhac/interp.hpp"

namespace dhac {

// Element of Z_m; value is always the canonical representative in [0, m).
struct Residue {
    std::int64_t value = 0;
    std::int64_t modulus = 2;
    friend bool operator==(const Residue&, const Residue&) = default;
};

bool is_prime(std::int64_t m);

Residue to_residue(std::int64_t a, std::int64_t m);  // ModulusError if m <= 1
Residue ring_add(Residue a, Residue b);
Residue ring_sub(Residue a, Residue b);
Residue ring_neg(Residue a);
Residue ring_mul(Residue a, Residue b);
Residue ring_inv(Residue a);  // NoInverseError for 0, ModulusError for composite m
Residue ring_div(Residue a, Residue b);

struct ModuleSet {
    std::vector<std::int64_t> moduli{3, 5, 7};
    // Throws ConfigError when empty, ModulusError for a modulus <= 1, a
    // repeated modulus, or (when `needs_primes`) a composite one.
    void validate(bool needs_primes) const;
};

// Evaluates output `output` of an integer graph in Z_m. Throws NoInverseError
// when a divisor's residue is zero.
Residue evaluate_mod(const Graph& g, std::span<const std::int64_t> inputs, std::int64_t m, std::size_t output = 0);
Residue evaluate_mod(const Graph& g, std::span<const Scalar> inputs, std::int64_t m, std::size_t output = 0);

enum class Judgement : std::uint8_t { Negative, Positive, Inconclusive };
std::string_view to_string(Judgement j);

struct RoundResult {
    std::int64_t modulus = 0;
    bool skipped = false;  // NoInverseError in this round
    std::int64_t computed = 0;
    std::int64_t claimed = 0;
};

struct RccVerdict {
    Judgement judgement = Judgement::Negative;
    std::optional<std::size_t> failed_round;  // 0-based index into the module set
    std::vector<RoundResult> rounds;          // executed rounds only
    std::size_t skipped_rounds = 0;
};

// Multi-round check of one output against its claimed value. Rounds run in
// module-set order and stop at the first mismatch. Graphs containing Div are
// first run exactly: if any division is inexact or any value wraps, the
// congruence argument does not apply and the verdict is Inconclusive.
RccVerdict rcc_check(const Graph& g, std::span<const Scalar> inputs, std::int64_t claimed, const ModuleSet& modules,
                     std::size_t output = 0);

// Reusable checker for trial loops on one graph; same semantics as rcc_check.
// Throws InputError unless every node is Int16.
class RccChecker {
public:
    RccChecker(const Graph& g, ModuleSet modules);
    RccVerdict check(std::span<const Scalar> inputs, std::int64_t claimed, std::size_t output = 0);

private:
    const Graph* graph_;
    ModuleSet modules_;
    bool has_div_;
    std::vector<std::int64_t> buffer_;
};

struct CheckSegment {
    Graph subgraph;                      // inputs: entry values; outputs: exit values
    std::vector<NodeId> nodes;           // covered arithmetic nodes (ids in the source graph)
    std::vector<NodeId> entry_sources;   // source-graph node feeding each subgraph input
    std::vector<NodeId> exit_sources;    // source-graph node behind each subgraph output
    std::vector<NodeId> entry_exports;   // Export taps on entry_sources in tapped graph
    std::vector<NodeId> exit_exports;    // Export taps on exit_sources in tapped graph
    int depth = 0;
};

// Breadth-first growth over integer arithmetic nodes (operands and consumers
// both count as neighbours) from each node not yet covered, up to `max_depth`
// layers. Segments are disjoint. Returns [] when the graph has no integer
// arithmetic. max_depth <= 0 means unbounded.
std::vector<CheckSegment> extract_segments(const Graph& g, int max_depth);

// Adds the Export taps named in the segments (entry and exit) to `g`. Export
// ids are assigned after g.max_id() and recorded in each segment.
Graph add_segment_taps(const Graph& g, std::vector<CheckSegment>& segments);

// Checks one segment against a trace of the tapped graph: entry exports become
// inputs, exit exports are the claimed values. Positive if any exit fails.
RccVerdict rcc_check_segment(const CheckSegment& seg, const Trace& trace, const ModuleSet& modules);

}  // namespace dhac
