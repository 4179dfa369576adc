#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dhac/arith.hpp"
#include "dhac/graph.hpp"
#include "dhac/interp.hpp"
#include "dhac/rcc.hpp"
#include "dhac/rng.hpp"

namespace dhac {

enum class SentinelKind : std::uint8_t { Addition, Multiplication, TanArctan };

std::string_view to_string(SentinelKind k);     // "add", "mul", "tan"
SentinelKind sentinel_kind_from_string(std::string_view s);  // also accepts the long names; ConfigError otherwise

inline constexpr double kDefaultDelta = 1e-13;

struct SentinelStep {
    FpOp op = FpOp::Add;
    double operand = 0.0;  // unused for Tan/Arctan
    friend bool operator==(const SentinelStep&, const SentinelStep&) = default;
};

struct Sentinel {
    SentinelKind kind = SentinelKind::Addition;
    int n = 3;                      // steps per direction; always 1 for TanArctan
    std::vector<double> operands;   // n values in (0, 1); empty for TanArctan
    NodeId site = 0;
    double delta = kDefaultDelta;
    bool relative = false;          // distance |I - R| / |I| instead of |I - R|

    // Forward steps in order, then backward steps; step i and step 2n-1-i
    // (0-based) are inverse operations.
    std::vector<SentinelStep> steps() const;

    friend bool operator==(const Sentinel&, const Sentinel&) = default;
};

// Draws operands from `rng`. TanArctan ignores `n` and uses one step each way.
// Throws ConfigError for n < 1 or delta <= 0.
Sentinel make_sentinel(SentinelKind kind, int n, NodeId site, double delta, Rng& rng);
// As above, and throws SiteError unless `site` is a Float64 node of `g`.
Sentinel make_sentinel(const Graph& g, SentinelKind kind, int n, NodeId site, double delta, Rng& rng);

struct InstrumentedGraph {
    Graph graph;
    std::vector<Sentinel> sentinels;
    std::vector<NodeId> entrance_exports;  // one per sentinel
    std::vector<NodeId> exit_exports;      // one per sentinel
    std::vector<std::vector<NodeId>> branch_nodes;  // sentinel-owned nodes (consts, steps, exports)
};

// Appends, per sentinel, an Export tap on the site, the 2n-step branch fed
// from the site and an Export on the branch end. New ids start after
// g.max_id(). Throws SiteError for missing, non-Float64 or repeated sites.
InstrumentedGraph instrument(const Graph& g, const std::vector<Sentinel>& sentinels);

struct SentinelResult {
    double input = 0.0;
    double returned = 0.0;
    double distance = 0.0;
    bool positive = false;
};

struct FbcVerdict {
    Judgement judgement = Judgement::Negative;  // Positive iff any sentinel is
    std::vector<SentinelResult> results;
};

double sentinel_distance(double input, double returned, bool relative);
// Pass requires distance < delta; NaN distances are positive.
inline bool exceeds(double distance, double delta) { return !(distance < delta); }

// Throws TraceError if an export is missing or not Float64.
FbcVerdict judge(const Trace& trace, const InstrumentedGraph& ig);

struct Roundtrip {
    double returned = 0.0;
    double distance = 0.0;
};
// Applies the 2n steps to x through the backend's float model. Throws
// EvalError on a non-finite intermediate.
Roundtrip sentinel_roundtrip(const Sentinel& s, double x, const Backend& backend);

// Candidate sites for `--sites auto`, in topological order: Float64 Add nodes
// that feed an Output, or every Float64 Add node when none does.
std::vector<NodeId> auto_site_candidates(const Graph& g);

// File form: {"graph": <graph document>, "sentinels": [{kind, n, operands,
// site, delta, distance, entrance, exit}]}. Operands and delta are written as
// shortest round-trip strings. Throws ParseError on malformed documents.
// branch_nodes is left empty when loading.
nlohmann::json instrumented_to_json(const InstrumentedGraph& ig);
InstrumentedGraph instrumented_from_json(const nlohmann::json& j);

}  // namespace dhac
