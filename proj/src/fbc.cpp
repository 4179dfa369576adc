#include "dhac/fbc.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dhac/graph_io.hpp"

namespace dhac {

std::string_view to_string(SentinelKind k) {
    switch (k) {
        case SentinelKind::Addition:
            return "add";
        case SentinelKind::Multiplication:
            return "mul";
        case SentinelKind::TanArctan:
            return "tan";
    }
    return "?";
}

SentinelKind sentinel_kind_from_string(std::string_view s) {
    if (s == "add" || s == "addition") return SentinelKind::Addition;
    if (s == "mul" || s == "multiplication") return SentinelKind::Multiplication;
    if (s == "tan" || s == "tan-arctan" || s == "tanarctan") return SentinelKind::TanArctan;
    throw ConfigError("kind", "unknown sentinel kind '" + std::string(s) + "'");
}

std::vector<SentinelStep> Sentinel::steps() const {
    std::vector<SentinelStep> out;
    switch (kind) {
        case SentinelKind::Addition:
        case SentinelKind::Multiplication: {
            const bool add = kind == SentinelKind::Addition;
            for (double r : operands) out.push_back({add ? FpOp::Add : FpOp::Mul, r});
            for (auto it = operands.rbegin(); it != operands.rend(); ++it)
                out.push_back({add ? FpOp::Sub : FpOp::Div, *it});
            break;
        }
        case SentinelKind::TanArctan:
            out.push_back({FpOp::Arctan, 0.0});
            out.push_back({FpOp::Tan, 0.0});
            break;
    }
    return out;
}

Sentinel make_sentinel(SentinelKind kind, int n, NodeId site, double delta, Rng& rng) {
    if (n < 1) throw ConfigError("steps", "sentinel needs at least one step, got " + std::to_string(n));
    if (!(delta > 0.0)) throw ConfigError("delta", "delta must be positive");
    Sentinel s;
    s.kind = kind;
    s.site = site;
    s.delta = delta;
    if (kind == SentinelKind::TanArctan) {
        s.n = 1;
    } else {
        s.n = n;
        s.operands.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) s.operands.push_back(rng.open01_full_mantissa());
    }
    return s;
}

Sentinel make_sentinel(const Graph& g, SentinelKind kind, int n, NodeId site, double delta, Rng& rng) {
    if (!g.contains(site)) throw SiteError("missing", "sentinel site " + std::to_string(site) + " is not in the graph", site);
    if (g.node(site).type != ScalarType::Float64)
        throw SiteError("integer-site", "sentinel site " + std::to_string(site) + " is not float64", site);
    return make_sentinel(kind, n, site, delta, rng);
}

InstrumentedGraph instrument(const Graph& g, const std::vector<Sentinel>& sentinels) {
    std::vector<Node> nodes = g.nodes();
    NodeId next = g.max_id() + 1;
    InstrumentedGraph ig{g, sentinels, {}, {}, {}};
    std::set<NodeId> used;
    for (const Sentinel& s : sentinels) {
        if (!g.contains(s.site))
            throw SiteError("missing", "sentinel site " + std::to_string(s.site) + " is not in the graph", s.site);
        const Node& site = g.node(s.site);
        if (site.type != ScalarType::Float64)
            throw SiteError("integer-site", "sentinel site " + std::to_string(s.site) + " is not float64", s.site);
        if (site.op == Op::Output || site.op == Op::Export)
            throw SiteError("sink-site", "sentinel site " + std::to_string(s.site) + " is a sink", s.site);
        if (!used.insert(s.site).second)
            throw SiteError("duplicate", "two sentinels at node " + std::to_string(s.site), s.site);

        std::vector<NodeId> owned;
        auto push = [&](Op op, std::vector<NodeId> operands, Scalar value = Scalar::float64(0.0)) {
            nodes.push_back(Node{next, op, ScalarType::Float64, std::move(operands), value});
            owned.push_back(next);
            return next++;
        };
        const NodeId entrance = push(Op::Export, {s.site});
        NodeId cur = s.site;
        for (const SentinelStep& st : s.steps()) {
            switch (st.op) {
                case FpOp::Tan:
                    cur = push(Op::Tan, {cur});
                    break;
                case FpOp::Arctan:
                    cur = push(Op::Arctan, {cur});
                    break;
                default: {
                    const NodeId c = push(Op::Const, {}, Scalar::float64(st.operand));
                    const Op op = st.op == FpOp::Add ? Op::Add : st.op == FpOp::Sub ? Op::Sub
                                                          : st.op == FpOp::Mul ? Op::Mul
                                                                               : Op::Div;
                    cur = push(op, {cur, c});
                }
            }
        }
        const NodeId exit = push(Op::Export, {cur});
        ig.entrance_exports.push_back(entrance);
        ig.exit_exports.push_back(exit);
        ig.branch_nodes.push_back(std::move(owned));
    }
    ig.graph = Graph(g.name(), g.type(), std::move(nodes), g.inputs(), g.outputs());
    return ig;
}

double sentinel_distance(double input, double returned, bool relative) {
    const double d = std::abs(input - returned);
    return relative ? d / std::max(std::abs(input), 1e-300) : d;
}

FbcVerdict judge(const Trace& trace, const InstrumentedGraph& ig) {
    auto fetch = [&](NodeId id) {
        auto it = trace.exports.find(id);
        if (it == trace.exports.end()) throw TraceError("missing-export", "trace lacks export " + std::to_string(id), id);
        if (it->second.type != ScalarType::Float64) throw TraceError("type", "sentinel export is not float64", id);
        return it->second.f;
    };
    FbcVerdict v;
    for (std::size_t k = 0; k < ig.sentinels.size(); ++k) {
        const Sentinel& s = ig.sentinels[k];
        SentinelResult r;
        r.input = fetch(ig.entrance_exports[k]);
        r.returned = fetch(ig.exit_exports[k]);
        r.distance = sentinel_distance(r.input, r.returned, s.relative);
        r.positive = exceeds(r.distance, s.delta);
        if (r.positive) v.judgement = Judgement::Positive;
        v.results.push_back(r);
    }
    return v;
}

Roundtrip sentinel_roundtrip(const Sentinel& s, double x, const Backend& backend) {
    if (!std::isfinite(x)) throw EvalError("non-finite", "sentinel input is not finite");
    const FpTruncModel model = backend.paradigm == Paradigm::Accurate ? FpTruncModel{} : backend.fp;
    double v = x;
    for (const SentinelStep& st : s.steps()) {
        v = fp_op(model, st.op, v, st.operand);
        if (!std::isfinite(v)) throw EvalError("non-finite", "non-finite value inside sentinel");
    }
    return {v, sentinel_distance(x, v, s.relative)};
}

std::vector<NodeId> auto_site_candidates(const Graph& g) {
    std::vector<NodeId> all, feeding_output;
    const auto consumers = g.consumers();
    for (std::size_t k = 0; k < g.nodes().size(); ++k) {
        const Node& n = g.nodes()[k];
        if (n.op != Op::Add || n.type != ScalarType::Float64) continue;
        all.push_back(n.id);
        if (std::any_of(consumers[k].begin(), consumers[k].end(),
                        [&](std::size_t c) { return g.nodes()[c].op == Op::Output; }))
            feeding_output.push_back(n.id);
    }
    return feeding_output.empty() ? all : feeding_output;
}

nlohmann::json instrumented_to_json(const InstrumentedGraph& ig) {
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t k = 0; k < ig.sentinels.size(); ++k) {
        const Sentinel& s = ig.sentinels[k];
        nlohmann::json ops = nlohmann::json::array();
        for (double r : s.operands) ops.push_back(format_double(r));
        list.push_back({{"kind", std::string(to_string(s.kind))},
                        {"n", s.n},
                        {"operands", ops},
                        {"site", s.site},
                        {"delta", format_double(s.delta)},
                        {"distance", s.relative ? "relative" : "absolute"},
                        {"entrance", ig.entrance_exports[k]},
                        {"exit", ig.exit_exports[k]}});
    }
    return {{"graph", graph_to_json(ig.graph)}, {"sentinels", list}};
}

InstrumentedGraph instrumented_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || !j.contains("graph") || !j.contains("sentinels"))
            throw ParseError("shape", "instrumented document needs 'graph' and 'sentinels'");
        InstrumentedGraph ig{graph_from_json(j.at("graph")), {}, {}, {}, {}};
        auto number = [](const nlohmann::json& x) {
            return x.is_string() ? parse_double(x.get<std::string>()) : x.get<double>();
        };
        for (const nlohmann::json& e : j.at("sentinels")) {
            Sentinel s;
            try {
                s.kind = sentinel_kind_from_string(e.at("kind").get<std::string>());
            } catch (const ConfigError& ce) {
                throw ParseError("kind", ce.what());
            }
            s.n = e.at("n").get<int>();
            for (const nlohmann::json& r : e.at("operands")) s.operands.push_back(number(r));
            s.site = e.at("site").get<NodeId>();
            s.delta = number(e.at("delta"));
            s.relative = e.value("distance", "absolute") == "relative";
            const bool shape_ok = s.kind == SentinelKind::TanArctan
                                      ? s.n == 1 && s.operands.empty()
                                      : s.n >= 1 && s.operands.size() == static_cast<std::size_t>(s.n);
            if (!shape_ok || !(s.delta > 0.0)) throw ParseError("sentinel", "inconsistent sentinel description");
            const NodeId entrance = e.at("entrance").get<NodeId>();
            const NodeId exit = e.at("exit").get<NodeId>();
            for (NodeId id : {entrance, exit})
                if (!ig.graph.contains(id) || ig.graph.node(id).op != Op::Export)
                    throw ParseError("sentinel", "sentinel export " + std::to_string(id) + " is not an Export node");
            ig.sentinels.push_back(std::move(s));
            ig.entrance_exports.push_back(entrance);
            ig.exit_exports.push_back(exit);
        }
        return ig;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("shape", std::string("malformed instrumented document: ") + e.what());
    }
}

}  // namespace dhac
