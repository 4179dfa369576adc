#include "dhac/rcc.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace dhac {

namespace {

void same_modulus(const Residue& a, const Residue& b) {
    if (a.modulus != b.modulus)
        throw ModulusError("mismatch", "residues with moduli " + std::to_string(a.modulus) + " and " +
                                           std::to_string(b.modulus));
}

std::int64_t canon(std::int64_t a, std::int64_t m) {
    const std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

std::int64_t mod_inverse(std::int64_t a, std::int64_t m) {
    // Extended Euclid on (a, m); a is canonical and nonzero.
    std::int64_t old_r = a, r = m, old_s = 1, s = 0;
    while (r != 0) {
        const std::int64_t q = old_r / r;
        std::tie(old_r, r) = std::make_pair(r, old_r - q * r);
        std::tie(old_s, s) = std::make_pair(s, old_s - q * s);
    }
    if (old_r != 1) throw NoInverseError("no-inverse", "value has no inverse modulo " + std::to_string(m));
    return canon(old_s, m);
}

bool is_int_arith(const Node& n) { return is_arithmetic(n.op) && n.type == ScalarType::Int16; }

// Residues of all nodes for one modulus; `out` is resized to the node count.
void residues(const Graph& g, std::span<const std::int64_t> inputs, std::int64_t m, std::vector<std::int64_t>& out) {
    const auto& nodes = g.nodes();
    out.resize(nodes.size());
    const bool prime = !g.has_op(Op::Div) || is_prime(m);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Node& n = nodes[k];
        if (n.type != ScalarType::Int16)
            throw InputError("type", "residue evaluation needs an integer graph; node " + std::to_string(n.id) +
                                         " is float64",
                             n.id);
        const auto& ops = g.operand_index(k);
        switch (n.op) {
            case Op::Input:
                out[k] = canon(inputs[g.input_position(k)], m);
                break;
            case Op::Const:
                out[k] = canon(n.value.i, m);
                break;
            case Op::Add:
                out[k] = (out[ops[0]] + out[ops[1]]) % m;
                break;
            case Op::Sub:
                out[k] = (out[ops[0]] + m - out[ops[1]]) % m;
                break;
            case Op::Mul:
                out[k] = (out[ops[0]] * out[ops[1]]) % m;
                break;
            case Op::Div:
                if (!prime) throw ModulusError("composite", "division needs a prime modulus, got " + std::to_string(m));
                if (out[ops[1]] == 0)
                    throw NoInverseError("no-inverse", "divisor is 0 modulo " + std::to_string(m), n.id);
                out[k] = (out[ops[0]] * mod_inverse(out[ops[1]], m)) % m;
                break;
            case Op::Output:
            case Op::Export:
                out[k] = out[ops[0]];
                break;
            default:
                throw InputError("type", "node " + std::to_string(n.id) + " cannot be evaluated in Z_m", n.id);
        }
    }
}

std::vector<std::int64_t> widen(std::span<const Scalar> inputs) {
    std::vector<std::int64_t> v;
    v.reserve(inputs.size());
    for (const Scalar& s : inputs) {
        if (s.type != ScalarType::Int16) throw InputError("type", "residue evaluation needs integer inputs");
        v.push_back(s.i);
    }
    return v;
}

// Exact run used to confirm the congruence argument applies to Div graphs.
bool divisions_exact_and_wrap_free(const Graph& g, std::span<const Scalar> inputs) {
    Evaluator ev(g);
    try {
        ev.run(inputs, Backend::exact());
    } catch (const EvalError&) {
        return false;
    }
    if (ev.wrapped()) return false;
    for (std::size_t k = 0; k < g.nodes().size(); ++k) {
        if (g.nodes()[k].op != Op::Div) continue;
        const auto& ops = g.operand_index(k);
        if (ev.value_at(ops[0]).i % ev.value_at(ops[1]).i != 0) return false;
    }
    return true;
}

RccVerdict run_rounds(const Graph& g, std::span<const std::int64_t> inputs, std::int64_t claimed,
                      const ModuleSet& modules, std::size_t output, std::vector<std::int64_t>& buffer) {
    if (output >= g.outputs().size()) throw InputError("output", "output index out of range");
    const std::size_t out_pos = g.index_of(g.outputs()[output]);
    RccVerdict v;
    for (std::size_t j = 0; j < modules.moduli.size(); ++j) {
        const std::int64_t m = modules.moduli[j];
        RoundResult r;
        r.modulus = m;
        r.claimed = canon(claimed, m);
        try {
            residues(g, inputs, m, buffer);
            r.computed = buffer[out_pos];
        } catch (const NoInverseError&) {
            r.skipped = true;
            ++v.skipped_rounds;
            v.rounds.push_back(r);
            continue;
        }
        v.rounds.push_back(r);
        if (r.computed != r.claimed) {
            v.judgement = Judgement::Positive;
            v.failed_round = j;
            return v;
        }
    }
    v.judgement = v.skipped_rounds == modules.moduli.size() ? Judgement::Inconclusive : Judgement::Negative;
    return v;
}

}  // namespace

bool is_prime(std::int64_t m) {
    if (m < 2) return false;
    if (m % 2 == 0) return m == 2;
    for (std::int64_t d = 3; d * d <= m; d += 2)
        if (m % d == 0) return false;
    return true;
}

Residue to_residue(std::int64_t a, std::int64_t m) {
    if (m <= 1) throw ModulusError("modulus", "modulus must exceed 1, got " + std::to_string(m));
    return {canon(a, m), m};
}

Residue ring_add(Residue a, Residue b) {
    same_modulus(a, b);
    return {(a.value + b.value) % a.modulus, a.modulus};
}

Residue ring_neg(Residue a) { return {(a.modulus - a.value) % a.modulus, a.modulus}; }

Residue ring_sub(Residue a, Residue b) {
    same_modulus(a, b);
    return ring_add(a, ring_neg(b));
}

Residue ring_mul(Residue a, Residue b) {
    same_modulus(a, b);
    return {(a.value * b.value) % a.modulus, a.modulus};
}

Residue ring_inv(Residue a) {
    if (!is_prime(a.modulus)) throw ModulusError("composite", "inverse needs a prime modulus, got " + std::to_string(a.modulus));
    if (a.value == 0) throw NoInverseError("no-inverse", "the zero class has no inverse");
    return {mod_inverse(a.value, a.modulus), a.modulus};
}

Residue ring_div(Residue a, Residue b) {
    same_modulus(a, b);
    return ring_mul(a, ring_inv(b));
}

void ModuleSet::validate(bool needs_primes) const {
    if (moduli.empty()) throw ConfigError("moduli", "module set is empty");
    std::set<std::int64_t> seen;
    for (std::int64_t m : moduli) {
        if (m <= 1) throw ModulusError("modulus", "modulus must exceed 1, got " + std::to_string(m));
        // Keeps products of two residues inside int64.
        if (m > (std::int64_t{1} << 31)) throw ModulusError("modulus", "modulus too large: " + std::to_string(m));
        if (!seen.insert(m).second) throw ModulusError("duplicate", "modulus repeated: " + std::to_string(m));
        if (needs_primes && !is_prime(m))
            throw ModulusError("composite", "graphs with division need prime moduli, got " + std::to_string(m));
    }
}

Residue evaluate_mod(const Graph& g, std::span<const std::int64_t> inputs, std::int64_t m, std::size_t output) {
    if (m <= 1) throw ModulusError("modulus", "modulus must exceed 1, got " + std::to_string(m));
    if (inputs.size() != g.inputs().size()) throw InputError("arity", "input count differs from graph inputs");
    if (output >= g.outputs().size()) throw InputError("output", "output index out of range");
    std::vector<std::int64_t> buf;
    residues(g, inputs, m, buf);
    return {buf[g.index_of(g.outputs()[output])], m};
}

Residue evaluate_mod(const Graph& g, std::span<const Scalar> inputs, std::int64_t m, std::size_t output) {
    const auto v = widen(inputs);
    return evaluate_mod(g, v, m, output);
}

std::string_view to_string(Judgement j) {
    switch (j) {
        case Judgement::Negative:
            return "Negative";
        case Judgement::Positive:
            return "Positive";
        case Judgement::Inconclusive:
            return "Inconclusive";
    }
    return "?";
}

RccVerdict rcc_check(const Graph& g, std::span<const Scalar> inputs, std::int64_t claimed, const ModuleSet& modules,
                     std::size_t output) {
    RccChecker checker(g, modules);
    return checker.check(inputs, claimed, output);
}

RccChecker::RccChecker(const Graph& g, ModuleSet modules)
    : graph_(&g), modules_(std::move(modules)), has_div_(g.has_op(Op::Div)) {
    modules_.validate(has_div_);
    if (g.type() != ScalarType::Int16 ||
        std::any_of(g.nodes().begin(), g.nodes().end(), [](const Node& n) { return n.type != ScalarType::Int16; }))
        throw InputError("type", "residue check needs an all-integer graph");
}

RccVerdict RccChecker::check(std::span<const Scalar> inputs, std::int64_t claimed, std::size_t output) {
    if (inputs.size() != graph_->inputs().size()) throw InputError("arity", "input count differs from graph inputs");
    if (has_div_ && !divisions_exact_and_wrap_free(*graph_, inputs)) {
        RccVerdict v;
        v.judgement = Judgement::Inconclusive;
        return v;
    }
    const auto wide = widen(inputs);
    return run_rounds(*graph_, wide, claimed, modules_, output, buffer_);
}

std::vector<CheckSegment> extract_segments(const Graph& g, int max_depth) {
    const auto& nodes = g.nodes();
    const auto consumers = g.consumers();
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (!is_int_arith(nodes[k])) continue;
        for (std::uint32_t o : g.operand_index(k))
            if (is_int_arith(nodes[o])) adj[k].push_back(o);
        for (std::size_t c : consumers[k])
            if (is_int_arith(nodes[c])) adj[k].push_back(c);
    }
    std::vector<bool> covered(nodes.size(), false);
    std::vector<CheckSegment> out;
    NodeId next_id = g.max_id() + 1;
    for (std::size_t seed = 0; seed < nodes.size(); ++seed) {
        if (!is_int_arith(nodes[seed]) || covered[seed]) continue;
        std::vector<std::size_t> members{seed};
        covered[seed] = true;
        std::vector<std::size_t> frontier{seed};
        int depth = 1;
        while (max_depth <= 0 || depth < max_depth) {
            std::vector<std::size_t> next;
            for (std::size_t u : frontier)
                for (std::size_t v : adj[u])
                    if (!covered[v]) {
                        covered[v] = true;
                        next.push_back(v);
                    }
            if (next.empty()) break;
            members.insert(members.end(), next.begin(), next.end());
            frontier = std::move(next);
            ++depth;
        }
        std::sort(members.begin(), members.end());
        std::unordered_set<std::size_t> in_seg(members.begin(), members.end());

        std::vector<std::size_t> entries, consts;
        std::vector<std::size_t> exits;
        for (std::size_t k : members) {
            for (std::uint32_t o : g.operand_index(k)) {
                if (in_seg.count(o)) continue;
                auto& bucket = nodes[o].op == Op::Const ? consts : entries;
                if (std::find(bucket.begin(), bucket.end(), o) == bucket.end()) bucket.push_back(o);
            }
            const bool leaves = consumers[k].empty() || std::any_of(consumers[k].begin(), consumers[k].end(),
                                                                    [&](std::size_t c) { return !in_seg.count(c); });
            if (leaves) exits.push_back(k);
        }
        std::sort(entries.begin(), entries.end());
        std::sort(consts.begin(), consts.end());

        std::vector<Node> sub;
        std::vector<NodeId> sub_inputs, sub_outputs, seg_nodes, entry_ids, exit_ids;
        for (std::size_t e : entries) {
            sub.push_back(Node{nodes[e].id, Op::Input, ScalarType::Int16, {}, {}});
            sub_inputs.push_back(nodes[e].id);
            entry_ids.push_back(nodes[e].id);
        }
        for (std::size_t c : consts) sub.push_back(nodes[c]);
        for (std::size_t k : members) {
            sub.push_back(nodes[k]);
            seg_nodes.push_back(nodes[k].id);
        }
        for (std::size_t x : exits) {
            const NodeId oid = next_id++;
            sub.push_back(Node{oid, Op::Output, ScalarType::Int16, {nodes[x].id}, {}});
            sub_outputs.push_back(oid);
            exit_ids.push_back(nodes[x].id);
        }
        if (sub_inputs.empty()) {
            // A segment fed only by constants still needs an input to be a valid graph.
            const NodeId iid = next_id++;
            sub.push_back(Node{iid, Op::Input, ScalarType::Int16, {}, {}});
            sub_inputs.push_back(iid);
        }
        Graph subgraph(g.name() + "/segment" + std::to_string(out.size()), ScalarType::Int16, std::move(sub),
                       std::move(sub_inputs), std::move(sub_outputs));
        out.push_back(CheckSegment{std::move(subgraph), std::move(seg_nodes), std::move(entry_ids), std::move(exit_ids),
                                   {}, {}, depth});
    }
    return out;
}

Graph add_segment_taps(const Graph& g, std::vector<CheckSegment>& segments) {
    std::vector<Node> nodes = g.nodes();
    NodeId next = g.max_id() + 1;
    for (CheckSegment& seg : segments) {
        seg.entry_exports.clear();
        seg.exit_exports.clear();
        for (NodeId src : seg.entry_sources) {
            nodes.push_back(Node{next, Op::Export, ScalarType::Int16, {src}, {}});
            seg.entry_exports.push_back(next++);
        }
        for (NodeId src : seg.exit_sources) {
            nodes.push_back(Node{next, Op::Export, ScalarType::Int16, {src}, {}});
            seg.exit_exports.push_back(next++);
        }
    }
    return Graph(g.name(), g.type(), std::move(nodes), g.inputs(), g.outputs());
}

RccVerdict rcc_check_segment(const CheckSegment& seg, const Trace& trace, const ModuleSet& modules) {
    auto fetch = [&](NodeId id) {
        auto it = trace.exports.find(id);
        if (it == trace.exports.end()) throw TraceError("missing-export", "trace lacks export " + std::to_string(id), id);
        if (it->second.type != ScalarType::Int16) throw TraceError("type", "segment export is not int16", id);
        return it->second;
    };
    std::vector<Scalar> inputs;
    if (seg.entry_exports.size() != seg.entry_sources.size() || seg.exit_exports.size() != seg.exit_sources.size())
        throw TraceError("untapped", "segment has no export taps; call add_segment_taps first");
    for (NodeId id : seg.entry_exports) inputs.push_back(fetch(id));
    while (inputs.size() < seg.subgraph.inputs().size()) inputs.push_back(Scalar::int16(0));
    RccChecker checker(seg.subgraph, modules);
    RccVerdict combined;
    bool inconclusive = false;
    for (std::size_t k = 0; k < seg.exit_exports.size(); ++k) {
        RccVerdict v = checker.check(inputs, fetch(seg.exit_exports[k]).i, k);
        if (v.judgement == Judgement::Positive) return v;
        if (v.judgement == Judgement::Inconclusive) inconclusive = true;
        combined.rounds.insert(combined.rounds.end(), v.rounds.begin(), v.rounds.end());
        combined.skipped_rounds += v.skipped_rounds;
    }
    combined.judgement = inconclusive ? Judgement::Inconclusive : Judgement::Negative;
    return combined;
}

}  // namespace dhac
