#include "dhac/graph.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <queue>
#include <unordered_set>

namespace dhac {

namespace {

constexpr std::array<std::pair<Op, std::string_view>, 11> kOpNames{{
    {Op::Input, "input"},
    {Op::Const, "const"},
    {Op::Add, "add"},
    {Op::Sub, "sub"},
    {Op::Mul, "mul"},
    {Op::Div, "div"},
    {Op::Tan, "tan"},
    {Op::Arctan, "arctan"},
    {Op::Cast, "cast"},
    {Op::Output, "output"},
    {Op::Export, "export"},
}};

std::string id_str(NodeId id) { return std::to_string(id); }

}  // namespace

std::string_view to_string(ScalarType t) { return t == ScalarType::Int16 ? "int16" : "float64"; }

std::string_view to_string(Op op) {
    for (const auto& [o, name] : kOpNames)
        if (o == op) return name;
    return "?";
}

ScalarType scalar_type_from_string(std::string_view s) {
    if (s == "int16") return ScalarType::Int16;
    if (s == "float64") return ScalarType::Float64;
    throw ParseError("type", "unknown scalar type '" + std::string(s) + "'");
}

Op op_from_string(std::string_view s) {
    for (const auto& [o, name] : kOpNames)
        if (name == s) return o;
    throw ParseError("op", "unknown op '" + std::string(s) + "'");
}

bool is_arithmetic(Op op) { return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div; }

int arity(Op op) {
    switch (op) {
        case Op::Input:
        case Op::Const:
            return 0;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            return 2;
        default:
            return 1;
    }
}

bool operator==(const Scalar& a, const Scalar& b) {
    if (a.type != b.type) return false;
    if (a.type == ScalarType::Int16) return a.i == b.i;
    return std::bit_cast<std::uint64_t>(a.f) == std::bit_cast<std::uint64_t>(b.f);
}

Graph::Graph(std::string name, ScalarType type, std::vector<Node> nodes, std::vector<NodeId> inputs,
             std::vector<NodeId> outputs)
    : name_(std::move(name)), type_(type), inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    std::unordered_map<NodeId, std::size_t> raw;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Node& n = nodes[k];
        if (n.id < 0) throw ValidationError("id", "node id must be non-negative", n.id);
        if (!raw.emplace(n.id, k).second)
            throw ValidationError("duplicate-id", "duplicate node id " + id_str(n.id), n.id);
    }
    for (const Node& n : nodes) {
        if (static_cast<int>(n.operands.size()) != arity(n.op))
            throw ValidationError("arity",
                                  "node " + id_str(n.id) + " (" + std::string(to_string(n.op)) + ") expects " +
                                      std::to_string(arity(n.op)) + " operands, got " +
                                      std::to_string(n.operands.size()),
                                  n.id);
        for (NodeId o : n.operands) {
            if (o == n.id) throw ValidationError("cycle", "node " + id_str(n.id) + " references itself", n.id);
            if (!raw.count(o))
                throw ValidationError("dangling", "node " + id_str(n.id) + " references unknown id " + id_str(o),
                                      n.id);
        }
    }
    // Kahn's algorithm; ties broken by original position so the order is stable.
    std::vector<std::size_t> indegree(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> users(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (NodeId o : nodes[k].operands) {
            ++indegree[k];
            users[raw[o]].push_back(k);
        }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (indegree[k] == 0) ready.push(k);
    std::vector<std::size_t> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        const std::size_t k = ready.top();
        ready.pop();
        order.push_back(k);
        for (std::size_t u : users[k])
            if (--indegree[u] == 0) ready.push(u);
    }
    if (order.size() != nodes.size()) {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (indegree[k] != 0)
                throw ValidationError("cycle", "cycle through node " + id_str(nodes[k].id), nodes[k].id);
    }
    nodes_.reserve(nodes.size());
    for (std::size_t k : order) nodes_.push_back(std::move(nodes[k]));
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        index_.emplace(nodes_[k].id, k);
        max_id_ = std::max(max_id_, nodes_[k].id);
    }

    operand_index_.resize(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const Node& n = nodes_[k];
        for (NodeId o : n.operands) operand_index_[k].push_back(static_cast<std::uint32_t>(index_.at(o)));
        const auto bad_type = [&](const std::string& why) {
            throw ValidationError("type", "node " + id_str(n.id) + ": " + why, n.id);
        };
        switch (n.op) {
            case Op::Const:
                if (n.value.type != n.type) bad_type("constant value type differs from node type");
                break;
            case Op::Tan:
            case Op::Arctan:
                if (n.type != ScalarType::Float64) bad_type("tan/arctan require float64");
                [[fallthrough]];
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
            case Op::Output:
            case Op::Export:
                for (std::uint32_t o : operand_index_[k])
                    if (nodes_[o].type != n.type) bad_type("mixed-type edge");
                break;
            case Op::Cast:
                if (nodes_[operand_index_[k][0]].type == n.type) bad_type("cast to the same type");
                break;
            case Op::Input:
                break;
        }
        for (std::uint32_t o : operand_index_[k])
            if (nodes_[o].op == Op::Output)
                throw ValidationError("output-operand", "node " + id_str(n.id) + " consumes an output node",
                                      n.id);
    }

    if (inputs_.empty()) throw ValidationError("no-input", "graph has no inputs");
    if (outputs_.empty()) throw ValidationError("no-output", "graph has no outputs");
    input_pos_.assign(nodes_.size(), 0);
    std::unordered_set<NodeId> seen;
    for (std::size_t p = 0; p < inputs_.size(); ++p) {
        const NodeId id = inputs_[p];
        auto it = index_.find(id);
        if (it == index_.end()) throw ValidationError("dangling", "unknown input id " + id_str(id), id);
        if (nodes_[it->second].op != Op::Input)
            throw ValidationError("inputs", "inputs lists non-input node " + id_str(id), id);
        if (!seen.insert(id).second) throw ValidationError("inputs", "input listed twice " + id_str(id), id);
        input_pos_[it->second] = p;
    }
    for (const Node& n : nodes_)
        if (n.op == Op::Input && !seen.count(n.id))
            throw ValidationError("inputs", "input node " + id_str(n.id) + " missing from inputs", n.id);
    seen.clear();
    for (NodeId id : outputs_) {
        auto it = index_.find(id);
        if (it == index_.end()) throw ValidationError("dangling", "unknown output id " + id_str(id), id);
        if (nodes_[it->second].op != Op::Output)
            throw ValidationError("outputs", "outputs lists non-output node " + id_str(id), id);
        if (!seen.insert(id).second) throw ValidationError("outputs", "output listed twice " + id_str(id), id);
    }
    for (const Node& n : nodes_)
        if (n.op == Op::Output && !seen.count(n.id))
            throw ValidationError("outputs", "output node " + id_str(n.id) + " missing from outputs", n.id);
}

std::size_t Graph::index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown-id", "unknown node id " + id_str(id), id);
    return it->second;
}

std::vector<std::vector<std::size_t>> Graph::consumers() const {
    std::vector<std::vector<std::size_t>> out(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k)
        for (std::uint32_t o : operand_index_[k]) out[o].push_back(k);
    return out;
}

bool Graph::has_op(Op op) const {
    return std::any_of(nodes_.begin(), nodes_.end(), [op](const Node& n) { return n.op == op; });
}

Census op_census(const Graph& g) {
    Census c;
    for (const Node& n : g.nodes()) {
        switch (n.op) {
            case Op::Add:
            case Op::Sub:
                ++c.add_sub;
                break;
            case Op::Mul:
                ++c.mul;
                break;
            case Op::Div:
                ++c.div;
                break;
            default:
                break;
        }
    }
    c.total = c.add_sub + c.mul + c.div;
    return c;
}

GraphBuilder::GraphBuilder(std::string name, ScalarType type) : name_(std::move(name)), type_(type) {}

NodeId GraphBuilder::push(Node n) {
    n.id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
}

NodeId GraphBuilder::input(ScalarType t) {
    const NodeId id = push(Node{0, Op::Input, t, {}, {}});
    inputs_.push_back(id);
    return id;
}

NodeId GraphBuilder::constant(Scalar v) { return push(Node{0, Op::Const, v.type, {}, v}); }

NodeId GraphBuilder::op(Op o, NodeId a, NodeId b) { return push(Node{0, o, type_of(a), {a, b}, {}}); }

NodeId GraphBuilder::op(Op o, NodeId a) { return push(Node{0, o, type_of(a), {a}, {}}); }

NodeId GraphBuilder::cast(NodeId a, ScalarType to) { return push(Node{0, Op::Cast, to, {a}, {}}); }

NodeId GraphBuilder::output(NodeId a) {
    const NodeId id = op(Op::Output, a);
    outputs_.push_back(id);
    return id;
}

Graph GraphBuilder::build() const { return Graph(name_, type_, nodes_, inputs_, outputs_); }

}  // namespace dhac
