#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dhac/error.hpp"

namespace dhac {

enum class ScalarType : std::uint8_t { Int16, Float64 };

enum class Op : std::uint8_t {
    Input,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Tan,
    Arctan,
    Cast,  // the only op whose operand may have a different type
    Output,
    Export,
};

std::string_view to_string(ScalarType t);
std::string_view to_string(Op op);
ScalarType scalar_type_from_string(std::string_view s);  // throws ParseError
Op op_from_string(std::string_view s);                    // throws ParseError

bool is_arithmetic(Op op);  // Add, Sub, Mul, Div
int arity(Op op);

struct Scalar {
    ScalarType type = ScalarType::Int16;
    std::int16_t i = 0;
    double f = 0.0;

    static Scalar int16(std::int16_t v) { return {ScalarType::Int16, v, 0.0}; }
    static Scalar float64(double v) { return {ScalarType::Float64, 0, v}; }

    // Integer value widened, or the float value.
    double as_double() const { return type == ScalarType::Int16 ? static_cast<double>(i) : f; }

    // Bit-exact equality (floats compared by representation).
    friend bool operator==(const Scalar& a, const Scalar& b);
};

struct Node {
    NodeId id = 0;
    Op op = Op::Input;
    ScalarType type = ScalarType::Int16;
    std::vector<NodeId> operands;
    Scalar value;  // Const only
};

struct Census {
    std::size_t add_sub = 0;
    std::size_t mul = 0;
    std::size_t div = 0;
    std::size_t total = 0;
    friend bool operator==(const Census&, const Census&) = default;
};

// Immutable, validated dataflow graph. Nodes are held in a topological order;
// `operand_index` holds, for each node, the positions of its operands in that
// order.
class Graph {
public:
    // Validates and topologically sorts. Throws ValidationError on arity,
    // dangling id, duplicate id, cycle or type violations.
    Graph(std::string name, ScalarType type, std::vector<Node> nodes, std::vector<NodeId> inputs,
          std::vector<NodeId> outputs);

    const std::string& name() const { return name_; }
    ScalarType type() const { return type_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<NodeId>& inputs() const { return inputs_; }
    const std::vector<NodeId>& outputs() const { return outputs_; }

    bool contains(NodeId id) const { return index_.count(id) != 0; }
    std::size_t index_of(NodeId id) const;  // throws ValidationError("unknown-id")
    const Node& node(NodeId id) const { return nodes_[index_of(id)]; }
    const std::vector<std::uint32_t>& operand_index(std::size_t pos) const { return operand_index_[pos]; }
    std::size_t input_position(std::size_t pos) const { return input_pos_[pos]; }

    // Node ids of the consumers of each node, by topological position.
    std::vector<std::vector<std::size_t>> consumers() const;

    NodeId max_id() const { return max_id_; }
    bool has_op(Op op) const;

private:
    std::string name_;
    ScalarType type_;
    std::vector<Node> nodes_;
    std::vector<NodeId> inputs_;
    std::vector<NodeId> outputs_;
    std::unordered_map<NodeId, std::size_t> index_;
    std::vector<std::vector<std::uint32_t>> operand_index_;
    std::vector<std::size_t> input_pos_;  // for Input nodes: position in inputs_
    NodeId max_id_ = -1;
};

Census op_census(const Graph& g);

// Incremental construction helper; ids are assigned sequentially from 0.
class GraphBuilder {
public:
    explicit GraphBuilder(std::string name, ScalarType type = ScalarType::Int16);

    NodeId input(ScalarType t);
    NodeId input() { return input(type_); }
    NodeId constant(Scalar v);
    NodeId constant_int(std::int16_t v) { return constant(Scalar::int16(v)); }
    NodeId constant_float(double v) { return constant(Scalar::float64(v)); }
    NodeId op(Op op, NodeId a, NodeId b);
    NodeId op(Op op, NodeId a);
    NodeId add(NodeId a, NodeId b) { return op(Op::Add, a, b); }
    NodeId sub(NodeId a, NodeId b) { return op(Op::Sub, a, b); }
    NodeId mul(NodeId a, NodeId b) { return op(Op::Mul, a, b); }
    NodeId div(NodeId a, NodeId b) { return op(Op::Div, a, b); }
    NodeId cast(NodeId a, ScalarType to);
    NodeId output(NodeId a);

    ScalarType type_of(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).type; }
    Graph build() const;

private:
    NodeId push(Node n);

    std::string name_;
    ScalarType type_;
    std::vector<Node> nodes_;
    std::vector<NodeId> inputs_;
    std::vector<NodeId> outputs_;
};

}  // namespace dhac
