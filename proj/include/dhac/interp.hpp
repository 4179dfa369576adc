#pragma once

#include <map>
#include <span>
#include <vector>

#include "dhac/arith.hpp"
#include "dhac/graph.hpp"

namespace dhac {

struct Trace {
    std::vector<Scalar> outputs;
    std::map<NodeId, Scalar> exports;
};

// Evaluates every node in topological order, dispatching Add/Sub/Mul/Div
// through `backend`. Throws InputError on arity/type mismatch and EvalError on
// integer division by zero or a non-finite float.
Trace evaluate(const Graph& g, std::span<const Scalar> inputs, const Backend& backend);

// Reusable evaluator for trial loops: keeps its value buffer between calls.
class Evaluator {
public:
    explicit Evaluator(const Graph& g);

    // Runs the graph; values of all nodes remain readable afterwards.
    void run(std::span<const Scalar> inputs, const Backend& backend);

    const Scalar& value_at(std::size_t pos) const { return values_[pos]; }
    const Scalar& value(NodeId id) const { return values_[graph_->index_of(id)]; }
    Scalar output(std::size_t k = 0) const;
    Trace trace() const;

    // True when the last run on the exact backend left the int16 range
    // anywhere (i.e. some value wrapped). Only tracked for exact integer ops.
    bool wrapped() const { return wrapped_; }

    const Graph& graph() const { return *graph_; }

private:
    const Graph* graph_;
    std::vector<Scalar> values_;
    std::vector<std::size_t> output_pos_;
    std::vector<std::size_t> export_pos_;
    bool wrapped_ = false;
};

}  // namespace dhac
