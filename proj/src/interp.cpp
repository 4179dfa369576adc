#include "dhac/interp.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dhac {

namespace {

std::int16_t exact_int(Op op, std::int16_t a, std::int16_t b, bool& wrapped, NodeId id) {
    std::int32_t r = 0;
    switch (op) {
        case Op::Add:
            r = a + b;
            break;
        case Op::Sub:
            r = a - b;
            break;
        case Op::Mul:
            r = static_cast<std::int32_t>(a) * b;
            break;
        case Op::Div:
            if (b == 0) throw EvalError("div-by-zero", "integer division by zero at node " + std::to_string(id), id);
            r = a / b;  // truncates toward zero; -32768 / -1 wraps below
            break;
        default:
            break;
    }
    if (r < std::numeric_limits<std::int16_t>::min() || r > std::numeric_limits<std::int16_t>::max()) wrapped = true;
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(static_cast<std::uint32_t>(r)));
}

}  // namespace

Evaluator::Evaluator(const Graph& g) : graph_(&g), values_(g.nodes().size()) {
    for (NodeId id : g.outputs()) output_pos_.push_back(g.index_of(id));
    for (std::size_t k = 0; k < g.nodes().size(); ++k)
        if (g.nodes()[k].op == Op::Export) export_pos_.push_back(k);
}

void Evaluator::run(std::span<const Scalar> inputs, const Backend& backend) {
    const Graph& g = *graph_;
    if (inputs.size() != g.inputs().size())
        throw InputError("arity", "expected " + std::to_string(g.inputs().size()) + " inputs, got " +
                                      std::to_string(inputs.size()));
    const bool approx_int = backend.paradigm == Paradigm::Approximate &&
                            (backend.adder.kind != IntUnit::Kind::Exact ||
                             backend.multiplier.kind != IntUnit::Kind::Exact);
    const FpTruncModel fp = backend.paradigm == Paradigm::Approximate ? backend.fp : FpTruncModel{};
    wrapped_ = false;
    const auto& nodes = g.nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Node& n = nodes[k];
        const auto& ops = g.operand_index(k);
        Scalar& out = values_[k];
        switch (n.op) {
            case Op::Input: {
                const Scalar& v = inputs[g.input_position(k)];
                if (v.type != n.type)
                    throw InputError("type", "input " + std::to_string(g.input_position(k)) + " should be " +
                                                 std::string(to_string(n.type)),
                                     n.id);
                out = v;
                break;
            }
            case Op::Const:
                out = n.value;
                break;
            case Op::Output:
            case Op::Export:
                out = values_[ops[0]];
                break;
            case Op::Cast: {
                const Scalar& v = values_[ops[0]];
                if (n.type == ScalarType::Float64) {
                    out = Scalar::float64(static_cast<double>(v.i));
                } else {
                    const double t = std::trunc(v.f);
                    if (!std::isfinite(t) || t < -32768.0 || t > 32767.0)
                        throw EvalError("cast-range", "float value out of int16 range at node " + std::to_string(n.id),
                                        n.id);
                    out = Scalar::int16(static_cast<std::int16_t>(t));
                }
                break;
            }
            default: {
                if (n.type == ScalarType::Int16) {
                    const std::int16_t a = values_[ops[0]].i;
                    const std::int16_t b = values_[ops[1]].i;
                    std::int16_t r;
                    if (!approx_int || n.op == Op::Div) {
                        r = exact_int(n.op, a, b, wrapped_, n.id);
                    } else if (n.op == Op::Add) {
                        r = add16(backend.adder, a, b);
                    } else if (n.op == Op::Sub) {
                        r = sub16(backend.adder, a, b);
                    } else {
                        r = mul16(backend.multiplier, a, b);
                    }
                    out = Scalar::int16(r);
                } else {
                    const double a = values_[ops[0]].f;
                    double r = 0.0;
                    try {
                        switch (n.op) {
                            case Op::Add:
                                r = fp_op(fp, FpOp::Add, a, values_[ops[1]].f);
                                break;
                            case Op::Sub:
                                r = fp_op(fp, FpOp::Sub, a, values_[ops[1]].f);
                                break;
                            case Op::Mul:
                                r = fp_op(fp, FpOp::Mul, a, values_[ops[1]].f);
                                break;
                            case Op::Div:
                                r = fp_op(fp, FpOp::Div, a, values_[ops[1]].f);
                                break;
                            case Op::Tan:
                                r = fp_op(fp, FpOp::Tan, a);
                                break;
                            case Op::Arctan:
                                r = fp_op(fp, FpOp::Arctan, a);
                                break;
                            default:
                                break;
                        }
                    } catch (const EvalError& e) {
                        throw EvalError(e.code(), std::string(e.what()) + " at node " + std::to_string(n.id), n.id);
                    }
                    if (!std::isfinite(r))
                        throw EvalError("non-finite", "non-finite value at node " + std::to_string(n.id), n.id);
                    out = Scalar::float64(r);
                }
                break;
            }
        }
    }
}

Scalar Evaluator::output(std::size_t k) const { return values_[output_pos_.at(k)]; }

Trace Evaluator::trace() const {
    Trace t;
    t.outputs.reserve(output_pos_.size());
    for (std::size_t p : output_pos_) t.outputs.push_back(values_[p]);
    for (std::size_t p : export_pos_) t.exports.emplace(graph_->nodes()[p].id, values_[p]);
    return t;
}

Trace evaluate(const Graph& g, std::span<const Scalar> inputs, const Backend& backend) {
    Evaluator ev(g);
    ev.run(inputs, backend);
    return ev.trace();
}

}  // namespace dhac
