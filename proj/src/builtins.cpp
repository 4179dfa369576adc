#include "dhac/builtins.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace dhac {

namespace {

std::int64_t param(const BuiltinParams& p, const std::string& key, std::int64_t fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void check_keys(const std::string& name, const BuiltinParams& p, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : p) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            throw BuiltinError("params", name + ": unknown parameter '" + k + "'");
    }
}

NodeId horner(GraphBuilder& b, const std::vector<NodeId>& c, int t) {
    NodeId acc = c.back();
    for (std::size_t k = c.size() - 1; k-- > 0;) acc = b.add(b.mul(b.constant_int(static_cast<std::int16_t>(t)), acc), c[k]);
    return acc;
}

// Coefficient boxes keep every exact intermediate inside int16; the initial
// value dominates the output so relative errors are measured against a value
// far from zero.
const std::vector<InputRange>& ode_box(const std::string& method, int order) {
    static const std::vector<InputRange> euler2{{12000, 20000}, {0, 200}, {0, 40}, {0, 8}};
    static const std::vector<InputRange> euler3{{12000, 20000}, {0, 200}, {0, 40}, {0, 8}, {0, 1}};
    static const std::vector<InputRange> rk2{{12000, 20000}, {0, 100}, {0, 20}, {0, 4}};
    static const std::vector<InputRange> rk3{{12000, 18000}, {0, 20}, {0, 4}, {0, 1}, {0, 1}};
    if (method == "euler") return order == 2 ? euler2 : euler3;
    return order == 2 ? rk2 : rk3;
}

Builtin make_euler(const BuiltinParams& p) {
    check_keys("euler", p, {"order", "steps", "seed"});
    const int order = static_cast<int>(param(p, "order", 2));
    const int steps = static_cast<int>(param(p, "steps", 10));
    if (order != 2 && order != 3) throw BuiltinError("params", "euler: order must be 2 or 3");
    if (steps < 1 || steps > 10) throw BuiltinError("params", "euler: steps must be in [1, 10]");
    const OdeGrid grid = ode_grid("euler", order, steps, static_cast<std::uint64_t>(param(p, "seed", 1)));
    GraphBuilder b("euler" + std::to_string(order));
    NodeId y = b.input();
    std::vector<NodeId> c;
    for (int k = 0; k <= order; ++k) c.push_back(b.input());
    // Order 2 adds the c0 contribution of all steps once at the end, so each
    // step costs 3 Mul and 2 Add; order 3 runs plain Horner per step.
    int span = 0;
    for (int n = 0; n < steps; ++n) {
        const NodeId slope = order == 2 ? b.mul(b.constant_int(static_cast<std::int16_t>(grid.t[n])),
                                                horner(b, {c[1], c[2]}, grid.t[n]))
                                        : horner(b, c, grid.t[n]);
        y = b.add(y, b.mul(b.constant_int(static_cast<std::int16_t>(grid.h[n])), slope));
        span += grid.h[n];
    }
    if (order == 2) y = b.add(y, b.mul(b.constant_int(static_cast<std::int16_t>(span)), c[0]));
    b.output(y);
    return {b.build(), ode_box("euler", order)};
}

// Heun's method on y' = p(t); the state is carried as 2y so the 1/2 weight
// needs no division. Stage values at shared grid points are reused.
Builtin make_rk2(int steps, const OdeGrid& grid) {
    GraphBuilder b("rk2");
    NodeId y = b.input();
    std::vector<NodeId> c;
    for (int k = 0; k <= 2; ++k) c.push_back(b.input());
    std::vector<NodeId> g;
    for (int n = 0; n <= steps; ++n) g.push_back(horner(b, c, grid.t[n]));
    for (int n = 0; n < steps; ++n)
        y = b.add(y, b.mul(b.constant_int(static_cast<std::int16_t>(grid.h[n])), b.add(g[n], g[n + 1])));
    b.output(y);
    return {b.build(), ode_box("rk", 2)};
}

// Kutta's third-order method on y' = p(t) (Simpson weights 1, 4, 1 at t, t+h/2,
// t+h); the state is carried as 6y. Stage polynomials use constant powers of t
// with the midpoint weight folded in, and the c0 contribution of all steps is
// added once at the end.
Builtin make_rk3(int steps, const OdeGrid& grid) {
    GraphBuilder b("rk3");
    NodeId y = b.input();
    std::vector<NodeId> c;
    for (int k = 0; k <= 3; ++k) c.push_back(b.input());
    std::vector<NodeId> st;
    for (int j = 0; j <= 2 * steps; ++j) {
        const int n = j / 2;
        const int t = (j % 2 == 0) ? grid.t[n] : grid.t[n] + grid.h[n] / 2;
        const int w = (j % 2 == 0) ? 1 : 4;
        std::vector<NodeId> terms;
        int power = 1;
        for (int k = 1; k <= 3; ++k) {
            power *= t;
            terms.push_back(b.mul(c[k], b.constant_int(static_cast<std::int16_t>(w * power))));
        }
        st.push_back(b.add(b.add(terms[0], terms[1]), terms[2]));
    }
    int span = 0;
    for (int n = 0; n < steps; ++n) {
        const NodeId s = b.add(b.add(st[2 * n], st[2 * n + 1]), st[2 * n + 2]);
        y = b.add(y, b.mul(b.constant_int(static_cast<std::int16_t>(grid.h[n])), s));
        span += grid.h[n];
    }
    y = b.add(y, b.mul(b.constant_int(static_cast<std::int16_t>(6 * span)), c[0]));
    b.output(y);
    return {b.build(), ode_box("rk", 3)};
}

Builtin make_runge_kutta(const BuiltinParams& p) {
    check_keys("runge_kutta", p, {"order", "steps", "seed"});
    const int order = static_cast<int>(param(p, "order", 2));
    const int steps = static_cast<int>(param(p, "steps", 10));
    if (order != 2 && order != 3) throw BuiltinError("params", "runge_kutta: order must be 2 or 3");
    if (steps < 1 || steps > 10) throw BuiltinError("params", "runge_kutta: steps must be in [1, 10]");
    const OdeGrid grid = ode_grid("runge_kutta", order, steps, static_cast<std::uint64_t>(param(p, "seed", 1)));
    return order == 2 ? make_rk2(steps, grid) : make_rk3(steps, grid);
}

Builtin make_fir(const BuiltinParams& p) {
    check_keys("fir_filter", p, {"taps"});
    const int n = static_cast<int>(param(p, "taps", 11));
    if (n < 1 || n > 15) throw BuiltinError("params", "fir_filter: taps must be in [1, 15]");
    const std::vector<int> h = fir_taps(n);
    GraphBuilder b("fir");
    std::vector<NodeId> x;
    for (int i = 0; i < n; ++i) x.push_back(b.input());
    NodeId acc = b.mul(b.constant_int(static_cast<std::int16_t>(h[0])), x[0]);
    for (int i = 1; i < n; ++i) acc = b.add(acc, b.mul(b.constant_int(static_cast<std::int16_t>(h[i])), x[i]));
    b.output(acc);
    return {b.build(), std::vector<InputRange>(static_cast<std::size_t>(n), InputRange{0, 255})};
}

Builtin make_conv2x2(const BuiltinParams& p) {
    check_keys("conv2x2", p, {});
    GraphBuilder b("conv2x2");
    std::vector<NodeId> w, x;
    for (int i = 0; i < 4; ++i) w.push_back(b.input());
    for (int i = 0; i < 4; ++i) x.push_back(b.input());
    NodeId acc = b.mul(w[0], x[0]);
    for (int i = 1; i < 4; ++i) acc = b.add(acc, b.mul(w[i], x[i]));
    b.output(acc);
    std::vector<InputRange> box(4, InputRange{0, 31});
    box.resize(8, InputRange{0, 255});
    return {b.build(), box};
}

Builtin make_conv_layer(const BuiltinParams& p) {
    check_keys("conv_layer", p, {"channels", "kernel", "size", "out_channels", "seed"});
    ConvLayerShape s;
    s.channels = static_cast<int>(param(p, "channels", 8));
    s.kernel = static_cast<int>(param(p, "kernel", 3));
    s.size = static_cast<int>(param(p, "size", 16));
    s.out_channels = static_cast<int>(param(p, "out_channels", 1));
    if (s.channels < 1 || s.out_channels < 1 || s.kernel < 1 || s.size < s.kernel || s.size > 256)
        throw BuiltinError("params", "conv_layer: need channels, out_channels >= 1 and 1 <= kernel <= size <= 256");
    const ConvLayerWeights wb = conv_layer_weights(s, static_cast<std::uint64_t>(param(p, "seed", 1)));
    GraphBuilder b("conv_layer", ScalarType::Float64);
    std::vector<NodeId> x;
    for (int i = 0; i < s.channels * s.size * s.size; ++i) x.push_back(b.input());
    const int os = s.out_size();
    const int kk = s.kernel * s.kernel;
    for (int o = 0; o < s.out_channels; ++o)
        for (int oy = 0; oy < os; ++oy)
            for (int ox = 0; ox < os; ++ox) {
                std::optional<NodeId> acc;
                for (int ch = 0; ch < s.channels; ++ch)
                    for (int ky = 0; ky < s.kernel; ++ky)
                        for (int kx = 0; kx < s.kernel; ++kx) {
                            const double w = wb.weights[static_cast<std::size_t>((o * s.channels + ch) * kk + ky * s.kernel + kx)];
                            const NodeId xi = x[static_cast<std::size_t>((ch * s.size + oy + ky) * s.size + ox + kx)];
                            const NodeId prod = b.mul(b.constant_float(w), xi);
                            acc = acc ? b.add(*acc, prod) : prod;
                        }
                b.output(b.add(*acc, b.constant_float(wb.bias[static_cast<std::size_t>(o)])));
            }
    return {b.build(), std::vector<InputRange>(x.size(), InputRange{0.0, 1.0})};
}

void check_int_range(const Builtin& b) {
    const auto bounds = int_value_bounds(b.graph, b.input_box);
    for (std::size_t k = 0; k < bounds.size(); ++k)
        if (bounds[k].lo < -32768 || bounds[k].hi > 32767)
            throw BuiltinError("range", b.graph.name() + ": node " + std::to_string(b.graph.nodes()[k].id) +
                                            " may leave the int16 range");
}

}  // namespace

OdeGrid ode_grid(const std::string& method, int order, int steps, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, "grid/" + method + std::to_string(order));
    OdeGrid g;
    if (method == "runge_kutta" && order == 3) {
        // Even steps keep the midpoints on the integer grid; one step is
        // stretched at random so the grid is not an arithmetic progression.
        g.t.push_back(-11);
        const int stretched = static_cast<int>(rng.uniform_int(0, steps - 1));
        for (int n = 0; n < steps; ++n) {
            const int h = (n == stretched) ? 2 * static_cast<int>(rng.uniform_int(1, 2)) : 2;
            g.h.push_back(h);
            g.t.push_back(g.t.back() + h);
        }
        return g;
    }
    g.t.push_back(-7);
    for (int n = 0; n < steps; ++n) {
        const int h = static_cast<int>(rng.uniform_int(1, 2));
        g.h.push_back(h);
        g.t.push_back(g.t.back() + h);
    }
    return g;
}

// Hamming-windowed sinc low-pass, cutoff 0.3 cycles/sample, scaled to a DC
// gain of 64 and rounded. The small negative side lobes give the filter mixed
// sign products.
std::vector<int> fir_taps(int n) {
    const double fc = 0.3;
    const double m = (n - 1) / 2.0;
    std::vector<double> h(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = i - m;
        const double s = x == 0.0 ? 2 * fc : std::sin(2 * std::numbers::pi * fc * x) / (std::numbers::pi * x);
        const double w = n == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2 * std::numbers::pi * i / (n - 1));
        h[static_cast<std::size_t>(i)] = s * w;
        sum += s * w;
    }
    std::vector<int> taps;
    for (double v : h) taps.push_back(static_cast<int>(std::lround(64.0 * v / sum)));
    return taps;
}

ConvLayerWeights conv_layer_weights(const ConvLayerShape& s, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, "conv_layer/weights");
    ConvLayerWeights w;
    const std::size_t n = static_cast<std::size_t>(s.out_channels) * s.channels * s.kernel * s.kernel;
    const double scale = 1.0 / (s.channels * s.kernel * s.kernel);
    for (std::size_t i = 0; i < n; ++i) w.weights.push_back(rng.uniform(0.0, 14.0 * scale));
    for (int o = 0; o < s.out_channels; ++o) w.bias.push_back(rng.uniform(-0.5, 0.5));
    return w;
}

std::vector<IntBound> int_value_bounds(const Graph& g, const std::vector<InputRange>& box) {
    if (box.size() != g.inputs().size()) throw BuiltinError("box", "input box size differs from input count");
    const std::size_t ni = g.inputs().size();
    struct Value {
        bool affine = false;
        std::int64_t c0 = 0;
        std::vector<std::int64_t> coef;
        IntBound range;
    };
    auto range_of = [&](Value& v) {
        if (!v.affine) return;
        std::int64_t lo = v.c0, hi = v.c0;
        for (std::size_t i = 0; i < ni; ++i) {
            const std::int64_t a = v.coef[i] * static_cast<std::int64_t>(box[i].lo);
            const std::int64_t b = v.coef[i] * static_cast<std::int64_t>(box[i].hi);
            lo += std::min(a, b);
            hi += std::max(a, b);
        }
        v.range = {lo, hi};
    };
    auto is_const = [&](const Value& v) {
        return v.affine && std::all_of(v.coef.begin(), v.coef.end(), [](std::int64_t c) { return c == 0; });
    };
    std::vector<Value> vals(g.nodes().size());
    std::vector<IntBound> out(g.nodes().size());
    for (std::size_t k = 0; k < g.nodes().size(); ++k) {
        const Node& n = g.nodes()[k];
        Value& v = vals[k];
        if (n.type != ScalarType::Int16) continue;
        const auto& ops = g.operand_index(k);
        switch (n.op) {
            case Op::Input: {
                v.affine = true;
                v.coef.assign(ni, 0);
                v.coef[g.input_position(k)] = 1;
                break;
            }
            case Op::Const:
                v.affine = true;
                v.coef.assign(ni, 0);
                v.c0 = n.value.i;
                break;
            case Op::Output:
            case Op::Export:
                v = vals[ops[0]];
                break;
            case Op::Cast:
                v.range = {-32768, 32767};
                break;
            case Op::Add:
            case Op::Sub: {
                const Value& a = vals[ops[0]];
                const Value& b = vals[ops[1]];
                const std::int64_t sign = n.op == Op::Add ? 1 : -1;
                if (a.affine && b.affine) {
                    v.affine = true;
                    v.c0 = a.c0 + sign * b.c0;
                    v.coef.resize(ni);
                    for (std::size_t i = 0; i < ni; ++i) v.coef[i] = a.coef[i] + sign * b.coef[i];
                } else if (sign > 0) {
                    v.range = {a.range.lo + b.range.lo, a.range.hi + b.range.hi};
                } else {
                    v.range = {a.range.lo - b.range.hi, a.range.hi - b.range.lo};
                }
                break;
            }
            case Op::Mul: {
                const Value& a = vals[ops[0]];
                const Value& b = vals[ops[1]];
                if (is_const(a) || is_const(b)) {
                    const Value& c = is_const(a) ? a : b;
                    const Value& x = is_const(a) ? b : a;
                    if (x.affine) {
                        v.affine = true;
                        v.c0 = c.c0 * x.c0;
                        v.coef.resize(ni);
                        for (std::size_t i = 0; i < ni; ++i) v.coef[i] = c.c0 * x.coef[i];
                        break;
                    }
                }
                const std::int64_t p[4] = {a.range.lo * b.range.lo, a.range.lo * b.range.hi, a.range.hi * b.range.lo,
                                           a.range.hi * b.range.hi};
                v.range = {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
                break;
            }
            case Op::Div: {
                const Value& a = vals[ops[0]];
                const std::int64_t m = std::max(std::abs(a.range.lo), std::abs(a.range.hi));
                // |a / b| <= |a| for any nonzero integer b; -32768 / -1 gives m = 32768.
                v.range = {-m, m};
                break;
            }
            default:
                break;
        }
        range_of(v);
        out[k] = v.range;
    }
    return out;
}

Builtin make_builtin(const std::string& name, const BuiltinParams& params) {
    Builtin b = [&]() -> Builtin {
        if (name == "euler") return make_euler(params);
        if (name == "runge_kutta") return make_runge_kutta(params);
        if (name == "fir_filter") return make_fir(params);
        if (name == "conv2x2") return make_conv2x2(params);
        if (name == "conv_layer") return make_conv_layer(params);
        throw BuiltinError("name", "unknown builtin '" + name + "'");
    }();
    if (b.graph.type() == ScalarType::Int16) check_int_range(b);
    return b;
}

Graph builtin_program(const std::string& name, const BuiltinParams& params) { return make_builtin(name, params).graph; }

std::vector<std::string> builtin_names() { return {"euler", "runge_kutta", "fir_filter", "conv2x2", "conv_layer"}; }

std::vector<std::string> integer_builtin_aliases() { return {"euler2", "euler3", "rk2", "rk3", "fir", "conv2x2"}; }

ProgramSpec parse_program_spec(const std::string& spec) {
    ProgramSpec ps;
    ps.label = spec;
    static const std::map<std::string, std::pair<std::string, BuiltinParams>> aliases{
        {"euler2", {"euler", {{"order", 2}}}},
        {"euler3", {"euler", {{"order", 3}}}},
        {"rk2", {"runge_kutta", {{"order", 2}}}},
        {"rk3", {"runge_kutta", {{"order", 3}}}},
        {"fir", {"fir_filter", {}}},
        {"conv2x2", {"conv2x2", {}}},
        {"conv_layer", {"conv_layer", {}}},
    };
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    if (auto it = aliases.find(head); it != aliases.end()) {
        ps.name = it->second.first;
        ps.params = it->second.second;
    } else {
        ps.name = head;
    }
    if (colon != std::string::npos) {
        std::size_t pos = colon + 1;
        while (pos < spec.size()) {
            const std::size_t end = std::min(spec.find(',', pos), spec.size());
            const std::string item = spec.substr(pos, end - pos);
            const std::size_t eq = item.find('=');
            if (eq == std::string::npos || eq == 0) throw BuiltinError("params", "malformed parameter '" + item + "'");
            try {
                std::size_t used = 0;
                const std::string value = item.substr(eq + 1);
                ps.params[item.substr(0, eq)] = std::stoll(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw BuiltinError("params", "parameter '" + item + "' needs an integer value");
            }
            pos = end + 1;
        }
    }
    return ps;
}

Builtin make_builtin(const ProgramSpec& spec) { return make_builtin(spec.name, spec.params); }

std::vector<Scalar> sample_inputs(const Builtin& b, Rng& rng) {
    std::vector<Scalar> v;
    v.reserve(b.input_box.size());
    for (std::size_t i = 0; i < b.input_box.size(); ++i) {
        const InputRange& r = b.input_box[i];
        if (b.graph.node(b.graph.inputs()[i]).type == ScalarType::Int16)
            v.push_back(Scalar::int16(static_cast<std::int16_t>(
                rng.uniform_int(static_cast<std::int64_t>(r.lo), static_cast<std::int64_t>(r.hi)))));
        else
            v.push_back(Scalar::float64(rng.uniform(r.lo, r.hi)));
    }
    return v;
}

}  // namespace dhac
