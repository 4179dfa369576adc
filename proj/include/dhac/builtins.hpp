#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dhac/graph.hpp"
#include "dhac/rng.hpp"

namespace dhac {

using BuiltinParams = std::map<std::string, std::int64_t>;

struct InputRange {
    double lo = 0.0;
    double hi = 0.0;  // inclusive for Int16 inputs, exclusive for Float64
};

struct Builtin {
    Graph graph;
    std::vector<InputRange> input_box;  // one per graph input
};

// Builtins: euler{order 2|3, steps=10, seed}, runge_kutta{order 2|3, steps=10,
// seed}, fir_filter{taps=11}, conv2x2, conv_layer{channels=8, kernel=3,
// size=16, out_channels=1, seed}. Integer builtins are checked at construction
// never to leave the int16 range under exact arithmetic for inputs drawn from
// their box. Throws BuiltinError for unknown names or invalid params.
Builtin make_builtin(const std::string& name, const BuiltinParams& params = {});
Graph builtin_program(const std::string& name, const BuiltinParams& params = {});

std::vector<std::string> builtin_names();

// Program specs accepted by configs and the CLI: short aliases (euler2, euler3,
// rk2, rk3, fir, conv2x2, conv_layer) or "name:key=value,key=value".
struct ProgramSpec {
    std::string label;  // as written by the user
    std::string name;
    BuiltinParams params;
};
ProgramSpec parse_program_spec(const std::string& spec);
Builtin make_builtin(const ProgramSpec& spec);

std::vector<std::string> integer_builtin_aliases();  // euler2 euler3 rk2 rk3 fir conv2x2

std::vector<Scalar> sample_inputs(const Builtin& b, Rng& rng);

// Deterministic design data, exposed so tests can recompute builtin outputs
// directly from the formulas.
struct OdeGrid {
    std::vector<int> t;  // steps + 1 grid points
    std::vector<int> h;  // t[n+1] - t[n]
};
OdeGrid ode_grid(const std::string& method, int order, int steps, std::uint64_t seed);
std::vector<int> fir_taps(int n);

struct ConvLayerShape {
    int channels = 8;
    int kernel = 3;
    int size = 16;
    int out_channels = 1;
    int out_size() const { return size - kernel + 1; }
};
struct ConvLayerWeights {
    std::vector<double> weights;  // [out][channel][ky][kx]
    std::vector<double> bias;     // [out]
};
ConvLayerWeights conv_layer_weights(const ConvLayerShape& shape, std::uint64_t seed);

// Sound bounds on every Int16 node's exact (unwrapped) value over the input
// box. Products and sums stay affine in the inputs while one factor of each
// product is constant, which keeps cancelling terms exact; otherwise interval
// arithmetic is used. Float nodes get an empty range {0, 0}.
struct IntBound {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};
std::vector<IntBound> int_value_bounds(const Graph& g, const std::vector<InputRange>& box);

}  // namespace dhac
