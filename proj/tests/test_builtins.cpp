#include <doctest.h>

#include <cmath>

#include "dhac/builtins.hpp"
#include "dhac/interp.hpp"

using namespace dhac;

namespace {

std::int64_t poly(const std::vector<std::int64_t>& c, std::int64_t t) {
    std::int64_t v = 0, p = 1;
    for (std::int64_t ck : c) {
        v += ck * p;
        p *= t;
    }
    return v;
}

struct Sample {
    std::int64_t y0;
    std::vector<std::int64_t> c;
    std::vector<Scalar> inputs;
};

Sample draw(const Builtin& b, Rng& r) {
    Sample s;
    s.inputs = sample_inputs(b, r);
    s.y0 = s.inputs[0].i;
    for (std::size_t k = 1; k < s.inputs.size(); ++k) s.c.push_back(s.inputs[k].i);
    return s;
}

std::int64_t run_exact(const Builtin& b, const std::vector<Scalar>& in) {
    return evaluate(b.graph, in, Backend::exact()).outputs.at(0).i;
}

bool within(std::size_t total, double target, double tol) { return std::abs(total - target) <= tol * target; }

}  // namespace

TEST_CASE("FIR taps are frozen") {
    CHECK(fir_taps(11) == std::vector<int>{0, 1, -2, -4, 18, 38, 18, -4, -2, 1, 0});
}

TEST_CASE("census of the integer builtins") {
    CHECK(op_census(builtin_program("fir_filter")) == Census{10, 11, 0, 21});
    CHECK(op_census(builtin_program("conv2x2")) == Census{3, 4, 0, 7});
    CHECK(op_census(builtin_program("euler", {{"order", 2}})) == Census{21, 31, 0, 52});
    CHECK(op_census(builtin_program("euler", {{"order", 3}})) == Census{40, 40, 0, 80});
    // Reference totals with the tolerance the builtins are designed to.
    CHECK(within(op_census(builtin_program("euler", {{"order", 2}})).total, 54, 0.10));
    CHECK(within(op_census(builtin_program("euler", {{"order", 3}})).total, 88, 0.10));
    CHECK(within(op_census(builtin_program("runge_kutta", {{"order", 2}})).total, 74, 0.10));
    CHECK(within(op_census(builtin_program("runge_kutta", {{"order", 3}})).total, 148, 0.10));
}

TEST_CASE("ODE grids") {
    for (const char* method : {"euler", "runge_kutta"})
        for (int order : {2, 3}) {
            const OdeGrid g = ode_grid(method, order, 10, 1);
            REQUIRE(g.t.size() == 11);
            REQUIRE(g.h.size() == 10);
            for (std::size_t n = 0; n < 10; ++n) {
                CHECK(g.t[n + 1] - g.t[n] == g.h[n]);
                CHECK(g.h[n] >= 1);
                CHECK(g.h[n] <= 4);
                if (std::string(method) == "runge_kutta" && order == 3) CHECK(g.h[n] % 2 == 0);
            }
            CHECK(ode_grid(method, order, 10, 1).h == g.h);
        }
}

TEST_CASE("Euler outputs follow the explicit sum") {
    for (int order : {2, 3}) {
        const Builtin b = make_builtin("euler", {{"order", order}});
        const OdeGrid g = ode_grid("euler", order, 10, 1);
        Rng r = Rng::substream(3, "test/euler", static_cast<std::uint64_t>(order));
        for (int trial = 0; trial < 500; ++trial) {
            const Sample s = draw(b, r);
            std::int64_t y = s.y0;
            for (int n = 0; n < 10; ++n) y += g.h[n] * poly(s.c, g.t[n]);
            REQUIRE(run_exact(b, s.inputs) == y);
        }
    }
}

TEST_CASE("Heun outputs follow the explicit sum (state 2y)") {
    const Builtin b = make_builtin("runge_kutta", {{"order", 2}});
    const OdeGrid g = ode_grid("runge_kutta", 2, 10, 1);
    Rng r(41);
    for (int trial = 0; trial < 500; ++trial) {
        const Sample s = draw(b, r);
        std::int64_t y = s.y0;
        for (int n = 0; n < 10; ++n) y += g.h[n] * (poly(s.c, g.t[n]) + poly(s.c, g.t[n + 1]));
        REQUIRE(run_exact(b, s.inputs) == y);
    }
}

TEST_CASE("Kutta third-order outputs follow Simpson weights (state 6y)") {
    const Builtin b = make_builtin("runge_kutta", {{"order", 3}});
    const OdeGrid g = ode_grid("runge_kutta", 3, 10, 1);
    Rng r(42);
    for (int trial = 0; trial < 500; ++trial) {
        const Sample s = draw(b, r);
        std::int64_t y = s.y0;
        for (int n = 0; n < 10; ++n)
            y += g.h[n] * (poly(s.c, g.t[n]) + 4 * poly(s.c, g.t[n] + g.h[n] / 2) + poly(s.c, g.t[n + 1]));
        REQUIRE(run_exact(b, s.inputs) == y);
    }
}

TEST_CASE("FIR and conv2x2 outputs are dot products") {
    const Builtin fir = make_builtin("fir_filter");
    const Builtin conv = make_builtin("conv2x2");
    const std::vector<int> h{0, 1, -2, -4, 18, 38, 18, -4, -2, 1, 0};
    Rng r(43);
    for (int trial = 0; trial < 500; ++trial) {
        const auto x = sample_inputs(fir, r);
        std::int64_t acc = 0;
        for (int i = 0; i < 11; ++i) acc += h[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)].i;
        REQUIRE(run_exact(fir, x) == acc);
        const auto v = sample_inputs(conv, r);
        std::int64_t dot = 0;
        for (int i = 0; i < 4; ++i) dot += std::int64_t{v[static_cast<std::size_t>(i)].i} * v[static_cast<std::size_t>(i + 4)].i;
        REQUIRE(run_exact(conv, v) == dot);
    }
}

TEST_CASE("conv_layer equals a direct convolution") {
    const ConvLayerShape shape{3, 3, 6, 2};
    const Builtin b = make_builtin("conv_layer", {{"channels", 3}, {"kernel", 3}, {"size", 6}, {"out_channels", 2}});
    const ConvLayerWeights w = conv_layer_weights(shape, 1);
    Rng r(44);
    const auto x = sample_inputs(b, r);
    const Trace t = evaluate(b.graph, x, Backend::exact());
    REQUIRE(t.outputs.size() == 2 * 4 * 4);
    std::size_t k = 0;
    for (int o = 0; o < 2; ++o)
        for (int oy = 0; oy < 4; ++oy)
            for (int ox = 0; ox < 4; ++ox) {
                double acc = 0.0;
                bool first = true;
                for (int ch = 0; ch < 3; ++ch)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const double p = w.weights[static_cast<std::size_t>(((o * 3 + ch) * 3 + ky) * 3 + kx)] *
                                             x[static_cast<std::size_t>((ch * 6 + oy + ky) * 6 + ox + kx)].f;
                            acc = first ? p : acc + p;
                            first = false;
                        }
                CHECK(t.outputs[k++].f == acc + w.bias[static_cast<std::size_t>(o)]);
            }
}

TEST_CASE("default conv_layer outputs sit well away from zero") {
    const Builtin b = make_builtin("conv_layer");
    Rng r(45);
    for (int trial = 0; trial < 20; ++trial)
        for (const Scalar& s : evaluate(b.graph, sample_inputs(b, r), Backend::exact()).outputs) {
            REQUIRE(s.f > 1.0);
            REQUIRE(s.f < 6.0);
        }
}

TEST_CASE("integer builtins never wrap on their input boxes") {
    for (const std::string& alias : integer_builtin_aliases()) {
        const Builtin b = make_builtin(parse_program_spec(alias));
        Evaluator ev(b.graph);
        Rng r = Rng::substream(46, alias);
        for (int trial = 0; trial < 2000; ++trial) {
            ev.run(sample_inputs(b, r), Backend::exact());
            REQUIRE_FALSE(ev.wrapped());
        }
    }
}

TEST_CASE("value bounds contain every sampled value") {
    for (const std::string& alias : integer_builtin_aliases()) {
        const Builtin b = make_builtin(parse_program_spec(alias));
        const auto bounds = int_value_bounds(b.graph, b.input_box);
        Evaluator ev(b.graph);
        Rng r = Rng::substream(47, alias);
        for (int trial = 0; trial < 300; ++trial) {
            ev.run(sample_inputs(b, r), Backend::exact());
            for (std::size_t k = 0; k < bounds.size(); ++k) {
                REQUIRE(ev.value_at(k).i >= bounds[k].lo);
                REQUIRE(ev.value_at(k).i <= bounds[k].hi);
            }
        }
    }
}

TEST_CASE("program specs and parameter errors") {
    const ProgramSpec s = parse_program_spec("euler3:seed=4,steps=6");
    CHECK(s.name == "euler");
    CHECK(s.params == BuiltinParams{{"order", 3}, {"seed", 4}, {"steps", 6}});
    CHECK(op_census(make_builtin(s).graph).total == 48);
    CHECK_THROWS_AS(parse_program_spec("fir:taps"), BuiltinError);
    CHECK_THROWS_AS(parse_program_spec("fir:taps=x"), BuiltinError);
    CHECK_THROWS_AS(make_builtin("fft"), BuiltinError);
    CHECK_THROWS_AS(make_builtin("euler", {{"order", 4}}), BuiltinError);
    CHECK_THROWS_AS(make_builtin("conv2x2", {{"size", 3}}), BuiltinError);
    CHECK_THROWS_AS(make_builtin("conv_layer", {{"kernel", 9}, {"size", 4}}), BuiltinError);
}
