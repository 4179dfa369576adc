#include <doctest.h>

#include <cmath>

#include "dhac/builtins.hpp"
#include "dhac/fbc.hpp"
#include "dhac/graph_io.hpp"
#include "support.hpp"

using namespace dhac;

namespace {

Builtin small_layer() { return make_builtin("conv_layer", {{"channels", 2}, {"size", 5}}); }

NodeId first_add(const Graph& g) {
    for (const Node& n : g.nodes())
        if (n.op == Op::Add) return n.id;
    return -1;
}

}  // namespace

TEST_CASE("sentinel step order") {
    Rng r(61);
    const Sentinel s = make_sentinel(SentinelKind::Addition, 3, 5, kDefaultDelta, r);
    REQUIRE(s.operands.size() == 3);
    const auto& o = s.operands;
    CHECK(s.steps() == std::vector<SentinelStep>{{FpOp::Add, o[0]}, {FpOp::Add, o[1]}, {FpOp::Add, o[2]},
                                                 {FpOp::Sub, o[2]}, {FpOp::Sub, o[1]}, {FpOp::Sub, o[0]}});
    const Sentinel m = make_sentinel(SentinelKind::Multiplication, 2, 5, kDefaultDelta, r);
    CHECK(m.steps() == std::vector<SentinelStep>{{FpOp::Mul, m.operands[0]}, {FpOp::Mul, m.operands[1]},
                                                 {FpOp::Div, m.operands[1]}, {FpOp::Div, m.operands[0]}});
    const Sentinel t = make_sentinel(SentinelKind::TanArctan, 4, 5, kDefaultDelta, r);
    CHECK(t.n == 1);
    CHECK(t.operands.empty());
    CHECK(t.steps() == std::vector<SentinelStep>{{FpOp::Arctan, 0.0}, {FpOp::Tan, 0.0}});
    for (double v : s.operands) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("sentinel construction is deterministic and validated") {
    Rng a(62), b(62);
    CHECK(make_sentinel(SentinelKind::Multiplication, 3, 1, 1e-13, a) ==
          make_sentinel(SentinelKind::Multiplication, 3, 1, 1e-13, b));
    CHECK_THROWS_AS(make_sentinel(SentinelKind::Addition, 0, 1, 1e-13, a), ConfigError);
    CHECK_THROWS_AS(make_sentinel(SentinelKind::Addition, 3, 1, 0.0, a), ConfigError);
    CHECK(sentinel_kind_from_string("multiplication") == SentinelKind::Multiplication);
    CHECK(sentinel_kind_from_string("tan") == SentinelKind::TanArctan);
    CHECK_THROWS_AS(sentinel_kind_from_string("sqrt"), ConfigError);
}

TEST_CASE("instrumenting the first accumulation node") {
    const Builtin b = small_layer();
    Rng r(63);
    const NodeId site = first_add(b.graph);
    const InstrumentedGraph ig = instrument(b.graph, {make_sentinel(b.graph, SentinelKind::Addition, 3, site, 1e-13, r)});
    const Census before = op_census(b.graph), after = op_census(ig.graph);
    CHECK(after.total == before.total + 6);
    std::size_t exports = 0;
    for (const Node& n : ig.graph.nodes()) exports += n.op == Op::Export;
    CHECK(exports == 2);
    CHECK(ig.branch_nodes[0].size() == 2 + 6 + 6);  // exports, steps, one constant per step
    for (NodeId id : ig.branch_nodes[0]) CHECK(id > b.graph.max_id());
    const auto in = sample_inputs(b, r);
    CHECK(evaluate(ig.graph, in, Backend::exact()).outputs == evaluate(b.graph, in, Backend::exact()).outputs);
}

TEST_CASE("instrumentation preconditions") {
    const Builtin b = small_layer();
    CHECK(serialize_program(instrument(b.graph, {}).graph) == serialize_program(b.graph));
    Rng r(64);
    const NodeId site = first_add(b.graph);
    const Sentinel s = make_sentinel(SentinelKind::Addition, 3, site, 1e-13, r);
    CHECK_THROWS_AS(instrument(b.graph, {s, s}), SiteError);
    Sentinel missing = s;
    missing.site = 1000000;
    CHECK_THROWS_AS(instrument(b.graph, {missing}), SiteError);
    Sentinel sink = s;
    sink.site = b.graph.outputs()[0];
    CHECK_THROWS_AS(instrument(b.graph, {sink}), SiteError);
    const Graph ints = testing::mul_add_graph();
    try {
        make_sentinel(ints, SentinelKind::Addition, 3, 2, 1e-13, r);
        FAIL("expected SiteError");
    } catch (const SiteError& e) {
        CHECK(e.code() == "integer-site");
    }
}

TEST_CASE("threshold convention") {
    CHECK(exceeds(1e-6, 1e-13));
    CHECK(exceeds(1e-13, 1e-13));
    CHECK_FALSE(exceeds(std::nextafter(1e-13, 0.0), 1e-13));
    CHECK(exceeds(std::nan(""), 1e-13));
    CHECK(sentinel_distance(2.0, 1.5, false) == 0.5);
    CHECK(sentinel_distance(2.0, 1.5, true) == 0.25);
}

TEST_CASE("round-trip examples") {
    Rng r(65);
    const Sentinel add = make_sentinel(SentinelKind::Addition, 3, 0, 1e-13, r);
    CHECK(sentinel_roundtrip(add, 0.7, Backend::exact()).distance < 1e-15);
    const Sentinel tan = make_sentinel(SentinelKind::TanArctan, 1, 0, 1e-13, r);
    CHECK(std::abs(sentinel_roundtrip(tan, 5.0, Backend::exact()).returned - 5.0) < 1e-14);
    int large = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng s = Rng::substream(seed, "test/mul");
        const Sentinel mul = make_sentinel(SentinelKind::Multiplication, 3, 0, 1e-13, s);
        large += sentinel_roundtrip(mul, 1.0 / 3.0, Backend::fp_truncation(20)).distance > 1e-10;
    }
    CHECK(large >= 180);
}

TEST_CASE("judging an instrumented trace") {
    const Builtin b = small_layer();
    Rng r(66);
    const auto sites = auto_site_candidates(b.graph);
    REQUIRE(sites.size() >= 3);
    std::vector<Sentinel> ss;
    ss.push_back(make_sentinel(b.graph, SentinelKind::Addition, 3, sites[0], 1e-13, r));
    ss.push_back(make_sentinel(b.graph, SentinelKind::Multiplication, 3, sites[1], 1e-13, r));
    ss.push_back(make_sentinel(b.graph, SentinelKind::TanArctan, 1, sites[2], 1e-13, r));
    const InstrumentedGraph ig = instrument(b.graph, ss);
    const auto in = sample_inputs(b, r);
    const FbcVerdict honest = judge(evaluate(ig.graph, in, Backend::exact()), ig);
    CHECK(honest.judgement == Judgement::Negative);
    const FbcVerdict cheat = judge(evaluate(ig.graph, in, Backend::fp_truncation(20)), ig);
    CHECK(cheat.judgement == Judgement::Positive);
    Trace partial = evaluate(ig.graph, in, Backend::exact());
    partial.exports.erase(ig.exit_exports[1]);
    CHECK_THROWS_AS(judge(partial, ig), TraceError);
}

TEST_CASE("replaying the steps equals evaluating the instrumented graph") {
    const Builtin b = small_layer();
    const auto sites = auto_site_candidates(b.graph);
    Rng r(67);
    for (int trial = 0; trial < 300; ++trial) {
        const auto kind = static_cast<SentinelKind>(r.uniform_int(0, 2));
        const NodeId site = sites[static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(sites.size()) - 1))];
        Sentinel s = make_sentinel(b.graph, kind, static_cast<int>(r.uniform_int(1, 5)), site, 1e-13, r);
        s.relative = r.bernoulli(0.5);
        const int bits = static_cast<int>(r.uniform_int(0, 30));
        const Backend be = bits ? Backend::fp_truncation(bits) : Backend::exact();
        const auto in = sample_inputs(b, r);
        const InstrumentedGraph ig = instrument(b.graph, {s});
        const Trace t = evaluate(ig.graph, in, be);
        const FbcVerdict v = judge(t, ig);
        Evaluator plain(b.graph);
        plain.run(in, be);
        const Roundtrip rt = sentinel_roundtrip(s, plain.value(site).f, be);
        REQUIRE(v.results[0].input == plain.value(site).f);
        REQUIRE(v.results[0].returned == rt.returned);
        REQUIRE(v.results[0].distance == rt.distance);
    }
}

TEST_CASE("auto sites are the output-feeding additions") {
    const Builtin b = make_builtin("conv_layer");
    const auto sites = auto_site_candidates(b.graph);
    CHECK(sites.size() == 14 * 14);
    for (NodeId id : sites) CHECK(b.graph.node(id).op == Op::Add);
    GraphBuilder g("chain", ScalarType::Float64);
    const NodeId x = g.input();
    const NodeId a = g.add(x, x);
    g.output(g.mul(a, a));
    CHECK(auto_site_candidates(g.build()) == std::vector<NodeId>{a});
}

TEST_CASE("instrumented documents round-trip") {
    const Builtin b = small_layer();
    Rng r(68);
    const auto sites = auto_site_candidates(b.graph);
    Sentinel s = make_sentinel(b.graph, SentinelKind::Multiplication, 3, sites[0], 2.5e-14, r);
    s.relative = true;
    const InstrumentedGraph ig = instrument(b.graph, {s});
    const InstrumentedGraph back = instrumented_from_json(parse_json(instrumented_to_json(ig).dump()));
    CHECK(back.sentinels == ig.sentinels);
    CHECK(back.entrance_exports == ig.entrance_exports);
    CHECK(back.exit_exports == ig.exit_exports);
    CHECK(serialize_program(back.graph) == serialize_program(ig.graph));
    nlohmann::json broken = instrumented_to_json(ig);
    broken["sentinels"][0]["exit"] = sites[1];
    CHECK_THROWS_AS(instrumented_from_json(broken), ParseError);
}
