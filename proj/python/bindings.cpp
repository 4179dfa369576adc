#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dhac/arith.hpp"
#include "dhac/builtins.hpp"
#include "dhac/fbc.hpp"
#include "dhac/graph_io.hpp"
#include "dhac/interp.hpp"
#include "dhac/rcc.hpp"
#include "dhac/scenario.hpp"

namespace py = pybind11;
using namespace dhac;

namespace {

// Python ints and floats map onto the graph's input types.
std::vector<Scalar> to_scalars(const Graph& g, const py::sequence& values) {
    if (values.size() != g.inputs().size())
        throw InputError("arity", "expected " + std::to_string(g.inputs().size()) + " inputs, got " +
                                      std::to_string(values.size()));
    std::vector<Scalar> out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const py::handle v = values[k];
        if (g.node(g.inputs()[k]).type == ScalarType::Int16) {
            const long long x = v.cast<long long>();
            if (x < -32768 || x > 32767) throw InputError("value", "input " + std::to_string(k) + " out of int16 range");
            out.push_back(Scalar::int16(static_cast<std::int16_t>(x)));
        } else {
            out.push_back(Scalar::float64(v.cast<double>()));
        }
    }
    return out;
}

py::object to_py(const Scalar& s) {
    if (s.type == ScalarType::Int16) return py::int_(s.i);
    return py::float_(s.f);
}

py::list to_py(const std::vector<Scalar>& v) {
    py::list l;
    for (const Scalar& s : v) l.append(to_py(s));
    return l;
}

Backend make_backend(const std::string& adder, int adder_k, const std::string& multiplier, int multiplier_k,
                     int fp_bits) {
    const IntUnit a = IntUnit::parse(adder, adder_k);
    const IntUnit m = IntUnit::parse(multiplier, multiplier_k);
    if (a == IntUnit::exact() && m == IntUnit::exact() && fp_bits == 0) return Backend::exact();
    Backend b = Backend::approximate(a, m, fp_bits);
    b.validate();
    return b;
}

}  // namespace

PYBIND11_MODULE(_dhac, m) {
    m.doc() = "Dishonest approximate computing detection: residue and forward-backward checks";

    static py::exception<Error> base(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(base, (e.code() + ": " + e.what()).c_str());
        }
    });

    py::class_<Backend>(m, "Backend")
        .def_static("exact", &Backend::exact)
        .def_static("fp_truncation", &Backend::fp_truncation, py::arg("bits"))
        .def_static("approximate", &make_backend, py::arg("adder") = "exact", py::arg("adder_k") = 0,
                    py::arg("multiplier") = "exact", py::arg("multiplier_k") = 0, py::arg("fp_bits") = 0)
        .def_property_readonly("label", &Backend::label)
        .def("__repr__", [](const Backend& b) { return "<Backend " + b.label() + ">"; });

    py::class_<Graph>(m, "Graph")
        .def_static("from_json", [](const std::string& text) { return parse_program(text); }, py::arg("text"))
        .def("to_json", &serialize_program)
        .def_property_readonly("name", &Graph::name)
        .def_property_readonly("type", [](const Graph& g) { return std::string(to_string(g.type())); })
        .def_property_readonly("inputs", &Graph::inputs)
        .def_property_readonly("outputs", &Graph::outputs)
        .def("__len__", [](const Graph& g) { return g.nodes().size(); })
        .def("census", [](const Graph& g) {
            const Census c = op_census(g);
            return py::dict(py::arg("add_sub") = c.add_sub, py::arg("mul") = c.mul, py::arg("div") = c.div,
                            py::arg("total") = c.total);
        });

    m.def("builtin_program", [](const std::string& spec) { return make_builtin(parse_program_spec(spec)).graph; },
          py::arg("spec"), "Builtin program from a spec such as 'fir' or 'euler:order=3,seed=2'.");
    m.def(
        "sample_inputs",
        [](const std::string& spec, std::uint64_t seed, std::uint64_t index) {
            const Builtin b = make_builtin(parse_program_spec(spec));
            Rng rng = Rng::substream(seed, "inputs/" + spec, index);
            return to_py(sample_inputs(b, rng));
        },
        py::arg("spec"), py::arg("seed") = 1, py::arg("index") = 0);

    m.def(
        "evaluate",
        [](const Graph& g, const py::sequence& inputs, const Backend& backend) {
            const Trace t = evaluate(g, to_scalars(g, inputs), backend);
            py::dict exports;
            for (const auto& [id, v] : t.exports) exports[py::int_(id)] = to_py(v);
            return py::make_tuple(to_py(t.outputs), exports);
        },
        py::arg("graph"), py::arg("inputs"), py::arg("backend") = Backend::exact(),
        "Returns (outputs, exports).");

    m.def("add16", [](const std::string& kind, int k, int a, int b) {
        return add16(IntUnit::parse(kind, k), static_cast<std::int16_t>(a), static_cast<std::int16_t>(b));
    });
    m.def("mul16", [](const std::string& kind, int k, int a, int b) {
        return mul16(IntUnit::parse(kind, k), static_cast<std::int16_t>(a), static_cast<std::int16_t>(b));
    });
    m.def("trunc_mantissa", &trunc_mantissa, py::arg("x"), py::arg("bits"));

    m.def("evaluate_mod",
          [](const Graph& g, const py::sequence& inputs, std::int64_t modulus, std::size_t output) {
              return evaluate_mod(g, to_scalars(g, inputs), modulus, output).value;
          },
          py::arg("graph"), py::arg("inputs"), py::arg("modulus"), py::arg("output") = 0);

    m.def(
        "rcc_check",
        [](const Graph& g, const py::sequence& inputs, std::int64_t claimed, std::vector<std::int64_t> moduli,
           std::size_t output) {
            ModuleSet ms;
            ms.moduli = std::move(moduli);
            const RccVerdict v = rcc_check(g, to_scalars(g, inputs), claimed, ms, output);
            py::object failed = v.failed_round ? py::object(py::int_(*v.failed_round)) : py::none();
            return py::make_tuple(std::string(to_string(v.judgement)), failed);
        },
        py::arg("graph"), py::arg("inputs"), py::arg("claimed"), py::arg("moduli") = std::vector<std::int64_t>{3, 5, 7},
        py::arg("output") = 0, "Returns (judgement, failed_round).");

    m.def(
        "fbc_check",
        [](const Graph& g, const py::sequence& inputs, const Backend& backend, std::vector<std::string> kinds,
           std::vector<NodeId> sites, int n, double delta, std::uint64_t seed) {
            if (kinds.size() != sites.size()) throw ConfigError("sites", "give one site per sentinel kind");
            Rng rng = Rng::substream(seed, "fbc/python");
            std::vector<Sentinel> sentinels;
            for (std::size_t i = 0; i < kinds.size(); ++i)
                sentinels.push_back(make_sentinel(g, sentinel_kind_from_string(kinds[i]), n, sites[i], delta, rng));
            const InstrumentedGraph ig = instrument(g, sentinels);
            const FbcVerdict v = judge(evaluate(ig.graph, to_scalars(g, inputs), backend), ig);
            py::list distances;
            for (const SentinelResult& r : v.results) distances.append(r.distance);
            return py::make_tuple(std::string(to_string(v.judgement)), distances);
        },
        py::arg("graph"), py::arg("inputs"), py::arg("backend"), py::arg("kinds"), py::arg("sites"), py::arg("n") = 3,
        py::arg("delta") = kDefaultDelta, py::arg("seed") = 1,
        "Instruments, evaluates and judges; returns (judgement, distances).");

    m.def("auto_sites", &auto_site_candidates, py::arg("graph"));

    m.def(
        "bench",
        [](const std::string& config_json, std::optional<std::size_t> trials) {
            ScenarioConfig c = config_json.empty() ? default_config() : config_from_json(parse_json(config_json));
            if (trials) c.trials = *trials;
            py::gil_scoped_release release;
            return report_csv(run_bench(c));
        },
        py::arg("config_json") = "", py::arg("trials") = py::none(), "Runs the benchmark and returns the CSV report.");
}
