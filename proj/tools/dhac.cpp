// dhac: run programs on simulated backends, check results with RCC and FBC,
// and produce detection reports. Exit codes: 0 Negative/success, 2 Positive,
// 1 error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "dhac/builtins.hpp"
#include "dhac/fbc.hpp"
#include "dhac/graph_io.hpp"
#include "dhac/interp.hpp"
#include "dhac/rcc.hpp"
#include "dhac/scenario.hpp"

using namespace dhac;

namespace {

constexpr int kExitNegative = 0;
constexpr int kExitError = 1;
constexpr int kExitPositive = 2;

template <class T, class F>
std::vector<T> split_list(const std::string& s, F&& convert) {
    std::vector<T> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(convert(item));
    return out;
}

std::int64_t to_int(const std::string& s) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("flag", "expected an integer, got '" + s + "'");
    return v;
}

// A program file may hold a plain graph or an instrumented document.
Graph load_graph(const std::string& path) {
    const nlohmann::json doc = parse_json(read_file(path));
    if (doc.is_object() && doc.contains("sentinels")) return instrumented_from_json(doc).graph;
    return graph_from_json(doc);
}

// "LOA:4", "TM:4", "LOG".
IntUnit parse_unit(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    const int k = colon == std::string::npos ? 0 : static_cast<int>(to_int(s.substr(colon + 1)));
    return IntUnit::parse(kind, k);
}

struct BackendFlags {
    std::string file;
    std::string adder;
    std::string multiplier;
    int fp_bits = 0;

    void add_to(CLI::App* app) {
        app->add_option("--backend", file, "Backend block (JSON file)");
        app->add_option("--adder", adder, "Adder model, e.g. LOA:4, TA:6, SC:4");
        app->add_option("--multiplier", multiplier, "Multiplier model, e.g. TM:4, BA:4, LOG");
        app->add_option("--fp-bits", fp_bits, "Truncated float mantissa bits");
    }

    Backend make() const {
        if (!file.empty()) return backend_from_json(parse_json(read_file(file)));
        const IntUnit a = adder.empty() ? IntUnit::exact() : parse_unit(adder);
        const IntUnit m = multiplier.empty() ? IntUnit::exact() : parse_unit(multiplier);
        if (a == IntUnit::exact() && m == IntUnit::exact() && fp_bits == 0) return Backend::exact();
        Backend b = Backend::approximate(a, m, fp_bits);
        b.validate();
        return b;
    }
};

std::string describe(const RccVerdict& v) {
    std::ostringstream o;
    o << "rcc: " << to_string(v.judgement);
    if (v.judgement == Judgement::Positive) {
        const RoundResult& r = v.rounds[*v.failed_round];
        o << " (round " << (*v.failed_round + 1) << ", modulus " << r.modulus << ": computed " << r.computed
          << ", claimed " << r.claimed << ")";
    } else if (v.judgement == Judgement::Negative) {
        o << " (" << v.rounds.size() - v.skipped_rounds << " rounds matched";
        if (v.skipped_rounds) o << ", " << v.skipped_rounds << " skipped";
        o << ")";
    } else if (v.rounds.empty()) {
        o << " (inexact division or int16 wrap)";
    } else {
        o << " (every round skipped)";
    }
    return o.str();
}

int cmd_builtin(const std::string& spec, const std::string& out, const std::string& inputs_out, std::uint64_t seed) {
    const Builtin b = make_builtin(parse_program_spec(spec));
    const std::string text = serialize_program(b.graph);
    if (out.empty())
        std::cout << text;
    else
        write_file(out, text);
    if (!inputs_out.empty()) {
        Rng rng = Rng::substream(seed, "inputs/" + spec, 0);
        write_file(inputs_out, inputs_to_json(sample_inputs(b, rng)).dump() + "\n");
    }
    const Census c = op_census(b.graph);
    std::cerr << "builtin: " << b.graph.name() << " " << b.graph.nodes().size() << " nodes, add/sub " << c.add_sub
              << ", mul " << c.mul << ", div " << c.div << "\n";
    return kExitNegative;
}

int cmd_run(const std::string& program, const std::string& inputs_path, const BackendFlags& bf,
            const std::string& out) {
    const Graph g = load_graph(program);
    const auto inputs = inputs_from_json(parse_json(read_file(inputs_path)), g);
    const Backend backend = bf.make();
    const Trace t = evaluate(g, inputs, backend);
    const std::string doc = trace_to_json(t).dump(1) + "\n";
    if (!out.empty()) write_file(out, doc);
    std::cout << "run: " << g.name() << " on " << backend.label() << " -> "
              << inputs_to_json(t.outputs).dump() << "\n";
    return kExitNegative;
}

int cmd_rcc(const std::string& program, const std::string& inputs_path, std::int64_t claimed,
            const std::string& moduli, std::size_t output) {
    const Graph g = load_graph(program);
    const auto inputs = inputs_from_json(parse_json(read_file(inputs_path)), g);
    ModuleSet m;
    if (!moduli.empty()) m.moduli = split_list<std::int64_t>(moduli, to_int);
    const RccVerdict v = rcc_check(g, inputs, claimed, m, output);
    std::cout << describe(v) << "\n";
    return v.judgement == Judgement::Positive ? kExitPositive : kExitNegative;
}

int cmd_fbc_instrument(const std::string& program, const std::string& sites, const std::string& kinds, int n,
                       double delta, std::uint64_t seed, bool relative, const std::string& out) {
    const Graph g = load_graph(program);
    const auto kind_list = split_list<SentinelKind>(kinds, [](const std::string& s) { return sentinel_kind_from_string(s); });
    if (kind_list.empty()) throw ConfigError("kinds", "no sentinel kinds given");
    Rng rng = Rng::substream(seed, "fbc/instrument");
    std::vector<NodeId> site_list;
    std::vector<SentinelKind> site_kinds;
    if (sites == "auto") {
        std::vector<NodeId> pool = auto_site_candidates(g);
        if (pool.size() < kind_list.size()) throw SiteError("sites", "not enough float64 Add nodes for auto sites");
        for (std::size_t i = 0; i < kind_list.size(); ++i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(pool.size()) - 1));
            std::swap(pool[i], pool[j]);
            site_list.push_back(pool[i]);
        }
        site_kinds = kind_list;
    } else {
        site_list = split_list<NodeId>(sites, to_int);
        if (kind_list.size() == 1)
            site_kinds.assign(site_list.size(), kind_list.front());
        else if (kind_list.size() == site_list.size())
            site_kinds = kind_list;
        else
            throw ConfigError("sites", "give one kind, or one kind per site");
    }
    std::vector<Sentinel> sentinels;
    for (std::size_t i = 0; i < site_list.size(); ++i) {
        Sentinel s = make_sentinel(g, site_kinds[i], n, site_list[i], delta, rng);
        s.relative = relative;
        sentinels.push_back(std::move(s));
    }
    const InstrumentedGraph ig = instrument(g, sentinels);
    const std::string doc = instrumented_to_json(ig).dump(1) + "\n";
    if (out.empty())
        std::cout << doc;
    else
        write_file(out, doc);
    std::cerr << "fbc instrument: " << sentinels.size() << " sentinels, " << ig.graph.nodes().size() - g.nodes().size()
              << " nodes added\n";
    return kExitNegative;
}

int cmd_fbc_judge(const std::string& trace_path, const std::string& instrumented) {
    const InstrumentedGraph ig = instrumented_from_json(parse_json(read_file(instrumented)));
    const Trace t = trace_from_json(parse_json(read_file(trace_path)));
    const FbcVerdict v = judge(t, ig);
    std::ostringstream o;
    o << "fbc: " << to_string(v.judgement);
    std::size_t positives = 0;
    for (const SentinelResult& r : v.results) positives += r.positive;
    o << " (" << positives << " of " << v.results.size() << " sentinels positive";
    for (std::size_t k = 0; k < v.results.size(); ++k) {
        if (!v.results[k].positive) continue;
        o << "; first: " << to_string(ig.sentinels[k].kind) << " at node " << ig.sentinels[k].site << ", distance "
          << format_double(v.results[k].distance) << " >= " << format_double(ig.sentinels[k].delta);
        break;
    }
    o << ")";
    std::cout << o.str() << "\n";
    return v.judgement == Judgement::Positive ? kExitPositive : kExitNegative;
}

ScenarioConfig scenario_from_flags(const std::string& config, std::optional<std::size_t> quick,
                                   std::optional<std::uint64_t> seed, std::optional<unsigned> jobs) {
    ScenarioConfig c = config.empty() ? default_config() : load_config(config);
    if (quick) c.trials = *quick;
    if (seed) c.seed = *seed;
    if (jobs) c.jobs = *jobs;
    if (c.trials == 0) throw ConfigError("trials", "trial count must be positive");
    return c;
}

int cmd_bench(const ScenarioConfig& c, const std::string& out, bool table) {
    const DetectionReport r = run_bench(c);
    const std::string csv = report_csv(r);
    if (out.empty())
        std::cout << csv;
    else
        write_file(out, csv);
    if (table) std::cout << report_table(r);
    std::size_t fp = 0;
    for (const ReportRow& row : r.rows) fp += row.fp;
    std::ostream& summary = out.empty() ? std::cerr : std::cout;
    summary << "bench: " << r.rows.size() << " rows, " << c.trials << " trials per cell, " << fp
              << " false positives" << (out.empty() ? "" : "; report written to " + out) << "\n";
    return kExitNegative;
}

int cmd_sweep(const ScenarioConfig& c, const std::string& deltas, const std::string& out, bool table) {
    std::vector<double> d = deltas.empty() ? std::vector<double>{}
                                           : split_list<double>(deltas, [](const std::string& s) { return parse_double(s); });
    if (!c.fbc) throw ConfigError("fbc", "sweep needs an fbc section");
    if (d.empty()) d = c.fbc->deltas;
    const auto curves = sweep_threshold(c, d);
    const std::string csv = sweep_csv(c, curves);
    if (out.empty())
        std::cout << csv;
    else
        write_file(out, csv);
    if (table) std::cout << sweep_table(curves);
    std::ostream& summary = out.empty() ? std::cerr : std::cout;
    summary << "sweep: " << curves.size() << " curves over " << d.size() << " deltas"
              << (out.empty() ? "" : "; written to " + out) << "\n";
    return kExitNegative;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detect dishonest approximate computing with residue and forward-backward checks"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    std::string program, inputs, out, moduli, trace, instrumented, config, deltas, spec, inputs_out;
    std::string sites = "auto", kinds = "add,mul,tan";
    std::int64_t claimed = 0;
    std::size_t output = 0;
    int n = 3;
    double delta = kDefaultDelta;
    std::uint64_t seed = 1;
    bool relative = false, table = false;
    std::optional<std::size_t> quick;
    std::optional<std::uint64_t> seed_override;
    std::optional<unsigned> jobs;
    BackendFlags backend;

    auto* builtin = app.add_subcommand("builtin", "Write a builtin program (and optionally sample inputs)");
    builtin->add_option("name", spec, "Builtin spec, e.g. fir, euler3, conv_layer:channels=4")->required();
    builtin->add_option("--out", out, "Program file to write (stdout if omitted)");
    builtin->add_option("--inputs-out", inputs_out, "Also write one sampled input vector");
    builtin->add_option("--seed", seed, "Seed for the sampled inputs");

    auto* run = app.add_subcommand("run", "Evaluate a program on a backend and write its trace");
    run->add_option("--program", program, "Program file")->required();
    run->add_option("--inputs", inputs, "Input vector file (JSON array)")->required();
    run->add_option("--out", out, "Trace file to write");
    backend.add_to(run);

    auto* rcc = app.add_subcommand("rcc", "Residue check of a claimed integer result");
    rcc->add_option("--program", program, "Program file")->required();
    rcc->add_option("--inputs", inputs, "Input vector file (JSON array)")->required();
    rcc->add_option("--claimed", claimed, "Result returned by the server")->required();
    rcc->add_option("--moduli", moduli, "Comma-separated moduli (default 3,5,7)");
    rcc->add_option("--output", output, "Output index to check");

    auto* fbc = app.add_subcommand("fbc", "Forward-backward check");
    fbc->require_subcommand(1);
    auto* fbc_inst = fbc->add_subcommand("instrument", "Insert sentinel branches into a float program");
    fbc_inst->add_option("--program", program, "Program file")->required();
    fbc_inst->add_option("--sites", sites, "auto or comma-separated node ids");
    fbc_inst->add_option("--kinds", kinds, "Comma-separated kinds: add, mul, tan");
    fbc_inst->add_option("--n", n, "Steps per direction");
    fbc_inst->add_option("--delta", delta, "Judgement threshold");
    fbc_inst->add_option("--seed", seed, "Seed for sentinel operands and auto sites");
    fbc_inst->add_flag("--relative", relative, "Use relative distance");
    fbc_inst->add_option("--out", out, "Instrumented program file");
    auto* fbc_judge = fbc->add_subcommand("judge", "Judge a trace of an instrumented program");
    fbc_judge->add_option("--trace", trace, "Trace file from `dhac run`")->required();
    fbc_judge->add_option("--instrumented", instrumented, "Instrumented program file")->required();

    auto* bench = app.add_subcommand("bench", "Run the detection benchmark and write a CSV report");
    bench->add_option("--config", config, "Scenario config (JSON); defaults if omitted");
    bench->add_option("--quick", quick, "Override the trial count");
    bench->add_option("--seed", seed_override, "Override the config seed");
    bench->add_option("--jobs", jobs, "Worker threads");
    bench->add_option("--out", out, "CSV report file (stdout if omitted)");
    bench->add_flag("--table", table, "Also print a human-readable table");

    auto* sweep = app.add_subcommand("sweep", "Sweep the FBC threshold over recorded distances");
    sweep->add_option("--config", config, "Scenario config (JSON); defaults if omitted");
    sweep->add_option("--deltas", deltas, "Comma-separated descending thresholds");
    sweep->add_option("--quick", quick, "Override the trial count");
    sweep->add_option("--seed", seed_override, "Override the config seed");
    sweep->add_option("--jobs", jobs, "Worker threads");
    sweep->add_option("--out", out, "CSV curve file (stdout if omitted)");
    sweep->add_flag("--table", table, "Also print a human-readable table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*builtin) return cmd_builtin(spec, out, inputs_out, seed);
        if (*run) return cmd_run(program, inputs, backend, out);
        if (*rcc) return cmd_rcc(program, inputs, claimed, moduli, output);
        if (*fbc_inst) return cmd_fbc_instrument(program, sites, kinds, n, delta, seed, relative, out);
        if (*fbc_judge) return cmd_fbc_judge(trace, instrumented);
        if (*bench) return cmd_bench(scenario_from_flags(config, quick, seed_override, jobs), out, table);
        if (*sweep) return cmd_sweep(scenario_from_flags(config, quick, seed_override, jobs), deltas, out, table);
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
