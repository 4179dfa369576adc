#include "dhac/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <set>
#include <thread>

#include "dhac/graph_io.hpp"

namespace dhac {

using nlohmann::json;

namespace {

// Runs body(trial, worker) for every trial. Results must be written to
// per-trial slots so the outcome does not depend on scheduling.
void parallel_trials(std::size_t n, unsigned jobs, const std::function<void(std::size_t, unsigned)>& body) {
    const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(jobs ? jobs : 1, n)));
    if (workers == 1) {
        for (std::size_t t = 0; t < n; ++t) body(t, 0);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t t; !failed.load() && (t = next.fetch_add(1)) < n;) {
                try {
                    body(t, w);
                } catch (...) {
                    errors[t] = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<Scalar> outputs_of(const Evaluator& ev) {
    std::vector<Scalar> out;
    out.reserve(ev.graph().outputs().size());
    for (std::size_t k = 0; k < ev.graph().outputs().size(); ++k) out.push_back(ev.output(k));
    return out;
}

Builtin load_program(const std::string& spec) {
    try {
        return make_builtin(parse_program_spec(spec));
    } catch (const BuiltinError& e) {
        throw ConfigError("program", "program '" + spec + "': " + e.what());
    }
}

std::string server_label(const std::string& program, const std::string& combo) {
    return "server/" + program + "/" + combo;
}

// Combined verdict over all outputs: the earliest failing round wins.
RccVerdict check_outputs(RccChecker& checker, std::span<const Scalar> inputs, std::span<const Scalar> claimed) {
    RccVerdict best;
    bool inconclusive = false;
    for (std::size_t k = 0; k < claimed.size(); ++k) {
        RccVerdict v = checker.check(inputs, claimed[k].i, k);
        if (v.judgement == Judgement::Positive) {
            if (best.judgement != Judgement::Positive || *v.failed_round < *best.failed_round) best = std::move(v);
        } else if (v.judgement == Judgement::Inconclusive) {
            inconclusive = true;
        } else if (best.judgement == Judgement::Negative && k == 0) {
            best = std::move(v);
        }
    }
    if (best.judgement != Judgement::Positive && inconclusive) best.judgement = Judgement::Inconclusive;
    return best;
}

std::vector<NodeId> pick_sites(const std::vector<NodeId>& candidates, std::size_t count, Rng& rng) {
    std::vector<NodeId> pool = candidates;
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                                static_cast<std::int64_t>(pool.size()) - 1));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

// --- FBC core -------------------------------------------------------------

struct FbcProgram {
    std::string spec;
    Builtin builtin;
    std::size_t census = 0;
    std::vector<NodeId> candidates;
};

FbcProgram load_fbc_program(const std::string& spec, const FbcSettings& fs) {
    FbcProgram p{spec, load_program(spec), 0, {}};
    const Graph& g = p.builtin.graph;
    if (g.type() != ScalarType::Float64) throw ConfigError("program-type", "'" + spec + "' is not a float64 program");
    p.census = op_census(g).total;
    if (fs.sites.empty()) {
        p.candidates = auto_site_candidates(g);
        if (p.candidates.size() < fs.kinds.size())
            throw ConfigError("sites", "'" + spec + "' has too few candidate sites");
    } else {
        if (fs.sites.size() != fs.kinds.size())
            throw ConfigError("sites", "explicit sites must list one node per sentinel kind");
        for (NodeId s : fs.sites) {
            if (!g.contains(s)) throw SiteError("missing", "site " + std::to_string(s) + " is not in '" + spec + "'", s);
            if (g.node(s).type != ScalarType::Float64)
                throw SiteError("integer-site", "site " + std::to_string(s) + " is not float64", s);
        }
        if (std::set<NodeId>(fs.sites.begin(), fs.sites.end()).size() != fs.sites.size())
            throw SiteError("duplicate", "explicit sites repeat a node");
    }
    return p;
}

std::vector<Sentinel> trial_sentinels(const ScenarioConfig& c, const FbcProgram& p, std::size_t t) {
    const FbcSettings& fs = *c.fbc;
    Rng rng = Rng::substream(c.seed, "fbc/" + p.spec, t);
    const std::vector<NodeId> sites = fs.sites.empty() ? pick_sites(p.candidates, fs.kinds.size(), rng) : fs.sites;
    std::vector<Sentinel> out;
    for (std::size_t i = 0; i < fs.kinds.size(); ++i) {
        Sentinel s = make_sentinel(fs.kinds[i], fs.n, sites[i], fs.delta, rng);
        s.relative = fs.relative;
        out.push_back(std::move(s));
    }
    return out;
}

struct SentinelRun {
    std::vector<Scalar> outputs;
    std::vector<SentinelResult> results;  // one per sentinel
};

// Evaluates the program with its sentinels on `backend`.
class FbcRunner {
public:
    FbcRunner(const FbcProgram& p, const FbcSettings& fs) : program_(&p), fs_(&fs), ev_(p.builtin.graph) {}

    SentinelRun run(std::span<const Scalar> inputs, const std::vector<Sentinel>& sentinels, const Backend& backend) {
        SentinelRun r;
        if (fs_->evaluate_instrumented) {
            const InstrumentedGraph ig = instrument(program_->builtin.graph, sentinels);
            Evaluator ev(ig.graph);
            ev.run(inputs, backend);
            r.outputs = outputs_of(ev);
            r.results = judge(ev.trace(), ig).results;
            return r;
        }
        ev_.run(inputs, backend);
        r.outputs = outputs_of(ev_);
        for (const Sentinel& s : sentinels) {
            SentinelResult sr;
            sr.input = ev_.value(s.site).f;
            try {
                const Roundtrip rt = sentinel_roundtrip(s, sr.input, backend);
                sr.returned = rt.returned;
                sr.distance = rt.distance;
            } catch (const EvalError&) {
                sr.returned = std::numeric_limits<double>::quiet_NaN();
                sr.distance = std::numeric_limits<double>::infinity();
            }
            sr.positive = exceeds(sr.distance, s.delta);
            r.results.push_back(sr);
        }
        return r;
    }

private:
    const FbcProgram* program_;
    const FbcSettings* fs_;
    Evaluator ev_;
};

std::string fp_label(int bits) { return "fp" + std::to_string(bits); }

void validate_fbc(const FbcSettings& fs) {
    if (fs.programs.empty()) throw ConfigError("fbc", "fbc section lists no programs");
    if (fs.kinds.empty()) throw ConfigError("fbc", "fbc section lists no sentinel kinds");
    if (fs.n < 1) throw ConfigError("steps", "fbc.n must be at least 1");
    if (!(fs.delta > 0.0)) throw ConfigError("delta", "fbc.delta must be positive");
    if (fs.truncated_bits.empty()) throw ConfigError("fbc", "fbc section lists no truncation settings");
    for (int b : fs.truncated_bits)
        if (b < 0 || b > 52) throw ConfigError("fp-bits", "truncated_bits must be in [0, 52]");
}

void check_common(const ScenarioConfig& c) {
    if (c.trials == 0) throw ConfigError("trials", "trial count must be positive");
    c.strategy.validate();
}

}  // namespace

// --- server ------------------------------------------------------------------

void ServerStrategy::validate() const {
    if (!(dishonest_prob >= 0.0 && dishonest_prob <= 1.0))
        throw ConfigError("strategy", "dishonest_prob must be in [0, 1]");
    appx_backend.validate();
}

Paradigm choose_paradigm(std::size_t census_total, const ServerStrategy& s, ServerState& state) {
    const std::uint64_t job = state.jobs_seen++;
    if (job < s.honest_warmup) return Paradigm::Accurate;
    if (census_total < s.small_job_threshold) return Paradigm::Accurate;
    return state.draw.bernoulli(s.dishonest_prob) ? Paradigm::Approximate : Paradigm::Accurate;
}

Execution server_execute(const Graph& job, std::span<const Scalar> inputs, const ServerStrategy& s,
                         ServerState& state) {
    Execution e;
    e.ground_truth = choose_paradigm(op_census(job).total, s, state);
    e.trace = evaluate(job, inputs, e.ground_truth == Paradigm::Approximate ? s.appx_backend : Backend::exact());
    return e;
}

bool ground_truth_oracle(const Graph& job, std::span<const Scalar> inputs, std::span<const Scalar> claimed) {
    const Trace exact = evaluate(job, inputs, Backend::exact());
    if (exact.outputs.size() != claimed.size()) return true;
    return !std::equal(exact.outputs.begin(), exact.outputs.end(), claimed.begin());
}

// --- configuration -------------------------------------------------------------

std::vector<Backend> default_combos() {
    std::vector<Backend> out;
    for (IntUnit a : {IntUnit::loa(4), IntUnit::trunc_add(6), IntUnit::segmented_carry(4)})
        for (IntUnit m : {IntUnit::trunc_mul(4), IntUnit::broken_array(4), IntUnit::log_approx()})
            out.push_back(Backend::approximate(a, m));
    return out;
}

RccSettings default_rcc_settings() { return {integer_builtin_aliases(), ModuleSet{}, default_combos()}; }

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.rcc = default_rcc_settings();
    c.fbc = FbcSettings{};
    return c;
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("shape", where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError("unknown-key", "unknown key '" + key + "' in " + where);
    }
}

const json* first_of(const json& j, std::initializer_list<const char*> names) {
    for (const char* n : names)
        if (j.contains(n)) return &j.at(n);
    return nullptr;
}

IntUnit unit_from_json(const json& j) {
    check_keys(j, "unit", {"kind", "k"});
    return IntUnit::parse(j.at("kind").get<std::string>(), j.value("k", 0));
}

json unit_to_json(const IntUnit& u) {
    static const char* names[] = {"exact", "loa", "trunc_add", "segmented_carry", "trunc_mul", "broken_array", "log"};
    return {{"kind", names[static_cast<int>(u.kind)]}, {"k", u.k}};
}

}  // namespace

Backend backend_from_json(const json& j) {
    try {
        check_keys(j, "backend", {"paradigm", "adder", "multiplier", "fp_trunc_bits"});
        Backend b;
        b.adder = j.contains("adder") ? unit_from_json(j.at("adder")) : IntUnit::exact();
        b.multiplier = j.contains("multiplier") ? unit_from_json(j.at("multiplier")) : IntUnit::exact();
        b.fp.truncated_bits = j.value("fp_trunc_bits", 0);
        const std::string paradigm = j.value("paradigm", "approximate");
        if (paradigm == "accurate")
            b.paradigm = Paradigm::Accurate;
        else if (paradigm == "approximate")
            b.paradigm = Paradigm::Approximate;
        else
            throw ConfigError("paradigm", "paradigm must be 'accurate' or 'approximate'");
        b.validate();
        return b;
    } catch (const json::exception& e) {
        throw ConfigError("shape", std::string("malformed backend block: ") + e.what());
    }
}

json backend_to_json(const Backend& b) {
    return {{"paradigm", b.paradigm == Paradigm::Accurate ? "accurate" : "approximate"},
            {"adder", unit_to_json(b.adder)},
            {"multiplier", unit_to_json(b.multiplier)},
            {"fp_trunc_bits", b.fp.truncated_bits}};
}

ScenarioConfig config_from_json(const json& j) {
    try {
        check_keys(j, "config", {"seed", "trials", "jobs", "strategy", "rcc", "fbc"});
        ScenarioConfig c;
        c.seed = j.value("seed", c.seed);
        c.trials = j.value("trials", c.trials);
        c.jobs = j.value("jobs", c.jobs);
        if (j.contains("strategy")) {
            const json& s = j.at("strategy");
            check_keys(s, "strategy", {"honest_warmup", "W", "small_job_threshold", "T", "dishonest_prob", "p"});
            if (auto* v = first_of(s, {"honest_warmup", "W"})) c.strategy.honest_warmup = v->get<std::uint64_t>();
            if (auto* v = first_of(s, {"small_job_threshold", "T"}))
                c.strategy.small_job_threshold = v->get<std::uint64_t>();
            if (auto* v = first_of(s, {"dishonest_prob", "p"})) c.strategy.dishonest_prob = v->get<double>();
        }
        if (j.contains("rcc")) {
            const json& r = j.at("rcc");
            check_keys(r, "rcc", {"programs", "moduli", "combos"});
            RccSettings rs = default_rcc_settings();
            if (r.contains("programs")) rs.programs = r.at("programs").get<std::vector<std::string>>();
            if (r.contains("moduli")) rs.modules.moduli = r.at("moduli").get<std::vector<std::int64_t>>();
            if (r.contains("combos") && !(r.at("combos").is_string() && r.at("combos") == "default")) {
                rs.combos.clear();
                for (const json& b : r.at("combos")) rs.combos.push_back(backend_from_json(b));
            }
            c.rcc = std::move(rs);
        }
        if (j.contains("fbc")) {
            const json& f = j.at("fbc");
            check_keys(f, "fbc", {"programs", "kinds", "n", "delta", "sites", "distance", "truncated_bits", "deltas",
                                  "evaluate_instrumented"});
            FbcSettings fs;
            if (f.contains("programs")) fs.programs = f.at("programs").get<std::vector<std::string>>();
            if (f.contains("kinds")) {
                fs.kinds.clear();
                for (const json& k : f.at("kinds")) fs.kinds.push_back(sentinel_kind_from_string(k.get<std::string>()));
            }
            fs.n = f.value("n", fs.n);
            fs.delta = f.value("delta", fs.delta);
            if (f.contains("sites") && !(f.at("sites").is_string() && f.at("sites") == "auto"))
                fs.sites = f.at("sites").get<std::vector<NodeId>>();
            const std::string distance = f.value("distance", "absolute");
            if (distance != "absolute" && distance != "relative")
                throw ConfigError("distance", "fbc.distance must be 'absolute' or 'relative'");
            fs.relative = distance == "relative";
            if (f.contains("truncated_bits")) fs.truncated_bits = f.at("truncated_bits").get<std::vector<int>>();
            if (f.contains("deltas")) fs.deltas = f.at("deltas").get<std::vector<double>>();
            fs.evaluate_instrumented = f.value("evaluate_instrumented", false);
            validate_fbc(fs);
            c.fbc = std::move(fs);
        }
        if (c.trials == 0) throw ConfigError("trials", "trial count must be positive");
        c.strategy.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError("shape", std::string("malformed config: ") + e.what());
    }
}

json config_to_json(const ScenarioConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["trials"] = c.trials;
    j["jobs"] = c.jobs;
    j["strategy"] = {{"honest_warmup", c.strategy.honest_warmup},
                     {"small_job_threshold", c.strategy.small_job_threshold},
                     {"dishonest_prob", c.strategy.dishonest_prob}};
    if (c.rcc) {
        json combos = json::array();
        for (const Backend& b : c.rcc->combos) combos.push_back(backend_to_json(b));
        j["rcc"] = {{"programs", c.rcc->programs}, {"moduli", c.rcc->modules.moduli}, {"combos", combos}};
    }
    if (c.fbc) {
        const FbcSettings& f = *c.fbc;
        json kinds = json::array();
        for (SentinelKind k : f.kinds) kinds.push_back(std::string(to_string(k)));
        j["fbc"] = {{"programs", f.programs},
                    {"kinds", kinds},
                    {"n", f.n},
                    {"delta", f.delta},
                    {"distance", f.relative ? "relative" : "absolute"},
                    {"truncated_bits", f.truncated_bits},
                    {"deltas", f.deltas},
                    {"evaluate_instrumented", f.evaluate_instrumented}};
        if (f.sites.empty())
            j["fbc"]["sites"] = "auto";
        else
            j["fbc"]["sites"] = f.sites;
    }
    return j;
}

ScenarioConfig load_config(const std::string& path) {
    try {
        return config_from_json(parse_json(read_file(path)));
    } catch (const ParseError& e) {
        throw ConfigError("syntax", path + ": " + e.what());
    } catch (const InputError& e) {
        throw ConfigError("io", e.what());
    }
}

// --- reports -----------------------------------------------------------------

double ReportRow::raw_rate() const { return approximate ? static_cast<double>(detected) / approximate : 0.0; }
double ReportRow::per_detectable_rate() const {
    return detectable ? static_cast<double>(detected_detectable) / detectable : 0.0;
}
double ReportRow::detectable_fraction() const { return trials ? static_cast<double>(detectable) / trials : 0.0; }

const ReportRow* DetectionReport::find(const std::string& program, const std::string& combo,
                                       const std::string& row) const {
    for (const ReportRow& r : rows)
        if (r.program == program && r.combo == combo && r.row == row) return &r;
    return nullptr;
}

// --- RCC trials -----------------------------------------------------------------

DetectionReport run_rcc_trials(const ScenarioConfig& c, const RunOptions& opt) {
    if (!c.rcc) throw ConfigError("rcc", "config has no rcc section");
    check_common(c);
    const RccSettings& rs = *c.rcc;
    if (rs.programs.empty()) throw ConfigError("rcc", "rcc section lists no programs");
    if (rs.combos.empty()) throw ConfigError("rcc", "rcc section lists no backend combinations");
    for (const Backend& b : rs.combos) b.validate();

    DetectionReport rep;
    rep.config = c;
    const std::size_t C = rs.combos.size();
    const std::size_t q = rs.modules.moduli.size();
    std::vector<std::string> labels;
    for (const Backend& b : rs.combos) labels.push_back(b.label());

    for (const std::string& spec : rs.programs) {
        const Builtin b = load_program(spec);
        const Graph& g = b.graph;
        if (g.type() != ScalarType::Int16) throw ConfigError("program-type", "'" + spec + "' is not an integer program");
        rs.modules.validate(g.has_op(Op::Div));
        const std::size_t census = op_census(g).total;

        struct Cell {
            Paradigm gt = Paradigm::Accurate;
            bool detectable = false;
            Judgement judgement = Judgement::Negative;
            std::size_t failed = 0;
        };
        std::vector<Cell> cells(c.trials * C);
        std::vector<TrialRecord> records(opt.keep_records ? c.trials * C : 0);

        struct Worker {
            Evaluator exact, approx;
            RccChecker checker;
        };
        const unsigned workers = std::max(1u, c.jobs);
        std::vector<std::unique_ptr<Worker>> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.push_back(std::make_unique<Worker>(Worker{Evaluator(g), Evaluator(g), RccChecker(g, rs.modules)}));

        parallel_trials(c.trials, workers, [&](std::size_t t, unsigned w) {
            Worker& wk = *pool[w];
            Rng in = Rng::substream(c.seed, "inputs/" + spec, t);
            const std::vector<Scalar> inputs = sample_inputs(b, in);
            wk.exact.run(inputs, Backend::exact());
            const std::vector<Scalar> exact = outputs_of(wk.exact);
            for (std::size_t ci = 0; ci < C; ++ci) {
                ServerStrategy s = c.strategy;
                s.appx_backend = rs.combos[ci];
                ServerState st{t, Rng::substream(c.seed, server_label(spec, labels[ci]), t)};
                const Paradigm p = choose_paradigm(census, s, st);
                wk.approx.run(inputs, p == Paradigm::Approximate ? s.appx_backend : Backend::exact());
                const std::vector<Scalar> claimed = outputs_of(wk.approx);
                Cell& cell = cells[t * C + ci];
                cell.gt = p;
                cell.detectable = p == Paradigm::Approximate && claimed != exact;
                RccVerdict v = check_outputs(wk.checker, inputs, claimed);
                cell.judgement = v.judgement;
                cell.failed = v.failed_round.value_or(0);
                if (opt.keep_records) {
                    TrialRecord& r = records[t * C + ci];
                    r.trial = t;
                    r.program = spec;
                    r.combo = labels[ci];
                    r.inputs = inputs;
                    r.ground_truth = p;
                    r.claimed = claimed;
                    r.rcc = std::move(v);
                    r.detectable = cell.detectable;
                }
            }
        });

        for (std::size_t ci = 0; ci < C; ++ci) {
            for (std::size_t j = 1; j <= q; ++j) {
                ReportRow row;
                row.program = spec;
                row.combo = labels[ci];
                row.row = "round" + std::to_string(j);
                for (std::size_t t = 0; t < c.trials; ++t) {
                    const Cell& cell = cells[t * C + ci];
                    const bool pos = cell.judgement == Judgement::Positive && cell.failed < j;
                    ++row.trials;
                    if (cell.judgement == Judgement::Inconclusive) ++row.inconclusive;
                    if (cell.gt == Paradigm::Accurate) {
                        if (pos) ++row.fp;
                        continue;
                    }
                    ++row.approximate;
                    if (pos) ++row.detected;
                    if (cell.detectable) {
                        ++row.detectable;
                        if (pos)
                            ++row.detected_detectable;
                        else
                            ++row.fn;
                    }
                }
                rep.rows.push_back(std::move(row));
            }
        }
        for (auto& r : records) rep.records.push_back(std::move(r));
    }
    return rep;
}

// --- FBC trials -----------------------------------------------------------------

DetectionReport run_fbc_trials(const ScenarioConfig& c, const RunOptions& opt) {
    if (!c.fbc) throw ConfigError("fbc", "config has no fbc section");
    check_common(c);
    const FbcSettings& fs = *c.fbc;
    validate_fbc(fs);
    DetectionReport rep;
    rep.config = c;
    const std::size_t B = fs.truncated_bits.size();
    const std::size_t K = fs.kinds.size();

    for (const std::string& spec : fs.programs) {
        const FbcProgram prog = load_fbc_program(spec, fs);
        struct Cell {
            Paradigm gt = Paradigm::Accurate;
            bool detectable = false;
            std::vector<bool> positive;
        };
        std::vector<Cell> cells(c.trials * B);
        std::vector<TrialRecord> records(opt.keep_records ? c.trials * B : 0);
        const unsigned workers = std::max(1u, c.jobs);
        std::vector<std::unique_ptr<FbcRunner>> pool;
        for (unsigned w = 0; w < workers; ++w) pool.push_back(std::make_unique<FbcRunner>(prog, fs));

        parallel_trials(c.trials, workers, [&](std::size_t t, unsigned w) {
            FbcRunner& runner = *pool[w];
            Rng in = Rng::substream(c.seed, "inputs/" + spec, t);
            const std::vector<Scalar> inputs = sample_inputs(prog.builtin, in);
            const std::vector<Sentinel> sentinels = trial_sentinels(c, prog, t);
            const SentinelRun exact = runner.run(inputs, sentinels, Backend::exact());
            for (std::size_t bi = 0; bi < B; ++bi) {
                ServerStrategy s = c.strategy;
                s.appx_backend = Backend::fp_truncation(fs.truncated_bits[bi]);
                const std::string label = fp_label(fs.truncated_bits[bi]);
                ServerState st{t, Rng::substream(c.seed, server_label(spec, label), t)};
                const Paradigm p = choose_paradigm(prog.census, s, st);
                const SentinelRun run = p == Paradigm::Approximate ? runner.run(inputs, sentinels, s.appx_backend) : exact;
                Cell& cell = cells[t * B + bi];
                cell.gt = p;
                cell.detectable = p == Paradigm::Approximate && run.outputs != exact.outputs;
                for (const SentinelResult& r : run.results) cell.positive.push_back(r.positive);
                if (opt.keep_records) {
                    TrialRecord& r = records[t * B + bi];
                    r.trial = t;
                    r.program = spec;
                    r.combo = label;
                    r.inputs = inputs;
                    r.ground_truth = p;
                    r.claimed = run.outputs;
                    FbcVerdict v;
                    v.results = run.results;
                    for (const SentinelResult& sr : run.results)
                        if (sr.positive) v.judgement = Judgement::Positive;
                    r.fbc = std::move(v);
                    r.kinds = fs.kinds;
                    r.detectable = cell.detectable;
                }
            }
        });

        for (std::size_t bi = 0; bi < B; ++bi) {
            for (std::size_t k = 0; k <= K; ++k) {
                ReportRow row;
                row.program = spec;
                row.combo = fp_label(fs.truncated_bits[bi]);
                row.row = k < K ? "sentinel:" + std::string(to_string(fs.kinds[k])) : "sentinel:any";
                for (std::size_t t = 0; t < c.trials; ++t) {
                    const Cell& cell = cells[t * B + bi];
                    const bool pos = k < K ? cell.positive[k]
                                           : std::any_of(cell.positive.begin(), cell.positive.end(),
                                                         [](bool b) { return b; });
                    ++row.trials;
                    if (cell.gt == Paradigm::Accurate) {
                        if (pos) ++row.fp;
                        continue;
                    }
                    ++row.approximate;
                    if (pos)
                        ++row.detected;
                    else
                        ++row.fn;
                    if (cell.detectable) {
                        ++row.detectable;
                        if (pos) ++row.detected_detectable;
                    }
                }
                rep.rows.push_back(std::move(row));
            }
        }
        for (auto& r : records) rep.records.push_back(std::move(r));
    }
    return rep;
}

DetectionReport run_bench(const ScenarioConfig& c) {
    if (!c.rcc && !c.fbc) throw ConfigError("bench", "config has neither an rcc nor an fbc section");
    DetectionReport rep;
    rep.config = c;
    if (c.rcc) rep.rows = run_rcc_trials(c).rows;
    if (c.fbc) {
        auto rows = run_fbc_trials(c).rows;
        rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    }
    return rep;
}

// --- threshold sweep -------------------------------------------------------------

std::vector<DistanceSet> record_distances(const ScenarioConfig& c) {
    if (!c.fbc) throw ConfigError("fbc", "config has no fbc section");
    check_common(c);
    const FbcSettings& fs = *c.fbc;
    validate_fbc(fs);
    const std::size_t B = fs.truncated_bits.size();
    const std::size_t K = fs.kinds.size();
    std::vector<DistanceSet> out;
    for (const std::string& spec : fs.programs) {
        const FbcProgram prog = load_fbc_program(spec, fs);
        std::vector<double> exact_d(c.trials * K);
        std::vector<double> appx_d(c.trials * B * K);
        const unsigned workers = std::max(1u, c.jobs);
        std::vector<std::unique_ptr<FbcRunner>> pool;
        for (unsigned w = 0; w < workers; ++w) pool.push_back(std::make_unique<FbcRunner>(prog, fs));
        parallel_trials(c.trials, workers, [&](std::size_t t, unsigned w) {
            FbcRunner& runner = *pool[w];
            Rng in = Rng::substream(c.seed, "inputs/" + spec, t);
            const std::vector<Scalar> inputs = sample_inputs(prog.builtin, in);
            const std::vector<Sentinel> sentinels = trial_sentinels(c, prog, t);
            const SentinelRun exact = runner.run(inputs, sentinels, Backend::exact());
            for (std::size_t k = 0; k < K; ++k) exact_d[t * K + k] = exact.results[k].distance;
            for (std::size_t bi = 0; bi < B; ++bi) {
                const SentinelRun run = runner.run(inputs, sentinels, Backend::fp_truncation(fs.truncated_bits[bi]));
                for (std::size_t k = 0; k < K; ++k) appx_d[(t * B + bi) * K + k] = run.results[k].distance;
            }
        });
        for (std::size_t bi = 0; bi < B; ++bi) {
            for (std::size_t k = 0; k < K; ++k) {
                DistanceSet d;
                d.program = spec;
                d.combo = fp_label(fs.truncated_bits[bi]);
                d.kind = fs.kinds[k];
                for (std::size_t t = 0; t < c.trials; ++t) {
                    d.accurate.push_back(exact_d[t * K + k]);
                    d.approximate.push_back(appx_d[(t * B + bi) * K + k]);
                }
                out.push_back(std::move(d));
            }
        }
    }
    return out;
}

namespace {

void find_band(SweepCurve& curve, double fn_slack) {
    double best = std::numeric_limits<double>::infinity();
    for (const SweepPoint& p : curve.points)
        if (p.fp == 0) best = std::min(best, p.fn_rate());
    if (!std::isfinite(best)) return;
    std::size_t best_len = 0, best_start = 0;
    for (std::size_t i = 0; i < curve.points.size();) {
        auto ok = [&](const SweepPoint& p) { return p.fp == 0 && p.fn_rate() <= best + fn_slack; };
        if (!ok(curve.points[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < curve.points.size() && ok(curve.points[j])) ++j;
        if (j - i > best_len) {
            best_len = j - i;
            best_start = i;
        }
        i = j;
    }
    curve.band = std::make_pair(curve.points[best_start + best_len - 1].delta, curve.points[best_start].delta);
}

SweepCurve sweep_raw(const std::vector<double>& acc, const std::vector<double>& appx, const std::vector<double>& deltas,
                     double fn_slack) {
    SweepCurve curve;
    for (double delta : deltas) {
        SweepPoint p;
        p.delta = delta;
        p.accurate = acc.size();
        p.approximate = appx.size();
        for (double d : acc)
            if (exceeds(d, delta)) ++p.fp;
        for (double d : appx)
            if (!exceeds(d, delta)) ++p.fn;
        curve.points.push_back(p);
    }
    find_band(curve, fn_slack);
    return curve;
}

void check_deltas(const std::vector<double>& deltas) {
    if (deltas.empty()) throw ConfigError("deltas", "delta list is empty");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0)) throw ConfigError("deltas", "deltas must be positive");
        if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ConfigError("deltas", "deltas must be strictly descending");
    }
}

}  // namespace

SweepCurve sweep_distances(const DistanceSet& d, const std::vector<double>& deltas, double fn_slack) {
    check_deltas(deltas);
    SweepCurve curve = sweep_raw(d.accurate, d.approximate, deltas, fn_slack);
    curve.program = d.program;
    curve.combo = d.combo;
    curve.row = "sentinel:" + std::string(to_string(d.kind));
    return curve;
}

SweepCurve sweep_any(const std::vector<const DistanceSet*>& sets, const std::vector<double>& deltas, double fn_slack) {
    check_deltas(deltas);
    if (sets.empty()) throw ConfigError("sweep", "no distance sets to combine");
    // NaN distances count as positive at every delta.
    auto worst = [](double a, double b) { return std::isnan(b) || b > a ? b : a; };
    std::vector<double> acc = sets.front()->accurate, appx = sets.front()->approximate;
    for (const DistanceSet* s : sets) {
        if (s->accurate.size() != acc.size() || s->approximate.size() != appx.size())
            throw ConfigError("sweep", "distance sets cover different trials");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = worst(acc[i], s->accurate[i]);
        for (std::size_t i = 0; i < appx.size(); ++i) appx[i] = worst(appx[i], s->approximate[i]);
    }
    SweepCurve curve = sweep_raw(acc, appx, deltas, fn_slack);
    curve.program = sets.front()->program;
    curve.combo = sets.front()->combo;
    curve.row = "sentinel:any";
    return curve;
}

std::vector<SweepCurve> sweep_threshold(const ScenarioConfig& c, const std::vector<double>& deltas) {
    check_deltas(deltas);
    const std::vector<DistanceSet> sets = record_distances(c);
    std::vector<SweepCurve> out;
    std::size_t i = 0;
    while (i < sets.size()) {
        std::vector<const DistanceSet*> group;
        std::size_t j = i;
        for (; j < sets.size() && sets[j].program == sets[i].program && sets[j].combo == sets[i].combo; ++j) {
            out.push_back(sweep_distances(sets[j], deltas));
            group.push_back(&sets[j]);
        }
        out.push_back(sweep_any(group, deltas));
        i = j;
    }
    return out;
}

}  // namespace dhac
