// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Sizes and bounds follow the project's acceptance list; statistical criteria
// use the full 10^4 trials per cell.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dhac/graph_io.hpp"
#include "dhac/scenario.hpp"

using namespace dhac;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail, double seconds) {
    std::printf("AC%-2d %s  %s: %s (%.1f s)\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

// Runs `body` and reports it; an exception counts as a failure.
void criterion(int id, const std::string& what, const std::function<bool(std::string&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, pass, what, detail, s);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<std::int64_t> small_primes(std::int64_t below) {
    std::vector<std::int64_t> p;
    for (std::int64_t m = 2; m < below; ++m)
        if (is_prime(m)) p.push_back(m);
    return p;
}

std::vector<Builtin> integer_builtins() {
    std::vector<Builtin> out;
    for (const std::string& a : integer_builtin_aliases()) out.push_back(make_builtin(parse_program_spec(a)));
    return out;
}

// Detection experiments: every job is eligible and the server always cheats.
ScenarioConfig dishonest(ScenarioConfig c) {
    c.strategy.honest_warmup = 0;
    c.strategy.small_job_threshold = 0;
    c.strategy.dishonest_prob = 1.0;
    return c;
}

const std::vector<double> kSweepDeltas{1e-3, 1e-6, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13, 1e-14, 1e-15, 1e-16};

std::size_t index_of_delta(const SweepCurve& cv, double d) {
    for (std::size_t k = 0; k < cv.points.size(); ++k)
        if (cv.points[k].delta == d) return k;
    throw std::runtime_error("delta missing from sweep");
}

}  // namespace

int main() {
    const std::vector<Builtin> ints = integer_builtins();
    const std::vector<std::string> aliases = integer_builtin_aliases();
    const std::vector<std::int64_t> primes = small_primes(10000);

    criterion(1, "RCC soundness", [&](std::string& d) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng pick = Rng::substream(1, "acceptance/prime-sets");
        std::vector<ModuleSet> sets(1);
        for (int s = 0; s < 10; ++s) {
            ModuleSet m;
            while (m.moduli.size() < 3) {
                const std::int64_t p = primes[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(primes.size()) - 1))];
                if (std::find(m.moduli.begin(), m.moduli.end(), p) == m.moduli.end()) m.moduli.push_back(p);
            }
            sets.push_back(m);
        }
        std::vector<std::vector<RccChecker>> checkers(ints.size());
        for (std::size_t b = 0; b < ints.size(); ++b)
            for (const ModuleSet& m : sets) checkers[b].emplace_back(ints[b].graph, m);
        std::size_t positives = 0, checks = 0;
        const std::size_t trials = 10000;
        for (std::size_t t = 0; t < trials; ++t) {
            const std::size_t b = t % ints.size();
            Rng in = Rng::substream(1, "acceptance/soundness", t);
            const auto inputs = sample_inputs(ints[b], in);
            const std::int64_t out = evaluate(ints[b].graph, inputs, Backend::exact()).outputs[0].i;
            for (RccChecker& c : checkers[b]) {
                positives += c.check(inputs, out).judgement != Judgement::Negative;
                ++checks;
            }
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        d = std::to_string(positives) + " non-negative verdicts in " + std::to_string(checks) + " checks (" +
            std::to_string(trials) + " accurate trials x 11 module sets), runtime " + fmt("%.2f", s) + " s < 60 s";
        return positives == 0 && s < 60.0;
    });

    criterion(2, "RCC congruence oracle", [&](std::string& d) {
        std::size_t mismatches = 0;
        const std::size_t trials = 10000;
        for (std::size_t t = 0; t < trials; ++t) {
            Rng r = Rng::substream(1, "acceptance/congruence", t);
            const std::size_t b = static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(ints.size()) - 1));
            const std::int64_t m = r.uniform_int(2, 10000);
            const auto inputs = sample_inputs(ints[b], r);
            const std::int64_t out = evaluate(ints[b].graph, inputs, Backend::exact()).outputs[0].i;
            mismatches += !(evaluate_mod(ints[b].graph, inputs, m) == to_residue(out, m));
        }
        d = std::to_string(mismatches) + " mismatches over " + std::to_string(trials) + " (program, input, modulus) triples";
        return mismatches == 0;
    });

    criterion(3, "RCC detection", [&](std::string& d) {
        ScenarioConfig c = dishonest(default_config());
        c.fbc.reset();
        c.trials = 10000;
        const DetectionReport r = run_rcc_trials(c);
        bool ok = true;
        std::string parts;
        for (const std::string& p : aliases) {
            std::size_t det = 0, detectable = 0, trials = 0;
            double worst = 1.0;
            std::string worst_combo;
            for (const ReportRow& row : r.rows) {
                if (row.program != p || row.row != "round3") continue;
                det += row.detected_detectable;
                detectable += row.detectable;
                trials += row.trials;
                if (row.detectable && row.per_detectable_rate() < worst) {
                    worst = row.per_detectable_rate();
                    worst_combo = row.combo;
                }
            }
            const double rate = detectable ? static_cast<double>(det) / detectable : 0.0;
            ok = ok && detectable > 0 && rate >= 0.98;
            parts += (parts.empty() ? "" : "; ") + p + " " + fmt("%.4f", rate) + " (detectable " +
                     fmt("%.3f", static_cast<double>(detectable) / trials) + ", lowest combo " + worst_combo + " " +
                     fmt("%.4f", worst) + ")";
        }
        d = "round-3 rate over detectable trials, 9 combos pooled, >= 0.98: " + parts;
        return ok;
    });

    criterion(4, "modular ring axioms", [&](std::string& d) {
        Rng r = Rng::substream(1, "acceptance/ring");
        std::size_t violations = 0, division_cases = 0;
        const std::size_t trials = 100000;
        for (std::size_t t = 0; t < trials; ++t) {
            const std::int64_t m = primes[static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(primes.size()) - 1))];
            const Residue a = to_residue(r.uniform_int(-1000000, 1000000), m);
            const Residue b = to_residue(r.uniform_int(-1000000, 1000000), m);
            const Residue c = to_residue(r.uniform_int(-1000000, 1000000), m);
            bool ok = ring_add(ring_add(a, b), c) == ring_add(a, ring_add(b, c));
            ok = ok && ring_mul(ring_mul(a, b), c) == ring_mul(a, ring_mul(b, c));
            ok = ok && ring_add(a, b) == ring_add(b, a) && ring_mul(a, b) == ring_mul(b, a);
            ok = ok && ring_mul(a, ring_add(b, c)) == ring_add(ring_mul(a, b), ring_mul(a, c));
            ok = ok && ring_add(a, ring_neg(a)).value == 0 && ring_sub(a, b) == ring_add(a, ring_neg(b));
            if (a.value != 0) ok = ok && ring_mul(a, ring_inv(a)).value == 1;
            // Exact integer division: (q*y) / y in the ring equals q's class when y is a unit.
            const std::int64_t y = r.uniform_int(1, 1000), q = r.uniform_int(-1000, 1000);
            if (y % m != 0) {
                ++division_cases;
                ok = ok && ring_div(to_residue(q * y, m), to_residue(y, m)) == to_residue(q, m);
            }
            violations += !ok;
        }
        d = std::to_string(violations) + " violations over " + std::to_string(trials) +
            " residue triples (primes < 10^4; " + std::to_string(division_cases) + " division cases)";
        return violations == 0;
    });

    // Criteria 5 and 7 share one recording of exact and truncated distances.
    ScenarioConfig fbc_cfg = dishonest(default_config());
    fbc_cfg.rcc.reset();
    fbc_cfg.trials = 10000;
    std::vector<SweepCurve> curves;
    std::string sweep_error;
    const auto sweep_t0 = std::chrono::steady_clock::now();
    try {
        curves = sweep_threshold(fbc_cfg, kSweepDeltas);
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    const double sweep_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - sweep_t0).count();

    criterion(5, "FBC zero false positives", [&](std::string& d) {
        if (!sweep_error.empty()) throw std::runtime_error(sweep_error);
        std::size_t positives = 0, kinds = 0;
        std::size_t trials = 0;
        for (const SweepCurve& cv : curves) {
            if (cv.combo != "fp20" || cv.row == "sentinel:any") continue;
            ++kinds;
            for (double delta : {1e-13, 1e-14}) {
                const SweepPoint& p = cv.points[index_of_delta(cv, delta)];
                positives += p.fp;
                trials = p.accurate;
            }
        }
        d = std::to_string(positives) + " positives on the exact backend, " + std::to_string(kinds) + " kinds x " +
            std::to_string(trials) + " trials at delta 1e-13 and 1e-14";
        return positives == 0 && kinds == 3 && trials == 10000;
    });

    criterion(6, "FBC detection", [&](std::string& d) {
        const DetectionReport r = run_fbc_trials(fbc_cfg);
        const std::string prog = fbc_cfg.fbc->programs[0];
        auto rate = [&](const char* combo, const char* row) {
            const ReportRow* x = r.find(prog, combo, row);
            if (!x || x->approximate != 10000) throw std::runtime_error(std::string("missing row ") + combo + " " + row);
            return x->raw_rate();
        };
        const double a20 = rate("fp20", "sentinel:add"), m20 = rate("fp20", "sentinel:mul"), t20 = rate("fp20", "sentinel:tan");
        const double a10 = rate("fp10", "sentinel:add"), m10 = rate("fp10", "sentinel:mul"), t10 = rate("fp10", "sentinel:tan");
        d = "20 bits add " + fmt("%.4f", a20) + " mul " + fmt("%.4f", m20) + " tan " + fmt("%.4f", t20) +
            " (each >= 0.99); 10 bits add " + fmt("%.4f", a10) + " (>= 0.95) tan " + fmt("%.4f", t10) +
            " (>= 0.97) mul " + fmt("%.4f", m10) + " (>= 0.90); mul <= add on the same trials";
        return a20 >= 0.99 && m20 >= 0.99 && t20 >= 0.99 && a10 >= 0.95 && t10 >= 0.97 && m10 >= 0.90 && m10 <= a10;
    });

    criterion(7, "threshold sweep shape", [&](std::string& d) {
        if (!sweep_error.empty()) throw std::runtime_error(sweep_error);
        bool ok = !curves.empty();
        std::string bad;
        double fp16 = 0.0;
        for (const SweepCurve& cv : curves) {
            double min_fn = 1.0;
            for (const SweepPoint& p : cv.points) min_fn = std::min(min_fn, p.fn_rate());
            bool curve_ok = true;
            for (std::size_t k = 0; k < cv.points.size(); ++k) {
                const SweepPoint& p = cv.points[k];
                if (p.delta >= 1e-14 && p.fp != 0) curve_ok = false;
                if (k > 0 && p.fn > cv.points[k - 1].fn) curve_ok = false;
                if ((p.delta == 1e-13 || p.delta == 1e-14) && p.fn_rate() > min_fn + 0.01) curve_ok = false;
            }
            fp16 = std::max(fp16, cv.points[index_of_delta(cv, 1e-16)].fp_rate());
            if (!curve_ok) bad += " " + cv.combo + "/" + cv.row;
            ok = ok && curve_ok;
        }
        const SweepCurve& any10 = curves.back();
        d = std::to_string(curves.size()) + " curves: FP = 0 for delta >= 1e-14, FN non-increasing, FN in [1e-14, 1e-13] "
            "within 0.01 of the sweep minimum" + (bad.empty() ? "" : "; violated by" + bad) + "; " + any10.combo + " " +
            any10.row + " FN at 1e-3 " + fmt("%.4f", any10.points[0].fn_rate()) + ", largest FP rate at 1e-16 " +
            fmt("%.4f", fp16) + "; recording took " + fmt("%.1f", sweep_s) + " s";
        return ok;
    });

    criterion(8, "non-interference", [&](std::string& d) {
        const Builtin b = make_builtin("conv_layer");
        const auto sites = auto_site_candidates(b.graph);
        std::size_t differing = 0;
        const std::size_t trials = 1000;
        for (std::size_t t = 0; t < trials; ++t) {
            Rng r = Rng::substream(1, "acceptance/non-interference", t);
            std::vector<Sentinel> ss;
            std::vector<NodeId> used;
            for (SentinelKind k : {SentinelKind::Addition, SentinelKind::Multiplication, SentinelKind::TanArctan}) {
                NodeId site;
                do {
                    site = sites[static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(sites.size()) - 1))];
                } while (std::find(used.begin(), used.end(), site) != used.end());
                used.push_back(site);
                ss.push_back(make_sentinel(b.graph, k, 3, site, kDefaultDelta, r));
            }
            const InstrumentedGraph ig = instrument(b.graph, ss);
            const auto inputs = sample_inputs(b, r);
            differing += evaluate(ig.graph, inputs, Backend::exact()).outputs != evaluate(b.graph, inputs, Backend::exact()).outputs;
        }
        d = std::to_string(differing) + " of " + std::to_string(trials) +
            " instrumented conv_layer runs differ bitwise from the original (3 sentinels each)";
        return differing == 0;
    });

    criterion(9, "approximate-model sanity", [&](std::string& d) {
        const std::vector<Backend> combos = default_combos();
        const std::size_t trials = 10000;
        std::vector<std::vector<ErrorStats>> stats(combos.size());
        for (std::size_t ci = 0; ci < combos.size(); ++ci)
            for (std::size_t b = 0; b < ints.size(); ++b) {
                std::vector<std::int64_t> exact, approx;
                Evaluator ev(ints[b].graph);
                for (std::size_t t = 0; t < trials; ++t) {
                    Rng in = Rng::substream(1, "inputs/" + aliases[b], t);
                    const auto inputs = sample_inputs(ints[b], in);
                    ev.run(inputs, Backend::exact());
                    exact.push_back(ev.output().i);
                    ev.run(inputs, combos[ci]);
                    approx.push_back(ev.output().i);
                }
                stats[ci].push_back(error_stats(exact, approx));
            }
        // The mildest combination has the smallest MRE averaged over programs.
        std::size_t mild = 0;
        auto mean_mre = [&](std::size_t ci) {
            double s = 0.0;
            for (const ErrorStats& e : stats[ci]) s += e.mre;
            return s / static_cast<double>(stats[ci].size());
        };
        for (std::size_t ci = 1; ci < combos.size(); ++ci)
            if (mean_mre(ci) < mean_mre(mild)) mild = ci;
        bool ok = true;
        std::string parts;
        for (std::size_t b = 0; b < ints.size(); ++b) {
            const ErrorStats& e = stats[mild][b];
            ok = ok && e.mre < 0.05 && e.zero_error_fraction > 0.0;
            parts += (parts.empty() ? "" : "; ") + aliases[b] + " MRE " + fmt("%.4f", e.mre) + " zero " +
                     fmt("%.3f", e.zero_error_fraction);
        }
        double worst = 0.0;
        std::string worst_at;
        for (std::size_t ci = 0; ci < combos.size(); ++ci)
            for (std::size_t b = 0; b < ints.size(); ++b)
                if (stats[ci][b].mre > worst) {
                    worst = stats[ci][b].mre;
                    worst_at = aliases[b] + " under " + combos[ci].label();
                }
        d = "mildest combo " + combos[mild].label() + ": " + parts + " (MRE < 0.05, zero fraction > 0); largest MRE " +
            fmt("%.4f", worst) + " for " + worst_at;
        return ok;
    });

    criterion(10, "determinism", [&](std::string& d) {
#ifdef DHAC_CLI_PATH
        const std::filesystem::path dir = std::filesystem::temp_directory_path() / "dhac_acceptance";
        std::filesystem::create_directories(dir);
        const std::string a = (dir / "bench_a.csv").string(), b = (dir / "bench_b.csv").string();
        const std::string base = std::string("\"") + DHAC_CLI_PATH + "\" bench --seed 1 --out ";
        const int ra = std::system((base + "\"" + a + "\" > /dev/null").c_str());
        const int rb = std::system((base + "\"" + b + "\" > /dev/null").c_str());
        const std::string ca = read_file(a), cb = read_file(b);
        d = "two full `dhac bench --seed 1` runs: " + std::to_string(ca.size()) + " bytes, " +
            (ca == cb ? "byte-identical" : "DIFFERENT");
        return ra == 0 && rb == 0 && !ca.empty() && ca == cb;
#else
        ScenarioConfig c = default_config();
        const std::string a = report_csv(run_bench(c)), b = report_csv(run_bench(c));
        d = "two in-process default benches (CLI not built): " + std::string(a == b ? "byte-identical" : "DIFFERENT");
        return a == b;
#endif
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
