#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhac/arith.hpp"
#include "dhac/builtins.hpp"
#include "dhac/fbc.hpp"
#include "dhac/graph.hpp"
#include "dhac/interp.hpp"
#include "dhac/rcc.hpp"

namespace dhac {

// Strategic server. A job runs accurately when it is among the first W jobs,
// when its arithmetic census is below T, or when the dishonest draw (p) fails.
struct ServerStrategy {
    std::uint64_t honest_warmup = 10;        // W
    std::uint64_t small_job_threshold = 30;  // T
    double dishonest_prob = 1.0;             // p
    Backend appx_backend = Backend::approximate(IntUnit::loa(4), IntUnit::trunc_mul(4));

    void validate() const;  // ConfigError
};

struct ServerState {
    std::uint64_t jobs_seen = 0;  // index of the next job
    Rng draw{0};                  // dishonest-draw stream, separate from input generation
};

// Paradigm for the next job; consumes one draw only when the job is eligible.
Paradigm choose_paradigm(std::size_t census_total, const ServerStrategy& s, ServerState& state);

struct Execution {
    Trace trace;
    Paradigm ground_truth = Paradigm::Accurate;
};

// Picks the paradigm, evaluates, advances the job counter. EvalError propagates.
Execution server_execute(const Graph& job, std::span<const Scalar> inputs, const ServerStrategy& s,
                         ServerState& state);

// True when `claimed` differs from the exact-backend outputs (bit-exact).
bool ground_truth_oracle(const Graph& job, std::span<const Scalar> inputs, std::span<const Scalar> claimed);

struct FbcSettings {
    std::vector<std::string> programs{"conv_layer"};
    std::vector<SentinelKind> kinds{SentinelKind::Addition, SentinelKind::Multiplication, SentinelKind::TanArctan};
    int n = 3;
    double delta = kDefaultDelta;
    std::vector<NodeId> sites;  // empty: a fresh auto site per sentinel and trial
    bool relative = false;
    std::vector<int> truncated_bits{20, 10};
    std::vector<double> deltas{1e-3, 1e-6, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13, 1e-14, 1e-15, 1e-16};
    // Evaluate the instrumented graph each trial instead of replaying the
    // sentinel steps on the site value. Both give identical results.
    bool evaluate_instrumented = false;
};

struct RccSettings {
    std::vector<std::string> programs;  // integer program specs
    ModuleSet modules;
    std::vector<Backend> combos;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::size_t trials = 10000;
    unsigned jobs = 1;
    ServerStrategy strategy;  // appx_backend is replaced per combo
    std::optional<RccSettings> rcc;
    std::optional<FbcSettings> fbc;
};

// The nine integer combinations {LOA4, TA6, SC4} x {TM4, BA4, LOG}.
std::vector<Backend> default_combos();
RccSettings default_rcc_settings();
ScenarioConfig default_config();  // both sections, defaults everywhere

Backend backend_from_json(const nlohmann::json& j);
nlohmann::json backend_to_json(const Backend& b);
// Missing keys keep defaults; unknown keys are rejected. Throws ConfigError.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& c);
ScenarioConfig load_config(const std::string& path);

struct TrialRecord {
    std::uint64_t trial = 0;
    std::string program;
    std::string combo;
    std::vector<Scalar> inputs;
    Paradigm ground_truth = Paradigm::Accurate;
    std::vector<Scalar> claimed;
    std::optional<RccVerdict> rcc;
    std::optional<FbcVerdict> fbc;
    std::vector<SentinelKind> kinds;  // kind of each fbc result
    bool detectable = false;
};

// One report line. For RCC rows `row` is "round<j>" and detection at round j
// means Positive with failed_round < j. For FBC rows `row` is
// "sentinel:<kind>" or "sentinel:any".
struct ReportRow {
    std::string program;
    std::string combo;
    std::string row;
    std::size_t trials = 0;
    std::size_t approximate = 0;          // ground truth Approximate
    std::size_t detectable = 0;           // Approximate and output differs from exact
    std::size_t detected = 0;             // Positive on Approximate trials
    std::size_t detected_detectable = 0;  // Positive on detectable trials
    std::size_t fp = 0;                   // Positive on Accurate trials
    std::size_t fn = 0;                   // RCC: detectable missed; FBC: approximate missed
    std::size_t inconclusive = 0;

    double raw_rate() const;             // detected / approximate
    double per_detectable_rate() const;  // detected_detectable / detectable
    double detectable_fraction() const;  // detectable / trials
};

struct DetectionReport {
    ScenarioConfig config;
    std::vector<ReportRow> rows;
    std::vector<TrialRecord> records;  // filled only when requested

    const ReportRow* find(const std::string& program, const std::string& combo, const std::string& row) const;
};

struct RunOptions {
    bool keep_records = false;
};

// Throws ConfigError if the config lacks the section or names a program of
// the wrong type.
DetectionReport run_rcc_trials(const ScenarioConfig& c, const RunOptions& opt = {});
DetectionReport run_fbc_trials(const ScenarioConfig& c, const RunOptions& opt = {});
DetectionReport run_bench(const ScenarioConfig& c);  // both sections present in c

// Recorded sentinel distances of one FBC cell; the sweep re-thresholds these.
struct DistanceSet {
    std::string program;
    std::string combo;
    SentinelKind kind = SentinelKind::Addition;
    std::vector<double> accurate;     // distances under the exact backend
    std::vector<double> approximate;  // same trials under the truncated backend
};

// Runs every FBC trial twice (exact and truncated backend) on the same inputs,
// sites and operands, recording distances.
std::vector<DistanceSet> record_distances(const ScenarioConfig& c);

struct SweepPoint {
    double delta = 0.0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t accurate = 0;
    std::size_t approximate = 0;
    double fp_rate() const { return accurate ? static_cast<double>(fp) / accurate : 0.0; }
    double fn_rate() const { return approximate ? static_cast<double>(fn) / approximate : 0.0; }
};

struct SweepCurve {
    std::string program;
    std::string combo;
    std::string row;  // "sentinel:<kind>" or "sentinel:any"
    std::vector<SweepPoint> points;
    // Widest run of consecutive deltas with FP = 0 and FN rate within
    // `fn_slack` of the smallest FN rate among FP = 0 points.
    std::optional<std::pair<double, double>> band;  // (smallest, largest delta)
};

SweepCurve sweep_distances(const DistanceSet& d, const std::vector<double>& deltas, double fn_slack = 0.01);
// "sentinel:any": a trial is positive when any sentinel's distance is.
SweepCurve sweep_any(const std::vector<const DistanceSet*>& sets, const std::vector<double>& deltas,
                     double fn_slack = 0.01);
// Deltas must be non-empty and strictly descending; ConfigError otherwise.
std::vector<SweepCurve> sweep_threshold(const ScenarioConfig& c, const std::vector<double>& deltas);

// Report rendering. CSV starts with the line "dhac-report-v1", followed by
// "# key=value" config lines and the column header.
std::string report_csv(const DetectionReport& r);
std::string report_table(const DetectionReport& r);
std::string sweep_csv(const ScenarioConfig& c, const std::vector<SweepCurve>& curves);
std::string sweep_table(const std::vector<SweepCurve>& curves);

}  // namespace dhac
