#include <cstdio>
#include <sstream>

#include "dhac/graph_io.hpp"
#include "dhac/scenario.hpp"

namespace dhac {

namespace {

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f, const char* sep = ",") {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += f(v[i]);
    }
    return s;
}

std::string echo(const ScenarioConfig& c) {
    std::ostringstream o;
    o << "# seed=" << c.seed << "\n";
    o << "# trials=" << c.trials << "\n";
    o << "# strategy=W:" << c.strategy.honest_warmup << ",T:" << c.strategy.small_job_threshold
      << ",p:" << format_double(c.strategy.dishonest_prob) << "\n";
    o << "# units=parametric adders LOA/TA/SC and multipliers TM/BA/LOG; float mantissa truncation\n";
    o << "# int_sub=adder on two's-complement negation; int_div=exact\n";
    if (c.rcc) {
        o << "# rcc.programs=" << join(c.rcc->programs, [](const std::string& s) { return s; }, ";") << "\n";
        o << "# rcc.moduli=" << join(c.rcc->modules.moduli, [](std::int64_t m) { return std::to_string(m); }) << "\n";
        o << "# rcc.combos=" << join(c.rcc->combos, [](const Backend& b) { return b.label(); }) << "\n";
    }
    if (c.fbc) {
        const FbcSettings& f = *c.fbc;
        o << "# fbc.programs=" << join(f.programs, [](const std::string& s) { return s; }, ";") << "\n";
        o << "# fbc.kinds=" << join(f.kinds, [](SentinelKind k) { return std::string(to_string(k)); }) << "\n";
        o << "# fbc.n=" << f.n << "\n";
        o << "# fbc.delta=" << format_double(f.delta) << "\n";
        o << "# fbc.distance=" << (f.relative ? "relative" : "absolute") << "\n";
        o << "# fbc.sites="
          << (f.sites.empty() ? std::string("auto") : join(f.sites, [](NodeId id) { return std::to_string(id); }))
          << "\n";
        o << "# fbc.truncated_bits=" << join(f.truncated_bits, [](int b) { return std::to_string(b); }) << "\n";
    }
    return o.str();
}

// RFC 4180 quoting; program specs such as "conv_layer:channels=2,size=6"
// contain commas.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

std::string pad(const std::string& s, std::size_t w, bool left = true) {
    if (s.size() >= w) return s;
    return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

std::string render_table(const std::vector<std::vector<std::string>>& cells) {
    std::vector<std::size_t> width;
    for (const auto& row : cells)
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (width.size() <= i) width.push_back(0);
            width[i] = std::max(width[i], row[i].size());
        }
    std::ostringstream o;
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) o << "  ";
            o << pad(row[i], width[i], i < 3);
        }
        o << "\n";
    }
    return o.str();
}

}  // namespace

std::string report_csv(const DetectionReport& r) {
    std::ostringstream o;
    o << "dhac-report-v1\n" << echo(r.config);
    o << "program,combo,row,raw_rate,per_detectable_rate,fp,fn,trials,detectable\n";
    for (const ReportRow& row : r.rows) {
        o << csv_field(row.program) << ',' << csv_field(row.combo) << ',' << row.row << ',' << fixed(row.raw_rate()) << ','
          << fixed(row.per_detectable_rate()) << ',' << row.fp << ',' << row.fn << ',' << row.trials << ','
          << row.detectable << "\n";
    }
    return o.str();
}

std::string report_table(const DetectionReport& r) {
    std::vector<std::vector<std::string>> cells{
        {"program", "combo", "row", "raw%", "/detectable%", "detectable%", "FP", "FN", "trials"}};
    for (const ReportRow& row : r.rows)
        cells.push_back({row.program, row.combo, row.row, fixed(100.0 * row.raw_rate(), 2),
                         fixed(100.0 * row.per_detectable_rate(), 2), fixed(100.0 * row.detectable_fraction(), 2),
                         std::to_string(row.fp), std::to_string(row.fn), std::to_string(row.trials)});
    return render_table(cells);
}

std::string sweep_csv(const ScenarioConfig& c, const std::vector<SweepCurve>& curves) {
    std::ostringstream o;
    o << "dhac-sweep-v1\n" << echo(c);
    for (const SweepCurve& cv : curves)
        if (cv.band)
            o << "# band " << csv_field(cv.program) << ',' << csv_field(cv.combo) << ',' << cv.row << "=[" << format_double(cv.band->first)
              << ',' << format_double(cv.band->second) << "]\n";
    o << "program,combo,row,delta,fp_rate,fn_rate,fp,fn,accurate,approximate\n";
    for (const SweepCurve& cv : curves)
        for (const SweepPoint& p : cv.points)
            o << csv_field(cv.program) << ',' << csv_field(cv.combo) << ',' << cv.row << ',' << format_double(p.delta) << ','
              << fixed(p.fp_rate()) << ',' << fixed(p.fn_rate()) << ',' << p.fp << ',' << p.fn << ',' << p.accurate
              << ',' << p.approximate << "\n";
    return o.str();
}

std::string sweep_table(const std::vector<SweepCurve>& curves) {
    std::vector<std::vector<std::string>> cells{{"program", "combo", "row", "delta", "FP%", "FN%"}};
    for (const SweepCurve& cv : curves)
        for (const SweepPoint& p : cv.points)
            cells.push_back({cv.program, cv.combo, cv.row, format_double(p.delta), fixed(100.0 * p.fp_rate(), 2),
                             fixed(100.0 * p.fn_rate(), 2)});
    std::string out = render_table(cells);
    for (const SweepCurve& cv : curves)
        out += cv.program + " " + cv.combo + " " + cv.row + ": band " +
               (cv.band ? "[" + format_double(cv.band->first) + ", " + format_double(cv.band->second) + "]"
                        : std::string("none")) +
               "\n";
    return out;
}

}  // namespace dhac
