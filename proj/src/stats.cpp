#include "hvsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "hvsim/error.hpp"

namespace hvsim::stats {

namespace {

// One definition of the report schema: key order is fixed and shared by the
// table, json and csv renderers and by compare(), so machine output stays
// stable across formats.
struct RowDef {
    const char* key;
    const char* label;
    bool integral;
    double (*get)(const Stats&);
};

constexpr double u64_row(uint64_t v) { return double(v); }

const RowDef kRows[] = {
    {"itlb_miss_if", "Number of I-TLB misses while reading PTE in IF stage",
     true, [](const Stats& s) { return u64_row(s.counters.itlb_miss_if); }},
    {"icache_miss_if",
     "Number of I-cache misses while reading instruction in IF stage", true,
     [](const Stats& s) { return u64_row(s.counters.icache_miss_if); }},
    {"dcache_pte_miss_if",
     "Number of D-cache misses while reading PTE in IF stage", true,
     [](const Stats& s) { return u64_row(s.counters.dcache_pte_miss_if); }},
    {"dtlb_miss_load",
     "Number of D-TLB misses while reading PTE in MEM stage during load", true,
     [](const Stats& s) { return u64_row(s.counters.dtlb_miss_load); }},
    {"dcache_data_miss_load",
     "Number of D-cache misses while reading data in MEM stage during load",
     true,
     [](const Stats& s) { return u64_row(s.counters.dcache_data_miss_load); }},
    {"dcache_pte_miss_load",
     "Number of D-cache misses while reading PTE in MEM stage during load",
     true,
     [](const Stats& s) { return u64_row(s.counters.dcache_pte_miss_load); }},
    {"dtlb_miss_store",
     "Number of D-TLB misses while reading PTE in MEM stage during store",
     true, [](const Stats& s) { return u64_row(s.counters.dtlb_miss_store); }},
    {"dcache_data_miss_store",
     "Number of D-cache misses while writing data in MEM stage during store",
     true,
     [](const Stats& s) { return u64_row(s.counters.dcache_data_miss_store); }},
    {"dcache_pte_miss_store",
     "Number of D-cache misses while reading PTE in MEM stage during store",
     true,
     [](const Stats& s) { return u64_row(s.counters.dcache_pte_miss_store); }},
    {"itlb_misses", "Total number of I-TLB misses", true,
     [](const Stats& s) { return u64_row(s.itlb_misses); }},
    {"icache_misses", "Total number of I-cache misses", true,
     [](const Stats& s) { return u64_row(s.icache_misses); }},
    {"dtlb_misses", "Total number of D-TLB misses", true,
     [](const Stats& s) { return u64_row(s.dtlb_misses); }},
    {"dcache_misses", "Total number of D-cache misses", true,
     [](const Stats& s) { return u64_row(s.dcache_misses); }},
    {"cycles", "Clock cycle count", true,
     [](const Stats& s) { return u64_row(s.cycles); }},
    {"instret", "Number of dynamic instructions executed (simulated)", true,
     [](const Stats& s) { return u64_row(s.instret); }},
    {"cpi", "Cycles per instruction (CPI)", false,
     [](const Stats& s) { return s.cpi; }},
    {"ipc", "Instructions per cycle (IPC)", false,
     [](const Stats& s) { return s.ipc; }},
};

std::string format_value(const RowDef& def, double v) {
    if (def.integral) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%llu", (unsigned long long)(v));
        return buf;
    }
    return format_sig4(v);
}

size_t label_width() {
    size_t w = 0;
    for (const RowDef& d : kRows)
        w = std::max(w, std::string(d.label).size());
    return w;
}

// Numeric json value with the same rounding the text renderers show, so a
// parse of any format yields the same figures.
nlohmann::ordered_json json_value(const RowDef& def, double v) {
    if (def.integral)
        return uint64_t(v);
    return std::stod(format_sig4(v));
}

} // namespace

Stats finalize(const timing::CounterSet& counters, uint64_t cycles,
               uint64_t instret) {
    if (instret == 0)
        throw Error(ErrorKind::EmptyRun,
                    "cannot finalize statistics for a run that retired no "
                    "instructions");
    Stats s;
    s.counters = counters;
    s.itlb_misses = counters.itlb_total();
    s.dtlb_misses = counters.dtlb_total();
    s.icache_misses = counters.icache_total();
    s.dcache_misses = counters.dcache_total();
    s.cycles = cycles;
    s.instret = instret;
    s.cpi = double(cycles) / double(instret);
    s.ipc = double(instret) / double(cycles);
    return s;
}

Stats finalize(const timing::TimingResult& result) {
    return finalize(result.counters, result.cycles, result.instret);
}

std::string format_sig4(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", value);
    std::string s = buf;
    if (s.find('e') == std::string::npos && s.find('E') == std::string::npos)
        return s;
    // Keep large/small magnitudes in plain decimal notation.
    double mag = std::fabs(value);
    int exp10 = (mag == 0.0) ? 0 : int(std::floor(std::log10(mag)));
    int decimals = std::max(0, 3 - exp10);
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string render(const Stats& s, Format fmt) {
    switch (fmt) {
    case Format::Table: {
        std::ostringstream out;
        size_t w = label_width();
        out << "Performance Statistics\n";
        for (const RowDef& d : kRows) {
            std::string label = d.label;
            label.resize(w, ' ');
            out << label << "  " << format_value(d, d.get(s)) << '\n';
        }
        return out.str();
    }
    case Format::Json: {
        nlohmann::ordered_json j;
        for (const RowDef& d : kRows)
            j[d.key] = json_value(d, d.get(s));
        return j.dump(2) + "\n";
    }
    case Format::Csv: {
        std::ostringstream out;
        out << "statistic,value\n";
        for (const RowDef& d : kRows)
            out << d.key << ',' << format_value(d, d.get(s)) << '\n';
        return out.str();
    }
    }
    throw Error(ErrorKind::Config, "unknown stats format");
}

OverheadReport compare(const Stats& n, const Stats& v) {
    OverheadReport rep;
    for (const RowDef& d : kRows) {
        OverheadRow row;
        row.key = d.key;
        row.label = d.label;
        row.n = d.get(n);
        row.v = d.get(v);
        row.integral = d.integral;
        if (row.n != 0.0)
            row.overhead = (row.v - row.n) / row.n * 100.0;
        if (row.v != 0.0)
            row.overhead_alt = (row.v - row.n) / row.v * 100.0;
        rep.rows.push_back(row);
    }
    return rep;
}

std::string render(const OverheadReport& rep, Format fmt, bool show_alt) {
    auto fmt_cell = [](const OverheadRow& row, double value) {
        if (row.integral) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%llu", (unsigned long long)(value));
            return std::string(buf);
        }
        return format_sig4(value);
    };
    auto fmt_pct = [](const std::optional<double>& p) {
        return p ? format_sig4(*p) : std::string("n/a");
    };

    switch (fmt) {
    case Format::Table: {
        std::ostringstream out;
        size_t w = 0;
        for (const OverheadRow& r : rep.rows)
            w = std::max(w, r.label.size());
        std::string head = "Performance Statistics";
        head.resize(w, ' ');
        out << head << "  " << "Without Virtualization (N)" << "  "
            << "With Virtualization (V)" << "  "
            << "Percentage Overhead Due to Virtualization (V-N)/N x 100 %";
        if (show_alt)
            out << "  " << "(V-N)/V x 100 %";
        out << '\n';
        for (const OverheadRow& r : rep.rows) {
            std::string label = r.label;
            label.resize(w, ' ');
            char nbuf[64], vbuf[64];
            std::snprintf(nbuf, sizeof nbuf, "%26s", fmt_cell(r, r.n).c_str());
            std::snprintf(vbuf, sizeof vbuf, "%23s", fmt_cell(r, r.v).c_str());
            out << label << "  " << nbuf << "  " << vbuf << "  "
                << fmt_pct(r.overhead);
            if (show_alt)
                out << "  " << fmt_pct(r.overhead_alt);
            out << '\n';
        }
        return out.str();
    }
    case Format::Json: {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const OverheadRow& r : rep.rows) {
            nlohmann::ordered_json j;
            j["key"] = r.key;
            j["label"] = r.label;
            if (r.integral) {
                j["n"] = uint64_t(r.n);
                j["v"] = uint64_t(r.v);
            } else {
                j["n"] = std::stod(format_sig4(r.n));
                j["v"] = std::stod(format_sig4(r.v));
            }
            if (r.overhead)
                j["overhead_pct"] = std::stod(format_sig4(*r.overhead));
            else
                j["overhead_pct"] = nullptr;
            if (show_alt) {
                if (r.overhead_alt)
                    j["overhead_alt_pct"] =
                        std::stod(format_sig4(*r.overhead_alt));
                else
                    j["overhead_alt_pct"] = nullptr;
            }
            rows.push_back(j);
        }
        nlohmann::ordered_json j;
        j["rows"] = rows;
        return j.dump(2) + "\n";
    }
    case Format::Csv: {
        std::ostringstream out;
        out << "statistic,n,v,overhead_pct";
        if (show_alt)
            out << ",overhead_alt_pct";
        out << '\n';
        for (const OverheadRow& r : rep.rows) {
            out << r.key << ',' << fmt_cell(r, r.n) << ',' << fmt_cell(r, r.v)
                << ',' << (r.overhead ? format_sig4(*r.overhead) : "");
            if (show_alt)
                out << ',' << (r.overhead_alt ? format_sig4(*r.overhead_alt)
                                              : "");
            out << '\n';
        }
        return out.str();
    }
    }
    throw Error(ErrorKind::Config, "unknown stats format");
}

} // namespace hvsim::stats
