#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hvsim/timing.hpp"

namespace hvsim::stats {

// Final figures for one run: the nine raw counters, the four per-structure
// totals, and the cycle arithmetic.
struct Stats {
    timing::CounterSet counters;
    uint64_t itlb_misses = 0;
    uint64_t dtlb_misses = 0;
    uint64_t icache_misses = 0;
    uint64_t dcache_misses = 0;
    uint64_t cycles = 0;
    uint64_t instret = 0;
    double cpi = 0.0;
    double ipc = 0.0;

    bool operator==(const Stats&) const = default;
};

// Derives totals and CPI/IPC. Raises Error{EmptyRun} when instret is zero.
Stats finalize(const timing::TimingResult& result);
Stats finalize(const timing::CounterSet& counters, uint64_t cycles,
               uint64_t instret);

// Rounds to four significant digits, e.g. 72.88 or 0.01372.
std::string format_sig4(double value);

enum class Format { Table, Json, Csv };

std::string render(const Stats& s, Format fmt);

// Side-by-side non-virtualized / virtualized comparison. overhead is
// (v - n) / n * 100; overhead_alt is (v - n) / v * 100 and is emitted only
// when requested. Rows with n == 0 (or v == 0 for the alt form) leave the
// percentage empty.
struct OverheadRow {
    std::string key;    // machine-readable identifier
    std::string label;  // human-readable description
    double n = 0.0;
    double v = 0.0;
    bool integral = true;
    std::optional<double> overhead;
    std::optional<double> overhead_alt;
};

struct OverheadReport {
    std::vector<OverheadRow> rows;
};

OverheadReport compare(const Stats& n, const Stats& v);

std::string render(const OverheadReport& rep, Format fmt,
                   bool show_alt = false);

} // namespace hvsim::stats
