#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "hvsim/config.hpp"
#include "hvsim/error.hpp"
#include "hvsim/functional.hpp"
#include "hvsim/stats.hpp"

namespace hvsim::runner {

// Process exit statuses the CLI reports.
enum ExitStatus : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitProgram = 3,
    kExitLimit = 4,
    kExitTrace = 5,
};

ExitStatus status_for_error_kind(ErrorKind kind);

// Everything one run produces.
struct RunArtifacts {
    stats::Stats stats;
    std::string console;
    uint64_t trace_records = 0;
};

// Resolves cfg.program into a ready entry state. Accepts a built-in fixture
// name, an assembly file (.s/.asm), a static rv32 ELF executable, or a
// manifest file with "role = path [@ origin]" lines (roles: user, user_data,
// os, hv).
functional::MachineState load_program(const SimConfig& cfg);

// One full experiment: execution core on its own thread feeding the timing
// core through a bounded channel, then statistics. Honors cfg.trace_out,
// cfg.retire_log and cfg.max_instructions. Console bytes are returned, not
// printed. Raises Error on guest faults or exhausted budgets.
RunArtifacts run_experiment(const SimConfig& cfg);

// Timing-only replay of a saved trace file against the same configuration.
RunArtifacts replay_trace(const SimConfig& cfg, const std::string& trace_path);

// Runs cfg.program twice, non-virtualized then virtualized, and returns the
// overhead comparison.
struct CompareArtifacts {
    RunArtifacts nonvirt;
    RunArtifacts virt;
    stats::OverheadReport report;
};

CompareArtifacts run_compare(const SimConfig& cfg);

// Writes stats in the format implied by the path suffix (.json, .csv, else
// table text).
void write_stats_file(const stats::Stats& s, const std::string& path);

} // namespace hvsim::runner
