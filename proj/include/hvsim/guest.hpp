#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hvsim/config.hpp"
#include "hvsim/functional.hpp"
#include "hvsim/image.hpp"
#include "hvsim/stats.hpp"

namespace hvsim::guest {

// Inputs for the built-in workloads. Values are limited to 0..99 (the guest
// programs print at most two decimal digits) and at most 32 elements so the
// array stays clear of the print buffer.
struct FixtureInputs {
    std::vector<uint32_t> values;
    uint32_t key = 0; // search only

    static FixtureInputs search_default();
    static FixtureInputs sort_default();
};

// A complete guest workload: assembly sources for the user program and the
// two handler layers, the initial data words, and the console output the
// program must produce.
struct Fixture {
    std::string name;
    std::string user_source;
    std::string os_source;  // VS-mode handler, used only when virtualized
    std::string hv_source;  // HS-mode handler, used in both configurations
    std::vector<uint32_t> data_words;
    uint32_t data_base = 0;
    std::string expected_console;
};

// Builds the named fixture ("search" or "sort") for the given inputs.
// expected_console comes from an independent native evaluation of the
// workload's semantics.
Fixture make_fixture(const std::string& name, const FixtureInputs& inputs,
                     const SimConfig& cfg);
Fixture make_fixture(const std::string& name, const SimConfig& cfg);

bool is_fixture_name(const std::string& name);
std::vector<std::string> fixture_names();

// The stock handler layers, also used for standalone user programs that do
// not bring their own: a pass-through guest OS and a hypervisor that
// services the write call at the configured console address.
std::string default_os_handler(const SimConfig& cfg);
std::string default_hv_handler(const SimConfig& cfg);

// Assembles and places a fixture, producing the ready-to-run entry state.
// The OS handler is placed only for virtualized configurations.
functional::MachineState build_fixture(const Fixture& fixture,
                                       const SimConfig& cfg);

// One directional expectation about virtualization overhead, checkable
// against a (non-virtualized, virtualized) pair of runs.
struct OverheadExpectation {
    std::string name;
    std::function<bool(const stats::Stats& n, const stats::Stats& v)> holds;
};

// The property set every fixture must satisfy: virtualization retires more
// instructions, consumes more cycles, and lowers CPI.
std::vector<OverheadExpectation> expected_properties();

} // namespace hvsim::guest
