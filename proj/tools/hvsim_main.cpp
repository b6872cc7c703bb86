// hvsim: RV32I full-system simulator with a decoupled functional core and
// five-stage pipeline timing model, for measuring virtualization overhead.
//
// Subcommands:
//   run      execute a program (fixture, .s, .manifest or ELF) and report
//            statistics; console bytes go to standard output
//   compare  run the same program non-virtualized and virtualized and print
//            the overhead report
//   replay   timing-only pass over a previously recorded trace file
//   asm      assemble a fixture or source file and print the hex listing

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hvsim/asm_kit.hpp"
#include "hvsim/config.hpp"
#include "hvsim/error.hpp"
#include "hvsim/guest.hpp"
#include "hvsim/runner.hpp"
#include "hvsim/stats.hpp"

namespace {

using namespace hvsim;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets; // raw "key = value" overrides
    std::string mode;
    std::string program;
    std::string trace_out;
    std::string trace_in;
    std::string stats_out;
    std::string retire_log;
    uint64_t max_instructions = 0; // 0: keep configured value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path,
                    "Configuration file (default: $HVSIM_CONFIG if set)");
    cmd->add_option("--set", args.sets,
                    "Override one configuration key, e.g. --set "
                    "\"icache_blocks = 8192\"");
    cmd->add_option("--mode", args.mode, "virt or nonvirt")
        ->check(CLI::IsMember({"virt", "nonvirt"}));
    cmd->add_option("--program", args.program,
                    "Fixture name (search, sort), .s/.asm file, .manifest "
                    "file, or ELF executable");
    cmd->add_option("--max-instructions", args.max_instructions,
                    "Execution budget before the run is abandoned");
}

SimConfig build_config(const CommonArgs& args) {
    std::string text;
    std::string path = args.config_path;
    if (path.empty()) {
        const char* env = std::getenv("HVSIM_CONFIG");
        if (env && *env)
            path = env;
    }
    if (!path.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error(ErrorKind::Config,
                        "cannot read config file '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    for (const std::string& line : args.sets)
        text += "\n" + line;

    SimConfig cfg = parse_config(text);
    if (args.mode == "virt")
        cfg.virtualized = true;
    else if (args.mode == "nonvirt")
        cfg.virtualized = false;
    if (!args.program.empty())
        cfg.program = args.program;
    if (!args.trace_out.empty())
        cfg.trace_out = args.trace_out;
    if (!args.trace_in.empty())
        cfg.trace_in = args.trace_in;
    if (!args.stats_out.empty())
        cfg.stats_out = args.stats_out;
    if (!args.retire_log.empty())
        cfg.retire_log = args.retire_log;
    if (args.max_instructions != 0)
        cfg.max_instructions = args.max_instructions;
    validate_config(cfg);
    return cfg;
}

void emit_stats(const stats::Stats& s, const SimConfig& cfg) {
    if (!cfg.stats_out.empty())
        runner::write_stats_file(s, cfg.stats_out);
    else
        std::cerr << stats::render(s, stats::Format::Table);
}

int cmd_run(const CommonArgs& args, const std::string& image_dump) {
    SimConfig cfg = build_config(args);
    if (!cfg.trace_in.empty()) {
        runner::RunArtifacts art = runner::replay_trace(cfg, cfg.trace_in);
        emit_stats(art.stats, cfg);
        return runner::kExitOk;
    }
    if (!image_dump.empty()) {
        functional::MachineState state = runner::load_program(cfg);
        std::ofstream out(image_dump, std::ios::binary);
        if (!out)
            throw Error(ErrorKind::Config,
                        "cannot open image dump '" + image_dump + "'");
        state.mem.dump(out);
    }
    runner::RunArtifacts art = runner::run_experiment(cfg);
    std::cout << art.console << std::flush;
    emit_stats(art.stats, cfg);
    return runner::kExitOk;
}

int cmd_compare(const CommonArgs& args, bool show_alt) {
    SimConfig cfg = build_config(args);
    runner::CompareArtifacts art = runner::run_compare(cfg);
    std::cout << art.nonvirt.console << std::flush;

    if (!cfg.stats_out.empty()) {
        std::string ext;
        size_t dot = cfg.stats_out.rfind('.');
        if (dot != std::string::npos)
            ext = cfg.stats_out.substr(dot);
        stats::Format fmt = stats::Format::Table;
        if (ext == ".json")
            fmt = stats::Format::Json;
        else if (ext == ".csv")
            fmt = stats::Format::Csv;
        std::ofstream out(cfg.stats_out, std::ios::binary);
        if (!out)
            throw Error(ErrorKind::Config,
                        "cannot open stats output '" + cfg.stats_out + "'");
        out << stats::render(art.report, fmt, show_alt);
    } else {
        std::cerr << stats::render(art.report, stats::Format::Table, show_alt);
    }
    return runner::kExitOk;
}

int cmd_replay(const CommonArgs& args) {
    SimConfig cfg = build_config(args);
    if (cfg.trace_in.empty())
        throw Error(ErrorKind::Config, "replay needs --trace-in");
    runner::RunArtifacts art = runner::replay_trace(cfg, cfg.trace_in);
    emit_stats(art.stats, cfg);
    return runner::kExitOk;
}

int cmd_asm(const CommonArgs& args, const std::string& origin_text) {
    SimConfig cfg = build_config(args);
    if (cfg.program.empty())
        throw Error(ErrorKind::Config, "asm needs --program");

    if (guest::is_fixture_name(cfg.program)) {
        guest::Fixture fx = guest::make_fixture(cfg.program, cfg);
        struct Part {
            const char* title;
            const std::string* source;
            uint32_t origin;
        } parts[] = {
            {"user", &fx.user_source, cfg.user_entry},
            {"os", &fx.os_source, cfg.vstvec_reset},
            {"hv", &fx.hv_source, cfg.stvec_reset},
        };
        for (const Part& p : parts) {
            asm_kit::CodeBlob blob = asm_kit::assemble(*p.source, p.origin);
            std::cout << "# " << fx.name << " " << p.title << "\n"
                      << asm_kit::hex_listing(blob) << "\n";
        }
        return runner::kExitOk;
    }

    uint32_t origin = cfg.user_entry;
    if (!origin_text.empty()) {
        size_t used = 0;
        unsigned long v = std::stoul(origin_text, &used, 0);
        if (used != origin_text.size() || v > 0xFFFFFFFFul)
            throw Error(ErrorKind::Config,
                        "bad --origin '" + origin_text + "'");
        origin = uint32_t(v);
    }
    std::ifstream in(cfg.program, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Program,
                    "cannot read program file '" + cfg.program + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    asm_kit::CodeBlob blob = asm_kit::assemble(buf.str(), origin);
    std::cout << asm_kit::hex_listing(blob);
    return runner::kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hvsim: RV32I system simulator with virtualization timing"};
    app.require_subcommand(1);

    CommonArgs run_args, cmp_args, replay_args, asm_args;
    std::string image_dump, asm_origin;
    bool run_compare_flag = false;
    bool show_alt = false;

    CLI::App* run = app.add_subcommand("run", "Execute a program");
    add_common(run, run_args);
    run->add_option("--trace-out", run_args.trace_out,
                    "Record the instruction trace to this file");
    run->add_option("--trace-in", run_args.trace_in,
                    "Timing-only run over a recorded trace");
    run->add_option("--stats-out", run_args.stats_out,
                    "Statistics file (.json/.csv/.txt by extension)");
    run->add_option("--retire-log", run_args.retire_log,
                    "Per-instruction retirement log (instr_no cycle)");
    run->add_option("--image-dump", image_dump,
                    "Write the composed memory image to this file");
    run->add_flag("--compare", run_compare_flag,
                  "Run both modes and report overheads");

    CLI::App* cmp = app.add_subcommand(
        "compare", "Run non-virtualized and virtualized, report overhead");
    add_common(cmp, cmp_args);
    cmp->add_option("--trace-out", cmp_args.trace_out,
                    "Trace file stem; -nonvirt/-virt tags are inserted");
    cmp->add_option("--stats-out", cmp_args.stats_out,
                    "Report file (.json/.csv/.txt by extension)");
    cmp->add_option("--retire-log", cmp_args.retire_log,
                    "Retirement log stem; -nonvirt/-virt tags are inserted");
    cmp->add_flag("--show-alt", show_alt,
                  "Also print (V-N)/V x 100 percentages");

    CLI::App* replay = app.add_subcommand(
        "replay", "Timing-only pass over a recorded trace");
    add_common(replay, replay_args);
    replay->add_option("--trace-in", replay_args.trace_in,
                       "Recorded trace file")->required();
    replay->add_option("--stats-out", replay_args.stats_out,
                       "Statistics file (.json/.csv/.txt by extension)");
    replay->add_option("--retire-log", replay_args.retire_log,
                       "Per-instruction retirement log (instr_no cycle)");

    CLI::App* asmc = app.add_subcommand(
        "asm", "Assemble a fixture or source file and print the listing");
    add_common(asmc, asm_args);
    asmc->add_option("--origin", asm_origin,
                     "Load address for plain source files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (run_compare_flag)
                return cmd_compare(run_args, false);
            return cmd_run(run_args, image_dump);
        }
        if (cmp->parsed())
            return cmd_compare(cmp_args, show_alt);
        if (replay->parsed())
            return cmd_replay(replay_args);
        if (asmc->parsed())
            return cmd_asm(asm_args, asm_origin);
        std::cerr << "error: no subcommand\n";
        return runner::kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runner::status_for_error_kind(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runner::kExitUsage;
    }
}
