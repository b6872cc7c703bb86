#pragma once

#include <stdexcept>
#include <string>

namespace hvsim {

// Failure classes, each mapped to a distinct process exit status by the CLI.
enum class ErrorKind {
    Config,          // bad configuration file or parameter
    Asm,             // assembly source error
    Elf,             // malformed ELF input
    Image,           // memory-image layout violation
    Program,         // guest program fault (illegal instruction, bad fetch, ...)
    LimitExhausted,  // instruction budget ran out before the exit call
    UnmappedPage,    // timing-side translation hit an invalid PTE
    TruncatedStream, // trace channel closed before an exit record
    Trace,           // malformed trace line
    EmptyRun,        // statistics requested for a run with no instructions
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace hvsim
