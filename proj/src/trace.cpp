#include "hvsim/trace.hpp"

#include <cstdio>
#include <istream>

#include "hvsim/config.hpp"
#include "hvsim/error.hpp"

namespace hvsim::trace {

std::string serialize(const TraceRecord& r) {
    char buf[96];
    char flags[6] = {
        r.load ? '1' : '0',          r.store ? '1' : '0',
        r.cond_branch ? '1' : '0',   r.taken_or_jump ? '1' : '0',
        r.exit_call ? '1' : '0',     0,
    };
    char prv[3] = {char('0' + ((r.prv >> 1) & 1)), char('0' + (r.prv & 1)), 0};
    std::snprintf(buf, sizeof buf, "%llu %u %u %08x %08x %u %u %u %u %s %s",
                  (unsigned long long)r.instr_no, r.pid, r.osid, r.pc, r.dva,
                  r.rs1, r.rs2, r.rd, r.v, prv, flags);
    return buf;
}

namespace {

[[noreturn]] void trace_fail(const std::string& what) {
    throw Error(ErrorKind::Trace, "trace record: " + what);
}

bool split_fields(std::string_view line, std::string_view out[11]) {
    size_t n = 0;
    size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        if (pos >= line.size()) break;
        size_t end = pos;
        while (end < line.size() && line[end] != ' ') ++end;
        if (n == 11) return false; // too many fields
        out[n++] = line.substr(pos, end - pos);
        pos = end;
    }
    return n == 11;
}

uint64_t parse_dec(std::string_view s, const char* what) {
    if (s.empty()) trace_fail(std::string("empty ") + what);
    uint64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9')
            trace_fail(std::string("non-numeric ") + what + " '" +
                       std::string(s) + "'");
        v = v * 10 + uint64_t(c - '0');
        if (v > UINT64_MAX / 2) trace_fail(std::string(what) + " overflows");
    }
    return v;
}

uint32_t parse_hex32(std::string_view s, const char* what) {
    if (s.size() != 8)
        trace_fail(std::string(what) + " must be 8 hex digits");
    uint32_t v = 0;
    for (char c : s) {
        uint32_t digit;
        if (c >= '0' && c <= '9') digit = uint32_t(c - '0');
        else if (c >= 'a' && c <= 'f') digit = uint32_t(c - 'a' + 10);
        else trace_fail(std::string("non-numeric ") + what + " '" +
                        std::string(s) + "'");
        v = v << 4 | digit;
    }
    return v;
}

uint32_t parse_bits(std::string_view s, size_t width, const char* what) {
    if (s.size() != width)
        trace_fail(std::string(what) + " must be " + std::to_string(width) +
                   " binary digits");
    uint32_t v = 0;
    for (char c : s) {
        if (c != '0' && c != '1')
            trace_fail(std::string("non-numeric ") + what + " '" +
                       std::string(s) + "'");
        v = v << 1 | uint32_t(c - '0');
    }
    return v;
}

} // namespace

TraceRecord parse(std::string_view line) {
    std::string_view f[11];
    if (!split_fields(line, f))
        trace_fail("expected 11 fields in '" + std::string(line) + "'");

    TraceRecord r;
    r.instr_no = parse_dec(f[0], "instr_no");
    uint64_t pid = parse_dec(f[1], "pid");
    uint64_t osid = parse_dec(f[2], "osid");
    if (pid > UINT32_MAX || osid > UINT32_MAX)
        trace_fail("pid/osid out of range");
    r.pid = uint32_t(pid);
    r.osid = uint32_t(osid);
    r.pc = parse_hex32(f[3], "pc");
    r.dva = parse_hex32(f[4], "dva");
    uint64_t rs1 = parse_dec(f[5], "rs1");
    uint64_t rs2 = parse_dec(f[6], "rs2");
    uint64_t rd = parse_dec(f[7], "rd");
    if (rs1 > 31 || rs2 > 31 || rd > 31)
        trace_fail("register index out of range");
    r.rs1 = uint8_t(rs1);
    r.rs2 = uint8_t(rs2);
    r.rd = uint8_t(rd);
    uint64_t v = parse_dec(f[8], "v");
    if (v > 1) trace_fail("v must be 0 or 1");
    r.v = uint8_t(v);
    r.prv = uint8_t(parse_bits(f[9], 2, "prv"));
    if (!mode_bits_legal(r.v, r.prv)) trace_fail("illegal mode bits");
    uint32_t flags = parse_bits(f[10], 5, "flags");
    r.load = flags & 0x10;
    r.store = flags & 0x08;
    r.cond_branch = flags & 0x04;
    r.taken_or_jump = flags & 0x02;
    r.exit_call = flags & 0x01;

    if (r.load && r.store) trace_fail("record both loads and stores");
    if (r.dva != 0 && !r.load && !r.store)
        trace_fail("nonzero dva without a load or store flag");
    return r;
}

Channel::Channel(size_t capacity) : capacity_(capacity) {
    if (capacity == 0)
        throw Error(ErrorKind::Config, "channel capacity must be nonzero");
}

void Channel::push(const TraceRecord& r) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return queue_.size() < capacity_ || closed_; });
    if (closed_)
        throw Error(ErrorKind::TruncatedStream, "push on a closed channel");
    queue_.push_back(r);
    not_empty_.notify_one();
}

void Channel::close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
}

std::optional<TraceRecord> Channel::pop() {
    std::unique_lock lock(mu_);
    if (exit_delivered_) return std::nullopt;
    not_empty_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) {
        // Closed and drained without ever seeing the exit record.
        throw Error(ErrorKind::TruncatedStream,
                    "trace stream ended before an exit record");
    }
    TraceRecord r = queue_.front();
    queue_.pop_front();
    if (r.exit_call) exit_delivered_ = true;
    not_full_.notify_one();
    return r;
}

ChannelEnds make_channel(size_t capacity) {
    auto ch = std::make_shared<Channel>(capacity);
    return {Producer(ch), Consumer(ch)};
}

std::optional<TraceRecord> FileSource::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (line.empty()) continue;
        if (exit_seen_)
            throw Error(ErrorKind::Trace,
                        "trace line " + std::to_string(line_no_) +
                            ": record after the exit record");
        TraceRecord r = parse(line);
        if (r.exit_call) exit_seen_ = true;
        return r;
    }
    return std::nullopt;
}

} // namespace hvsim::trace
