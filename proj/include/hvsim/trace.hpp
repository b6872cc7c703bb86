#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hvsim::trace {

// One retired instruction, as handed from the execution core to the timing
// core. pid and osid are carried for forward compatibility and are always
// zero in single-workload runs.
struct TraceRecord {
    uint64_t instr_no = 0;
    uint32_t pid = 0;
    uint32_t osid = 0;
    uint32_t pc = 0;
    uint32_t dva = 0;  // data virtual address; 0 unless load or store
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    uint8_t rd = 0;
    uint8_t v = 0;     // virtualization bit
    uint8_t prv = 0;   // privilege bits, 2 wide
    bool load = false;
    bool store = false;
    bool cond_branch = false;
    bool taken_or_jump = false; // taken conditional branch, jal or jalr
    bool exit_call = false;     // final record of a complete run

    bool is_control() const { return cond_branch || taken_or_jump; }
    bool operator==(const TraceRecord&) const = default;
};

// Text form, one record per line, eleven space-separated fields:
//   instr_no pid osid pc dva rs1 rs2 rd v prv flags
// pc/dva are 8-digit lower-case hex, prv is 2 binary digits, flags is 5
// binary digits in the order load, store, cond_branch, taken_or_jump,
// exit_call. Everything else is decimal.
std::string serialize(const TraceRecord& r);

// Inverse of serialize. Raises Error{Trace} on the wrong field count, a
// non-numeric field, out-of-range register/mode bits, or a nonzero dva on a
// record that neither loads nor stores.
TraceRecord parse(std::string_view line);

// Bounded single-producer single-consumer queue connecting the execution
// core to the timing core. push blocks when full, pop blocks when empty.
// After close(), a drained consumer sees end-of-stream if the last record
// carried the exit flag and Error{TruncatedStream} otherwise.
class Channel {
public:
    explicit Channel(size_t capacity);

    void push(const TraceRecord& r);
    void close();
    std::optional<TraceRecord> pop();

    size_t capacity() const { return capacity_; }

private:
    std::mutex mu_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<TraceRecord> queue_;
    size_t capacity_;
    bool closed_ = false;
    bool exit_delivered_ = false; // consumer already popped the exit record
};

class Producer {
public:
    Producer() = default;
    explicit Producer(std::shared_ptr<Channel> ch) : ch_(std::move(ch)) {}
    void push(const TraceRecord& r) { ch_->push(r); }
    void close() { ch_->close(); }

private:
    std::shared_ptr<Channel> ch_;
};

class Consumer {
public:
    Consumer() = default;
    explicit Consumer(std::shared_ptr<Channel> ch) : ch_(std::move(ch)) {}
    std::optional<TraceRecord> pop() { return ch_->pop(); }

private:
    std::shared_ptr<Channel> ch_;
};

struct ChannelEnds {
    Producer producer;
    Consumer consumer;
};

ChannelEnds make_channel(size_t capacity);

// Record source abstraction consumed by the timing core: live channel,
// trace file, or an in-memory vector for tests.
class Source {
public:
    virtual ~Source() = default;
    virtual std::optional<TraceRecord> next() = 0;
};

class ChannelSource : public Source {
public:
    explicit ChannelSource(Consumer consumer) : consumer_(std::move(consumer)) {}
    std::optional<TraceRecord> next() override { return consumer_.pop(); }

private:
    Consumer consumer_;
};

// Replays a saved trace. A clean end-of-file counts as end-of-stream; any
// record after one with the exit flag raises Error{Trace}.
class FileSource : public Source {
public:
    explicit FileSource(std::istream& in) : in_(in) {}
    std::optional<TraceRecord> next() override;

private:
    std::istream& in_;
    bool exit_seen_ = false;
    uint64_t line_no_ = 0;
};

class VectorSource : public Source {
public:
    explicit VectorSource(std::vector<TraceRecord> records)
        : records_(std::move(records)) {}
    std::optional<TraceRecord> next() override {
        if (pos_ >= records_.size()) return std::nullopt;
        return records_[pos_++];
    }

private:
    std::vector<TraceRecord> records_;
    size_t pos_ = 0;
};

} // namespace hvsim::trace
