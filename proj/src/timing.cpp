#include "hvsim/timing.hpp"

#include <bit>
#include <cstdio>
#include <optional>
#include <ostream>

#include "hvsim/error.hpp"

namespace hvsim::timing {

namespace {

std::string fmt_va(uint32_t va) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", va);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// CacheModel

CacheModel::CacheModel(uint32_t blocks)
    : tags_(blocks),
      index_mask_(blocks - 1),
      tag_shift_(2u + uint32_t(std::countr_zero(blocks))) {
    if (blocks == 0 || !std::has_single_bit(blocks))
        throw Error(ErrorKind::Config, "cache block count must be a power of two");
}

uint32_t CacheModel::index_of(uint32_t pa) const { return (pa >> 2) & index_mask_; }
uint32_t CacheModel::tag_of(uint32_t pa) const { return pa >> tag_shift_; }

bool CacheModel::read(uint32_t pa) {
    Block& b = tags_[index_of(pa)];
    uint32_t tag = tag_of(pa);
    if (b.valid && b.tag == tag)
        return true;
    b.valid = true; // read misses allocate
    b.tag = tag;
    return false;
}

bool CacheModel::write(uint32_t pa) {
    Block& b = tags_[index_of(pa)];
    // Write-through: a hit refreshes the resident block (same tag, still
    // valid), a miss does not allocate. Either way memory is updated.
    return b.valid && b.tag == tag_of(pa);
}

bool CacheModel::probe(uint32_t pa) const {
    const Block& b = tags_[index_of(pa)];
    return b.valid && b.tag == tag_of(pa);
}

void CacheModel::fill(uint32_t pa) {
    Block& b = tags_[index_of(pa)];
    b.valid = true;
    b.tag = tag_of(pa);
}

// ---------------------------------------------------------------------------
// TlbModel

TlbModel::TlbModel(uint32_t entries)
    : slots_(entries), index_mask_(entries - 1) {
    if (entries == 0 || !std::has_single_bit(entries))
        throw Error(ErrorKind::Config, "TLB entry count must be a power of two");
}

std::optional<uint32_t> TlbModel::lookup(uint32_t vpn) const {
    const Entry& e = slots_[vpn & index_mask_];
    if (e.valid && e.vpn == vpn)
        return e.ppn;
    return std::nullopt;
}

void TlbModel::refill(uint32_t vpn, uint32_t ppn) {
    Entry& e = slots_[vpn & index_mask_];
    e.valid = true;
    e.vpn = vpn;
    e.ppn = ppn;
}

// ---------------------------------------------------------------------------
// ShadowTranslator

ShadowTranslator::ShadowTranslator(const image::PageTableSet& tables,
                                   const image::RegionMap& rmap)
    : tables_(tables), rmap_(rmap), page_offset_bits_(rmap.page_offset_bits()) {}

ShadowTranslator::Walk ShadowTranslator::walk(uint32_t va) const {
    Region region = rmap_.region_of(va);
    const image::PageTable& table = tables_.for_region(region);
    uint32_t vpn = va >> page_offset_bits_;
    if (!table.covers(vpn))
        throw Error(ErrorKind::UnmappedPage,
                    "no page-table entry covers va " + fmt_va(va));
    Walk w;
    w.pte_hpa = table.pte_addr(vpn);
    uint32_t pte = table.ptes[vpn - table.first_vpn];
    if (pte & image::kPteValid)
        w.ppn = pte >> page_offset_bits_;
    return w;
}

// ---------------------------------------------------------------------------
// TimingState

TimingState::TimingState(const SimConfig& config,
                         const image::PageTableSet& tables,
                         const image::RegionMap& rmap)
    : icache(config.icache_blocks),
      dcache(config.dcache_blocks),
      itlb(config.itlb_entries),
      dtlb(config.dtlb_entries),
      shadow(tables, rmap),
      cfg(config) {}

// ---------------------------------------------------------------------------
// Timed translation and stage costs

TranslateResult translate_timed(TimingState& ts, uint32_t va,
                                AccessStage stage) {
    uint32_t pob = ts.shadow.page_offset_bits();
    uint32_t page_mask = (pob >= 32) ? 0xFFFFFFFFu : ((1u << pob) - 1u);
    uint32_t vpn = va >> pob;

    TlbModel& tlb = (stage == AccessStage::Fetch) ? ts.itlb : ts.dtlb;
    if (auto ppn = tlb.lookup(vpn))
        return {(*ppn << pob) | (va & page_mask), 0};

    switch (stage) {
    case AccessStage::Fetch: ++ts.counters.itlb_miss_if; break;
    case AccessStage::Load: ++ts.counters.dtlb_miss_load; break;
    case AccessStage::Store: ++ts.counters.dtlb_miss_store; break;
    }

    ShadowTranslator::Walk w = ts.shadow.walk(va);
    if (!w.ppn)
        throw Error(ErrorKind::UnmappedPage,
                    "page not mapped for va " + fmt_va(va));

    bool pte_hit = ts.dcache.read(w.pte_hpa);
    if (!pte_hit) {
        switch (stage) {
        case AccessStage::Fetch: ++ts.counters.dcache_pte_miss_if; break;
        case AccessStage::Load: ++ts.counters.dcache_pte_miss_load; break;
        case AccessStage::Store: ++ts.counters.dcache_pte_miss_store; break;
        }
    }
    tlb.refill(vpn, *w.ppn);

    uint32_t extra = pte_hit ? 1 : ts.cfg.dcache_pte_read_miss_penalty;
    return {(*w.ppn << pob) | (va & page_mask), extra};
}

uint64_t if_stage_cycles(TimingState& ts, const trace::TraceRecord& r) {
    TranslateResult t = translate_timed(ts, r.pc, AccessStage::Fetch);
    uint64_t cycles = 1 + t.extra_cycles;
    if (!ts.icache.read(t.hpa)) {
        ++ts.counters.icache_miss_if;
        cycles += ts.cfg.icache_read_miss_penalty;
    }
    return cycles;
}

uint64_t mem_stage_cycles(TimingState& ts, const trace::TraceRecord& r) {
    if (!r.load && !r.store)
        return 1;
    if (r.load) {
        TranslateResult t = translate_timed(ts, r.dva, AccessStage::Load);
        uint64_t cycles = 1 + t.extra_cycles;
        if (!ts.dcache.read(t.hpa)) {
            ++ts.counters.dcache_data_miss_load;
            cycles += ts.cfg.dcache_data_read_miss_penalty;
        }
        return cycles;
    }
    TranslateResult t = translate_timed(ts, r.dva, AccessStage::Store);
    if (!ts.dcache.write(t.hpa))
        ++ts.counters.dcache_data_miss_store;
    // Write-through: every store pays the memory write latency; a miss adds
    // nothing on top because the store does not allocate or refill.
    return uint64_t(t.extra_cycles) + ts.cfg.memory_write_cycles;
}

// ---------------------------------------------------------------------------
// PipelineSim

namespace {

// Sub-state of the instruction occupying a stage slot. IF and MEM interleave
// an optional PTE read (through the shared D-cache port) with their own
// access; ID/EX/WB just count configured stage cycles via `remaining`.
enum class Phase {
    Start,      // nothing begun yet
    Squashed,   // IF only: burned redirect cycle after a taken branch
    PteWait,    // wants the D-cache port for a PTE read
    PteBusy,    // PTE read in progress (holds the port)
    AccessWait, // IF: ready to read I-cache; MEM: wants the port for data
    AccessBusy, // main access in progress
    Counting,   // ID/EX/WB and plain MEM: cycle countdown
    Done,       // finished, waiting to advance
};

enum class PortOwner { None, IfStage, MemStage };

struct InFlight {
    trace::TraceRecord rec;
    Phase phase = Phase::Start;
    uint32_t remaining = 0;
    uint32_t vpn = 0;
    uint32_t ppn = 0;
    uint32_t pte_hpa = 0;
    uint32_t hpa = 0;
};

// The cycle-stepped engine behind PipelineSim::run. Slots are ordered
// youngest to oldest: IF, ID, EX, MEM, WB. Each cycle has a work phase
// (oldest stage first, so same-cycle D-cache contention resolves in MEM's
// favour) and a move phase (oldest first, so an instruction advances into a
// slot vacated in the same cycle).
class Engine {
public:
    Engine(TimingState& ts, const TimingOptions& opts)
        : ts_(ts),
          opts_(opts),
          fwd_(opts.forwarding),
          pob_(ts.shadow.page_offset_bits()),
          page_mask_((1u << pob_) - 1u) {}

    TimingResult run(trace::Source& source) {
        fill_if(source);
        while (slot_[IF] || slot_[ID] || slot_[EX] || slot_[MEM] || slot_[WB]) {
            ++cycle_;
            work_wb();
            work_mem();
            work_ex();
            work_id();
            work_if();
            move(source);
        }
        TimingResult result;
        result.counters = ts_.counters;
        result.cycles = cycle_;
        result.instret = instret_;
        return result;
    }

private:
    enum SlotIndex { IF = 0, ID = 1, EX = 2, MEM = 3, WB = 4 };

    // True when register r, read by an instruction in ID (branch/jump
    // sources) or about to enter EX (ALU/load/store address sources), can be
    // supplied next cycle. The nearest older producer decides:
    //   - still in EX: its result has not reached a pipeline latch;
    //   - in MEM: forwardable unless it is a load still fetching data;
    //   - in WB: forwardable from the MEM/WB latch.
    // Without forwarding the producer must have left the pipeline entirely.
    // The rule is evaluated against start-of-cycle residency for ID-stage
    // needs and post-advance residency for EX entry, which a single scan
    // provides because moves happen strictly after work.
    bool source_ready(uint8_t r) const {
        if (r == 0)
            return true;
        if (slot_[EX] && slot_[EX]->rec.rd == r)
            return false;
        if (slot_[MEM] && slot_[MEM]->rec.rd == r)
            return fwd_ && !slot_[MEM]->rec.load;
        if (slot_[WB] && slot_[WB]->rec.rd == r)
            return fwd_;
        return true;
    }

    // Operands consumed at EX entry: rs1 always, rs2 unless the instruction
    // is a store (whose data is consumed in MEM) . Control transfers consume
    // their sources in ID instead and never gate EX entry.
    bool ex_sources_ready(const trace::TraceRecord& rec) const {
        if (rec.is_control())
            return true;
        if (!source_ready(rec.rs1))
            return false;
        return rec.store || source_ready(rec.rs2);
    }

    bool id_sources_ready(const trace::TraceRecord& rec) const {
        return source_ready(rec.rs1) && source_ready(rec.rs2);
    }

    // A taken branch or jump, at the end of its deciding ID cycle, discards
    // the speculatively fetched successor. The same record is refetched from
    // scratch next cycle (the trace holds the correct path only); cache and
    // TLB effects of the abandoned fetch persist.
    void squash_if() {
        if (!slot_[IF])
            return;
        if (port_.owner == PortOwner::IfStage) {
            port_.owner = PortOwner::None;
            port_.release_pending = false;
        }
        InFlight fresh;
        fresh.rec = slot_[IF]->rec;
        fresh.phase = Phase::Squashed;
        *slot_[IF] = fresh;
    }

    void work_wb() {
        if (!slot_[WB])
            return;
        InFlight& f = *slot_[WB];
        if (f.remaining > 0 && --f.remaining == 0)
            f.phase = Phase::Done;
    }

    void work_ex() {
        if (!slot_[EX])
            return;
        InFlight& f = *slot_[EX];
        if (f.remaining > 0 && --f.remaining == 0)
            f.phase = Phase::Done;
    }

    void work_id() {
        if (!slot_[ID])
            return;
        InFlight& f = *slot_[ID];
        if (f.remaining == 0)
            return;
        // Branches and jumps resolve in ID; the deciding (final) ID cycle
        // waits until the sources are forwardable.
        if (f.remaining == 1 && f.rec.is_control() && !id_sources_ready(f.rec))
            return;
        if (--f.remaining == 0) {
            f.phase = Phase::Done;
            if (f.rec.taken_or_jump)
                squash_if();
        }
    }

    void work_mem() {
        if (!slot_[MEM])
            return;
        InFlight& f = *slot_[MEM];
        if (f.phase == Phase::Done)
            return;

        if (f.phase == Phase::Start) {
            if (!f.rec.load && !f.rec.store) {
                f.remaining = 1; // non-memory instructions pass through in one cycle
                f.phase = Phase::Counting;
            } else {
                // Store data is consumed here; without forwarding the store
                // waits until its rs2 producer has written the register file.
                if (!fwd_ && f.rec.store && f.rec.rs2 != 0 && slot_[WB] &&
                    slot_[WB]->rec.rd == f.rec.rs2)
                    return;
                f.vpn = f.rec.dva >> pob_;
                if (auto ppn = ts_.dtlb.lookup(f.vpn)) {
                    f.hpa = (*ppn << pob_) | (f.rec.dva & page_mask_);
                    f.phase = Phase::AccessWait;
                } else {
                    if (f.rec.load)
                        ++ts_.counters.dtlb_miss_load;
                    else
                        ++ts_.counters.dtlb_miss_store;
                    ShadowTranslator::Walk w = ts_.shadow.walk(f.rec.dva);
                    if (!w.ppn)
                        throw Error(ErrorKind::UnmappedPage,
                                    "page not mapped for va " + fmt_va(f.rec.dva));
                    f.pte_hpa = w.pte_hpa;
                    f.ppn = *w.ppn;
                    f.phase = Phase::PteWait;
                }
            }
        }

        if (f.phase == Phase::PteWait) {
            if (port_.owner != PortOwner::None)
                return; // port busy (necessarily IF): wait
            port_.owner = PortOwner::MemStage;
            bool hit = ts_.dcache.read(f.pte_hpa);
            if (!hit) {
                if (f.rec.load)
                    ++ts_.counters.dcache_pte_miss_load;
                else
                    ++ts_.counters.dcache_pte_miss_store;
            }
            ts_.dtlb.refill(f.vpn, f.ppn);
            f.hpa = (f.ppn << pob_) | (f.rec.dva & page_mask_);
            f.remaining = hit ? 1 : ts_.cfg.dcache_pte_read_miss_penalty;
            f.phase = Phase::PteBusy;
        }

        if (f.phase == Phase::PteBusy) {
            if (--f.remaining == 0) {
                port_.release_pending = true;
                f.phase = Phase::AccessWait; // data access starts next cycle
            }
            return;
        }

        if (f.phase == Phase::AccessWait) {
            if (port_.owner != PortOwner::None)
                return;
            port_.owner = PortOwner::MemStage;
            if (f.rec.load) {
                bool hit = ts_.dcache.read(f.hpa);
                if (!hit)
                    ++ts_.counters.dcache_data_miss_load;
                f.remaining =
                    hit ? 1 : 1 + ts_.cfg.dcache_data_read_miss_penalty;
            } else {
                if (!ts_.dcache.write(f.hpa))
                    ++ts_.counters.dcache_data_miss_store;
                f.remaining = ts_.cfg.memory_write_cycles;
            }
            f.phase = Phase::AccessBusy;
        }

        if (f.phase == Phase::AccessBusy || f.phase == Phase::Counting) {
            if (--f.remaining == 0) {
                if (port_.owner == PortOwner::MemStage)
                    port_.release_pending = true;
                f.phase = Phase::Done;
            }
            return;
        }
    }

    void work_if() {
        if (!slot_[IF])
            return;
        InFlight& f = *slot_[IF];
        if (f.phase == Phase::Done)
            return;
        if (f.phase == Phase::Squashed) {
            // Redirect published at the end of the squashing cycle; fetching
            // restarts next cycle.
            f.phase = Phase::Start;
            return;
        }

        if (f.phase == Phase::Start) {
            f.vpn = f.rec.pc >> pob_;
            if (auto ppn = ts_.itlb.lookup(f.vpn)) {
                f.hpa = (*ppn << pob_) | (f.rec.pc & page_mask_);
                f.phase = Phase::AccessWait;
            } else {
                ++ts_.counters.itlb_miss_if;
                ShadowTranslator::Walk w = ts_.shadow.walk(f.rec.pc);
                if (!w.ppn)
                    throw Error(ErrorKind::UnmappedPage,
                                "page not mapped for va " + fmt_va(f.rec.pc));
                f.pte_hpa = w.pte_hpa;
                f.ppn = *w.ppn;
                f.phase = Phase::PteWait;
            }
        }

        if (f.phase == Phase::PteWait) {
            if (port_.owner != PortOwner::None)
                return; // MEM owns or claimed the port this cycle: IF stalls
            port_.owner = PortOwner::IfStage;
            bool hit = ts_.dcache.read(f.pte_hpa);
            if (!hit)
                ++ts_.counters.dcache_pte_miss_if;
            ts_.itlb.refill(f.vpn, f.ppn);
            f.hpa = (f.ppn << pob_) | (f.rec.pc & page_mask_);
            f.remaining = hit ? 1 : ts_.cfg.dcache_pte_read_miss_penalty;
            f.phase = Phase::PteBusy;
        }

        if (f.phase == Phase::PteBusy) {
            if (--f.remaining == 0) {
                port_.release_pending = true;
                f.phase = Phase::AccessWait; // I-cache read starts next cycle
            }
            return;
        }

        if (f.phase == Phase::AccessWait) {
            bool hit = ts_.icache.read(f.hpa);
            if (!hit)
                ++ts_.counters.icache_miss_if;
            f.remaining = hit ? 1 : 1 + ts_.cfg.icache_read_miss_penalty;
            f.phase = Phase::AccessBusy;
        }

        if (f.phase == Phase::AccessBusy) {
            if (--f.remaining == 0)
                f.phase = Phase::Done;
            return;
        }
    }

    void move(trace::Source& source) {
        if (port_.release_pending) {
            port_.owner = PortOwner::None;
            port_.release_pending = false;
        }

        if (slot_[WB] && slot_[WB]->phase == Phase::Done) {
            ++instret_;
            if (opts_.retire_log)
                *opts_.retire_log << slot_[WB]->rec.instr_no << ' ' << cycle_
                                  << '\n';
            slot_[WB].reset();
        }
        if (slot_[MEM] && slot_[MEM]->phase == Phase::Done && !slot_[WB]) {
            slot_[WB] = std::move(slot_[MEM]);
            slot_[MEM].reset();
            slot_[WB]->phase = Phase::Counting;
            slot_[WB]->remaining = ts_.cfg.wb_stage_cycles;
        }
        if (slot_[EX] && slot_[EX]->phase == Phase::Done && !slot_[MEM]) {
            slot_[MEM] = std::move(slot_[EX]);
            slot_[EX].reset();
            slot_[MEM]->phase = Phase::Start;
            slot_[MEM]->remaining = 0;
        }
        if (slot_[ID] && slot_[ID]->phase == Phase::Done && !slot_[EX] &&
            ex_sources_ready(slot_[ID]->rec)) {
            slot_[EX] = std::move(slot_[ID]);
            slot_[ID].reset();
            slot_[EX]->phase = Phase::Counting;
            slot_[EX]->remaining = ts_.cfg.ex_stage_cycles;
        }
        if (slot_[IF] && slot_[IF]->phase == Phase::Done && !slot_[ID]) {
            slot_[ID] = std::move(slot_[IF]);
            slot_[IF].reset();
            slot_[ID]->phase = Phase::Counting;
            slot_[ID]->remaining = ts_.cfg.id_stage_cycles;
        }
        fill_if(source);
    }

    void fill_if(trace::Source& source) {
        if (slot_[IF] || stream_done_)
            return;
        std::optional<trace::TraceRecord> rec = source.next();
        if (!rec) {
            stream_done_ = true;
            return;
        }
        InFlight f;
        f.rec = *rec;
        f.phase = Phase::Start;
        slot_[IF] = f;
    }

    struct Port {
        PortOwner owner = PortOwner::None;
        bool release_pending = false;
    };

    TimingState& ts_;
    TimingOptions opts_;
    bool fwd_;
    uint32_t pob_;
    uint32_t page_mask_;
    std::optional<InFlight> slot_[5];
    Port port_;
    bool stream_done_ = false;
    uint64_t cycle_ = 0;
    uint64_t instret_ = 0;
};

} // namespace

PipelineSim::PipelineSim(TimingState& ts, const TimingOptions& opts)
    : ts_(ts), opts_(opts) {}

TimingResult PipelineSim::run(trace::Source& source) {
    Engine engine(ts_, opts_);
    return engine.run(source);
}

TimingResult simulate(trace::Source& source, const SimConfig& cfg,
                      const image::PageTableSet& tables,
                      const image::RegionMap& rmap, const TimingOptions& opts) {
    TimingState ts(cfg, tables, rmap);
    PipelineSim pipe(ts, opts);
    return pipe.run(source);
}

} // namespace hvsim::timing
