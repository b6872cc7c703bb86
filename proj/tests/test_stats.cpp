#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hvsim/error.hpp"
#include "hvsim/stats.hpp"

using namespace hvsim;
using namespace hvsim::stats;

namespace {

// The fixed report schema, pinned verbatim: key order and label text are
// load-bearing for anyone scraping the output.
const std::vector<std::pair<std::string, std::string>> kSchema = {
    {"itlb_miss_if", "Number of I-TLB misses while reading PTE in IF stage"},
    {"icache_miss_if",
     "Number of I-cache misses while reading instruction in IF stage"},
    {"dcache_pte_miss_if",
     "Number of D-cache misses while reading PTE in IF stage"},
    {"dtlb_miss_load",
     "Number of D-TLB misses while reading PTE in MEM stage during load"},
    {"dcache_data_miss_load",
     "Number of D-cache misses while reading data in MEM stage during load"},
    {"dcache_pte_miss_load",
     "Number of D-cache misses while reading PTE in MEM stage during load"},
    {"dtlb_miss_store",
     "Number of D-TLB misses while reading PTE in MEM stage during store"},
    {"dcache_data_miss_store",
     "Number of D-cache misses while writing data in MEM stage during store"},
    {"dcache_pte_miss_store",
     "Number of D-cache misses while reading PTE in MEM stage during store"},
    {"itlb_misses", "Total number of I-TLB misses"},
    {"icache_misses", "Total number of I-cache misses"},
    {"dtlb_misses", "Total number of D-TLB misses"},
    {"dcache_misses", "Total number of D-cache misses"},
    {"cycles", "Clock cycle count"},
    {"instret", "Number of dynamic instructions executed (simulated)"},
    {"cpi", "Cycles per instruction (CPI)"},
    {"ipc", "Instructions per cycle (IPC)"},
};

timing::CounterSet distinct_counters() {
    timing::CounterSet c;
    c.itlb_miss_if = 1;
    c.icache_miss_if = 2;
    c.dcache_pte_miss_if = 3;
    c.dtlb_miss_load = 4;
    c.dcache_data_miss_load = 5;
    c.dcache_pte_miss_load = 6;
    c.dtlb_miss_store = 7;
    c.dcache_data_miss_store = 8;
    c.dcache_pte_miss_store = 9;
    return c;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            out.push_back(text.substr(pos));
            break;
        }
        out.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

// The table renderer pads labels, so the value is the text after the last
// space (values themselves never contain spaces).
std::string last_field(const std::string& line) {
    size_t sp = line.rfind(' ');
    return sp == std::string::npos ? line : line.substr(sp + 1);
}

} // namespace

TEST_CASE("format_sig4 keeps four significant digits in plain decimal") {
    CHECK(format_sig4(72.87807606263982) == "72.88");
    CHECK(format_sig4(0.013721624100809) == "0.01372");
    CHECK(format_sig4(29.531588447653429) == "29.53");
    CHECK(format_sig4(6.040268456375839) == "6.04");
    CHECK(format_sig4(5.6962025316455698) == "5.696");
    CHECK(format_sig4(0.0) == "0");
    CHECK(format_sig4(1.0) == "1");
    CHECK(format_sig4(2.5) == "2.5");
    CHECK(format_sig4(100.0) == "100");
    CHECK(format_sig4(-6.04) == "-6.04");
    // Magnitudes %g would print in scientific notation stay plain decimal.
    CHECK(format_sig4(123456.0) == "123456");
    CHECK(format_sig4(99999.0) == "99999");
    CHECK(format_sig4(0.00001234) == "0.00001234");
}

TEST_CASE("finalize derives totals and both rates") {
    auto s = finalize(distinct_counters(), 65153, 894);
    CHECK(s.itlb_misses == 1);
    CHECK(s.icache_misses == 2);
    CHECK(s.dtlb_misses == 4 + 7);
    CHECK(s.dcache_misses == 3 + 5 + 6 + 8 + 9);
    CHECK(s.cycles == 65153);
    CHECK(s.instret == 894);
    CHECK(format_sig4(s.cpi) == "72.88");
    CHECK(format_sig4(s.ipc) == "0.01372");
    CHECK(s.cpi * s.ipc == doctest::Approx(1.0));

    auto t = finalize(distinct_counters(), 98163, 3324);
    CHECK(format_sig4(t.cpi) == "29.53");
    CHECK(format_sig4(t.ipc) == "0.03386");

    // The TimingResult overload is the same computation.
    timing::TimingResult tr;
    tr.counters = distinct_counters();
    tr.cycles = 65153;
    tr.instret = 894;
    CHECK(finalize(tr) == s);
}

TEST_CASE("finalize refuses a run that retired nothing") {
    CHECK_THROWS_AS((void)finalize(timing::CounterSet{}, 123, 0), Error);
    try {
        (void)finalize(timing::TimingResult{});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyRun);
    }
}

TEST_CASE("stats equality is field-wise") {
    auto a = finalize(distinct_counters(), 65153, 894);
    auto b = finalize(distinct_counters(), 65153, 894);
    CHECK(a == b);
    b.cycles += 1;
    CHECK(!(a == b));
}

TEST_CASE("table render: header plus one labelled row per statistic") {
    auto s = finalize(distinct_counters(), 65153, 894);
    auto lines = lines_of(render(s, Format::Table));
    REQUIRE(lines.size() == 1 + kSchema.size());
    CHECK(lines[0] == "Performance Statistics");

    const std::vector<std::string> expect = {
        "1", "2", "3", "4", "5", "6", "7", "8", "9",
        "1", "2", "11", "31", "65153", "894", "72.88", "0.01372"};
    for (size_t i = 0; i < kSchema.size(); ++i) {
        INFO("row ", i, ": ", lines[i + 1]);
        CHECK(lines[i + 1].rfind(kSchema[i].second, 0) == 0);
        CHECK(last_field(lines[i + 1]) == expect[i]);
    }
}

TEST_CASE("json render parses back with the printed rounding") {
    auto s = finalize(distinct_counters(), 65153, 894);
    auto j = nlohmann::ordered_json::parse(render(s, Format::Json));
    REQUIRE(j.size() == kSchema.size());
    // Key order matches the schema.
    size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i)
        CHECK(it.key() == kSchema[i].first);
    CHECK(j["cycles"].get<uint64_t>() == 65153);
    CHECK(j["instret"].get<uint64_t>() == 894);
    CHECK(j["dcache_misses"].get<uint64_t>() == 31);
    CHECK(j["cpi"].get<double>() == 72.88);
    CHECK(j["ipc"].get<double>() == 0.01372);
}

TEST_CASE("csv render: one key,value line per statistic") {
    auto s = finalize(distinct_counters(), 65153, 894);
    auto lines = lines_of(render(s, Format::Csv));
    REQUIRE(lines.size() == 1 + kSchema.size());
    CHECK(lines[0] == "statistic,value");
    const std::vector<std::string> expect = {
        "1", "2", "3", "4", "5", "6", "7", "8", "9",
        "1", "2", "11", "31", "65153", "894", "72.88", "0.01372"};
    for (size_t i = 0; i < kSchema.size(); ++i)
        CHECK(lines[i + 1] == kSchema[i].first + "," + expect[i]);
}

TEST_CASE("compare computes (v-n)/n and the alternative (v-n)/v") {
    auto cn = distinct_counters();
    cn.itlb_miss_if = 0; // forces an undefined primary percentage
    auto cv = distinct_counters();
    cv.itlb_miss_if = 5;
    cv.dcache_pte_miss_store = 9;

    auto n = finalize(cn, 25659, 894);
    auto v = finalize(cv, 32068, 948);
    auto rep = compare(n, v);
    REQUIRE(rep.rows.size() == kSchema.size());

    for (size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].key == kSchema[i].first);
        CHECK(rep.rows[i].label == kSchema[i].second);
    }

    const OverheadRow* instret = nullptr;
    const OverheadRow* itlb = nullptr;
    for (const auto& r : rep.rows) {
        if (r.key == "instret") instret = &r;
        if (r.key == "itlb_miss_if") itlb = &r;
    }
    REQUIRE(instret != nullptr);
    CHECK(instret->n == 894.0);
    CHECK(instret->v == 948.0);
    REQUIRE(instret->overhead.has_value());
    CHECK(format_sig4(*instret->overhead) == "6.04");
    REQUIRE(instret->overhead_alt.has_value());
    CHECK(format_sig4(*instret->overhead_alt) == "5.696");

    // n == 0: the primary percentage is undefined, the alt form still works.
    REQUIRE(itlb != nullptr);
    CHECK(!itlb->overhead.has_value());
    REQUIRE(itlb->overhead_alt.has_value());
    CHECK(*itlb->overhead_alt == 100.0);

    // Both zero: neither form is defined.
    auto zn = finalize(timing::CounterSet{}, 10, 5);
    auto rep0 = compare(zn, zn);
    for (const auto& r : rep0.rows) {
        if (r.key == "itlb_miss_if") {
            CHECK(!r.overhead.has_value());
            CHECK(!r.overhead_alt.has_value());
        }
        if (r.key == "cycles") {
            REQUIRE(r.overhead.has_value());
            CHECK(*r.overhead == 0.0);
        }
    }
}

TEST_CASE("comparison table: primary percentage only unless asked") {
    auto cn = distinct_counters();
    cn.itlb_miss_if = 0;
    auto n = finalize(cn, 25659, 894);
    auto v = finalize(distinct_counters(), 32068, 948);
    auto rep = compare(n, v);

    std::string plain = render(rep, Format::Table, false);
    auto plain_lines = lines_of(plain);
    REQUIRE(plain_lines.size() == 1 + kSchema.size());
    CHECK(plain_lines[0].find("Performance Statistics") == 0);
    CHECK(plain_lines[0].find("Without Virtualization (N)") !=
          std::string::npos);
    CHECK(plain_lines[0].find("With Virtualization (V)") != std::string::npos);
    CHECK(plain_lines[0].find(
              "Percentage Overhead Due to Virtualization (V-N)/N x 100 %") !=
          std::string::npos);
    CHECK(plain_lines[0].find("(V-N)/V") == std::string::npos);
    // The undefined percentage renders as n/a.
    CHECK(last_field(plain_lines[1]) == "n/a");
    // instret row: 894, 948, 6.04.
    const std::string& irow = plain_lines[15];
    CHECK(irow.rfind("Number of dynamic instructions executed (simulated)",
                     0) == 0);
    CHECK(irow.find(" 894 ") != std::string::npos);
    CHECK(irow.find(" 948 ") != std::string::npos);
    CHECK(last_field(irow) == "6.04");

    std::string alt = render(rep, Format::Table, true);
    CHECK(lines_of(alt)[0].find("(V-N)/V x 100 %") != std::string::npos);
    CHECK(last_field(lines_of(alt)[15]) == "5.696");
}

TEST_CASE("comparison csv and json carry the same figures") {
    auto cn = distinct_counters();
    cn.itlb_miss_if = 0;
    auto n = finalize(cn, 25659, 894);
    auto v = finalize(distinct_counters(), 32068, 948);
    auto rep = compare(n, v);

    auto csv = lines_of(render(rep, Format::Csv, false));
    REQUIRE(csv.size() == 1 + kSchema.size());
    CHECK(csv[0] == "statistic,n,v,overhead_pct");
    CHECK(csv[1] == "itlb_miss_if,0,1,"); // undefined -> empty field
    CHECK(csv[15] == "instret,894,948,6.04");

    auto csv_alt = lines_of(render(rep, Format::Csv, true));
    CHECK(csv_alt[0] == "statistic,n,v,overhead_pct,overhead_alt_pct");
    CHECK(csv_alt[15] == "instret,894,948,6.04,5.696");

    auto j = nlohmann::ordered_json::parse(render(rep, Format::Json, false));
    REQUIRE(j["rows"].size() == kSchema.size());
    CHECK(j["rows"][0]["key"] == "itlb_miss_if");
    CHECK(j["rows"][0]["overhead_pct"].is_null());
    CHECK(!j["rows"][0].contains("overhead_alt_pct"));
    CHECK(j["rows"][14]["key"] == "instret");
    CHECK(j["rows"][14]["n"].get<uint64_t>() == 894);
    CHECK(j["rows"][14]["v"].get<uint64_t>() == 948);
    CHECK(j["rows"][14]["overhead_pct"].get<double>() == 6.04);

    auto ja = nlohmann::ordered_json::parse(render(rep, Format::Json, true));
    CHECK(ja["rows"][14]["overhead_alt_pct"].get<double>() == 5.696);
}
