#include <fstream>

#include "doctest.h"
#include "harness.hpp"
#include "oracles.hpp"
#include "memplan/error.hpp"
#include "memplan/replacement/planner.hpp"
#include "memplan/replacement/trace.hpp"

using namespace memplan;
using namespace memplan::replacement;
using bytecode::Instruction;
using bytecode::OpCode;
using memplan::testing::Rng;
using memplan::testing::ScratchDir;

namespace {
    const std::vector<PageNumber> classic = {1, 2, 3, 4, 1, 2, 5, 1, 2, 3, 4, 5};
    constexpr PageShift shift = 4;

    /* One Input per entry, each writing a full page. */
    std::string touch_program(const ScratchDir& dir, const std::vector<PageNumber>& pages) {
        std::vector<Instruction> body;
        for (PageNumber p : pages) {
            body.push_back(bytecode::make(OpCode::Input, 16, pg_addr(p, shift), {}));
        }
        bytecode::ProgramHeader h;
        h.page_shift = shift;
        const std::string path = dir.file("touch.virt");
        bytecode::write_program(path, h, body);
        return path;
    }

    std::vector<std::array<std::uint64_t, operand_slots>> read_annotations(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::vector<std::array<std::uint64_t, operand_slots>> out;
        std::array<std::uint64_t, operand_slots> rec;
        while (in.read(reinterpret_cast<char*>(rec.data()), sizeof(rec))) {
            out.push_back(rec);
        }
        return out;
    }

    std::uint64_t count_op(const std::string& path, OpCode op) {
        auto body = bytecode::read_all(path).second;
        return std::count_if(body.begin(), body.end(), [op](const Instruction& i) { return i.op == op; });
    }
}

TEST_CASE("next-use annotation") {
    ScratchDir dir;
    auto next = [&](const std::vector<PageNumber>& pages) {
        const std::string v = touch_program(dir, pages);
        annotate(v, dir.file("a.ann"));
        std::vector<std::uint64_t> out;
        for (const auto& rec : read_annotations(dir.file("a.ann"))) {
            out.push_back(rec[0]);
        }
        return out;
    };
    CHECK(next({1, 2, 1, 3}) == std::vector<std::uint64_t>{2, never, never, never});
    CHECK(next({7}) == std::vector<std::uint64_t>{never});
    CHECK(next({4, 4, 4}) == std::vector<std::uint64_t>{1, 2, never});
}

TEST_CASE("classic trace") {
    CHECK(plan_trace(reads(classic), 3, Policy::Min).swap_ins == 7);
    CHECK(plan_trace(reads(classic), 3, Policy::Lru).swap_ins == 10);
    CHECK(plan_trace(reads(classic), 3, Policy::Fifo).swap_ins == 9);
    CHECK(memplan::testing::lru_faults(classic, 3) == 10);
    CHECK(memplan::testing::fifo_faults(classic, 3) == 9);
    CHECK(brute_force_min(reads(classic), 3).min_swap_ins == 7);
    CHECK(memplan::testing::exhaustive_min(reads(classic), 3).swap_ins == 7);
    CHECK(plan_trace(reads(classic), 3, Policy::Min).swap_outs == 0);
}

TEST_CASE("brute force examples and bounds") {
    CHECK(brute_force_min(reads({1, 2, 3, 1, 2, 3}), 2).min_swap_ins == 4);

    std::vector<TraceAccess> writes;
    for (PageNumber p : {1, 2, 3, 1, 2, 3}) {
        writes.push_back({p, true});
    }
    auto bf = brute_force_min(writes, 2);
    auto ex = memplan::testing::exhaustive_min(writes, 2);
    CHECK(bf.min_swap_ins == ex.swap_ins);
    CHECK(bf.min_total_swaps == ex.total_swaps);
    CHECK(bf.min_total_swaps > bf.min_swap_ins);

    CHECK_THROWS_AS(brute_force_min(reads(std::vector<PageNumber>(25, 1)), 2), SpecError);
    CHECK_THROWS_AS(brute_force_min(reads({1, 2, 3, 4, 5, 6, 7, 8, 9}), 2), SpecError);
    CHECK_THROWS_AS(brute_force_min(reads({1, 2}), 5), SpecError);
}

TEST_CASE("sequential scans miss on every page") {
    for (std::uint64_t t : {1, 2, 3, 4}) {
        std::vector<PageNumber> scan;
        for (PageNumber p = 0; p < 2 * t; p++) {
            scan.push_back(p);
        }
        CHECK(plan_trace(reads(scan), t, Policy::Min).swap_ins == 2 * t);
        CHECK(plan_trace(reads(scan), t, Policy::Lru).swap_ins == 2 * t);
    }
}

TEST_CASE("randomized traces against exhaustive search") {
    Rng rng(77);
    for (int trial = 0; trial < 300; trial++) {
        auto trace = memplan::testing::random_trace(rng, 24, 8, trial % 3 == 0 ? 0.0 : 0.4);
        const std::uint64_t t = memplan::testing::draw(rng, 1, 4);
        CAPTURE(trial);
        ReplacementStats min = plan_trace(trace, t, Policy::Min);
        auto bf = brute_force_min(trace, t);
        auto ex = memplan::testing::exhaustive_min(trace, t);
        CHECK(bf.min_swap_ins == ex.swap_ins);
        CHECK(bf.min_total_swaps == ex.total_swaps);
        CHECK(min.swap_ins == ex.swap_ins);
        CHECK(min.swap_ins + min.swap_outs <= 2 * ex.total_swaps);
        CHECK(min.peak_resident <= t);
        ReplacementStats lru = plan_trace(trace, t, Policy::Lru);
        ReplacementStats fifo = plan_trace(trace, t, Policy::Fifo);
        CHECK(min.swap_ins <= lru.swap_ins);
        CHECK(min.swap_ins <= fifo.swap_ins);
        std::vector<PageNumber> pages;
        for (const TraceAccess& a : trace) {
            pages.push_back(a.page);
        }
        CHECK(lru.swap_ins == memplan::testing::lru_faults(pages, t));
        CHECK(fifo.swap_ins == memplan::testing::fifo_faults(pages, t));
    }
}

TEST_CASE("planning programs") {
    ScratchDir dir;

    SUBCASE("fresh pages need no swap-in") {
        const std::string v = touch_program(dir, {1, 2, 3, 1, 2, 3});
        PlanResult small = plan_replacement(v, dir.file("p"), {3, Policy::Min});
        CHECK(small.stats.swap_ins == 0);
        CHECK(count_op(dir.file("p"), OpCode::IssueSwapIn) == 0);
        PlanResult unbounded = plan_replacement(v, dir.file("u"), {});
        CHECK(bytecode::read_all(dir.file("p")).second == bytecode::read_all(dir.file("u")).second);
        CHECK(unbounded.stats.swap_outs == 0);
    }

    SUBCASE("reuse after eviction swaps") {
        const std::string v = touch_program(dir, {1, 2, 3, 1, 2});
        PlanResult r = plan_replacement(v, dir.file("p"), {2, Policy::Min});
        CHECK(r.stats.swap_outs == 1);
        CHECK(r.stats.swap_ins == 1);
        CHECK(r.header.frame_count == 2);
        CHECK(count_op(dir.file("p"), OpCode::IssueSwapOut) == 1);
        CHECK(count_op(dir.file("p"), OpCode::IssueSwapIn) == 1);
    }

    SUBCASE("an instruction wider than the budget is infeasible") {
        bytecode::ProgramHeader h;
        h.page_shift = shift;
        std::vector<Instruction> body = {
            bytecode::make(OpCode::Input, 1, pg_addr(1, shift), {}),
            bytecode::make(OpCode::Input, 1, pg_addr(2, shift), {}),
            bytecode::make(OpCode::Input, 1, pg_addr(3, shift), {}),
            bytecode::make(OpCode::Mux, 1, pg_addr(4, shift), {pg_addr(1, shift), pg_addr(2, shift), pg_addr(3, shift)}),
        };
        bytecode::write_program(dir.file("mux.virt"), h, body);
        CHECK_THROWS_AS(plan_replacement(dir.file("mux.virt"), dir.file("p"), {3, Policy::Min}), InfeasiblePlan);
        CHECK_NOTHROW(plan_replacement(dir.file("mux.virt"), dir.file("p"), {4, Policy::Min}));
    }
}

TEST_CASE("planned random programs replay and compute the same values") {
    Rng rng(4242);
    dsl::ProgramOptions o;
    o.page_shift = 6;
    for (int trial = 0; trial < 40; trial++) {
        ScratchDir dir;
        auto dag = memplan::testing::random_int_dag(rng, 30);
        const std::string expected = memplan::testing::int_output_text(dag, memplan::testing::evaluate_int(dag));
        const std::string input = memplan::testing::int_input_text(dag);
        const std::uint64_t frames = memplan::testing::draw(rng, 4, 8);
        auto run = memplan::testing::run_program(memplan::testing::int_program(dag), o, input, dir, frames);
        CAPTURE(trial);
        CHECK(run.replay.ok());
        CHECK(run.replay.peak_resident <= frames);
        CHECK(run.output == expected);
        CHECK(run.stats.swap_ins == run.plan.stats.swap_ins);
        CHECK(run.plan.stats.peak_resident <= frames);

        ScratchDir lru_dir;
        const std::string v = lru_dir.file("v");
        placement::run_placement(memplan::testing::int_program(dag), o, v);
        PlanResult lru = plan_replacement_baseline(v, lru_dir.file("l"), frames, Policy::Lru);
        PlanResult fifo = plan_replacement_baseline(v, lru_dir.file("f"), frames, Policy::Fifo);
        CHECK(run.plan.stats.swap_ins <= lru.stats.swap_ins);
        CHECK(run.plan.stats.swap_ins <= fifo.stats.swap_ins);
        CHECK(replay::replay(v, lru_dir.file("l")).ok());
        CHECK(replay::replay(v, lru_dir.file("f")).ok());
    }
}

TEST_CASE("plan statistics report") {
    ScratchDir dir;
    const std::string v = touch_program(dir, {1, 2, 3, 1, 2, 3});
    PlanResult r = plan_replacement(v, dir.file("p"), {2, Policy::Min});
    const std::string json = plan_stats_json(r);
    CHECK(json.find("\"swap_ins\"") != std::string::npos);
    CHECK(json.find("\"peak_resident\"") != std::string::npos);
}
