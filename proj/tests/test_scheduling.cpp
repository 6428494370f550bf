#include <algorithm>
#include <map>

#include "doctest.h"
#include "harness.hpp"
#include "oracles.hpp"
#include "memplan/error.hpp"
#include "memplan/replacement/planner.hpp"
#include "memplan/scheduling/scheduler.hpp"

using namespace memplan;
using namespace memplan::scheduling;
using bytecode::Instruction;
using bytecode::OpCode;
using memplan::testing::Rng;
using memplan::testing::ScratchDir;

namespace {
    constexpr PageShift shift = 4;

    /* Plans a one-Input-per-page program with MIN over @p frames and schedules it. */
    std::vector<Instruction> scheduled(const ScratchDir& dir, const std::vector<PageNumber>& pages,
                                       std::uint64_t frames, SchedulerConfig cfg) {
        std::vector<Instruction> body;
        for (PageNumber p : pages) {
            body.push_back(bytecode::make(OpCode::Input, 16, pg_addr(p, shift), {}));
        }
        bytecode::ProgramHeader h;
        h.page_shift = shift;
        bytecode::write_program(dir.file("v"), h, body);
        replacement::plan_replacement(dir.file("v"), dir.file("p"), {frames, replacement::Policy::Min});
        schedule(dir.file("p"), dir.file("s"), cfg);
        auto [header, out] = bytecode::read_all(dir.file("s"));
        CHECK(header.prefetch_frames == cfg.prefetch_frames);
        CHECK(header.frame_count == frames);
        CHECK(replay::replay(dir.file("v"), dir.file("s")).ok());
        return out;
    }

    struct Placement {
        std::uint64_t protocol_index;
        Instruction inst;
    };

    /* Each directive tagged with the index of the next protocol instruction. */
    std::vector<Placement> directives(const std::vector<Instruction>& body) {
        std::vector<Placement> out;
        std::uint64_t k = 0;
        for (const Instruction& i : body) {
            if (bytecode::is_directive(i.op)) {
                out.push_back({k, i});
            } else {
                k++;
            }
        }
        return out;
    }

    std::vector<Placement> only(const std::vector<Placement>& ds, OpCode op) {
        std::vector<Placement> out;
        for (const Placement& p : ds) {
            if (p.inst.op == op) {
                out.push_back(p);
            }
        }
        return out;
    }
}

TEST_CASE("swap-ins move l instructions earlier") {
    ScratchDir dir;
    auto body = scheduled(dir, {1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 1}, 1, {3, 1});
    auto ds = directives(body);
    auto issues = only(ds, OpCode::IssueSwapIn);
    auto finishes = only(ds, OpCode::FinishSwapIn);
    REQUIRE(issues.size() == 1);
    REQUIRE(finishes.size() == 1);
    CHECK(issues[0].protocol_index == 7);
    CHECK(finishes[0].protocol_index == 10);
    auto copies = only(ds, OpCode::CopyFromPrefetch);
    REQUIRE(copies.size() == 1);
    CHECK(copies[0].protocol_index == 10);
}

TEST_CASE("hoisting stops at the swap-out that wrote the page") {
    ScratchDir dir;
    auto body = scheduled(dir, {1, 2, 2, 1}, 1, {10, 2});
    auto position = [&](OpCode op) {
        return std::find_if(body.begin(), body.end(), [op](const Instruction& i) { return i.op == op; }) - body.begin();
    };
    CHECK(position(OpCode::IssueSwapOut) < position(OpCode::FinishSwapOut));
    CHECK(position(OpCode::FinishSwapOut) < position(OpCode::IssueSwapIn));
    auto ds = directives(body);
    auto outs = only(ds, OpCode::IssueSwapOut);
    auto ins = only(ds, OpCode::IssueSwapIn);
    REQUIRE(outs.size() == 1);
    REQUIRE(ins.size() == 1);
    CHECK(outs[0].protocol_index == 1);
    CHECK(ins[0].protocol_index <= 2);
    CHECK(only(ds, OpCode::FinishSwapIn).at(0).protocol_index == 3);
}

TEST_CASE("a full prefetch buffer finishes the oldest swap-out") {
    ScratchDir dir;
    auto body = scheduled(dir, {1, 2, 3, 1, 2}, 1, {0, 1});
    int copies_to = 0;
    for (std::size_t i = 0; i != body.size(); i++) {
        if (body[i].op != OpCode::CopyToPrefetch) {
            continue;
        }
        if (++copies_to == 2) {
            REQUIRE(i > 0);
            CHECK(body[i - 1].op == OpCode::FinishSwapOut);
        }
    }
    CHECK(copies_to == 2);
}

TEST_CASE("configuration") {
    CHECK_THROWS_AS(validate({5, 0}), ConfigError);
    CHECK_NOTHROW(validate({0, 0}));
    CHECK(little_law_buffer(10e9, 1e-3, 64 * 1024) == 153);
    CHECK(little_law_buffer(0, 1e-3, 64 * 1024) == 0);
    CHECK(little_law_buffer(1e9, 100e-6, 2 * 1024 * 1024) == 1);
}

TEST_CASE("scheduled random programs") {
    Rng rng(31337);
    dsl::ProgramOptions o;
    o.page_shift = 6;
    for (int trial = 0; trial < 40; trial++) {
        ScratchDir dir;
        auto dag = memplan::testing::random_int_dag(rng, 30);
        const std::string expected = memplan::testing::int_output_text(dag, memplan::testing::evaluate_int(dag));
        const std::uint64_t frames = memplan::testing::draw(rng, 4, 6);
        const SchedulerConfig cfg{memplan::testing::draw(rng, 0, 12), memplan::testing::draw(rng, 1, 3)};
        auto run = memplan::testing::run_program(memplan::testing::int_program(dag), o,
                                                 memplan::testing::int_input_text(dag), dir, frames, cfg);
        CAPTURE(trial);
        CHECK(run.replay.ok());
        CHECK(run.replay.peak_resident <= frames);
        CHECK(run.replay.peak_slots_busy <= cfg.prefetch_frames);
        CHECK(run.output == expected);
        CHECK(run.stats.finish_swapin_stalls <= run.stats.swap_ins);
        CHECK(run.stats.resident_highwater_frames <= frames + cfg.prefetch_frames);

        auto body = bytecode::read_all(run.program).second;
        std::map<std::pair<StorageFrame, FrameNumber>, std::uint64_t> issued;
        std::uint64_t k = 0, issues = 0;
        for (const Instruction& i : body) {
            if (i.op == OpCode::IssueSwapIn) {
                issued[{i.immediate, bytecode::swap_frame(i)}] = k;
                issues++;
            } else if (i.op == OpCode::FinishSwapIn) {
                const auto key = std::make_pair(i.immediate, bytecode::swap_frame(i));
                REQUIRE(issued.count(key));
                CHECK(k - issued[key] <= cfg.lookahead);
                issued.erase(key);
            } else if (!bytecode::is_directive(i.op)) {
                k++;
            }
        }
        CHECK(issued.empty());
        CHECK(issues == run.stats.swap_ins);
    }
}

TEST_CASE("enough lookahead and buffer hide every transfer on a scan") {
    ScratchDir dir;
    cli::RunConfig c = memplan::testing::small_config(bytecode::DriverId::LeveledBatch);
    c.simulator = {1e-6, 1e9};
    const double transfer = c.simulator.latency_s + c.page_bytes() / c.simulator.bandwidth_bytes_per_s;
    c.lookahead = static_cast<std::uint64_t>(transfer / c.cost.batch_op) + 2;
    c.prefetch_frames = std::max<std::uint64_t>(
        2, little_law_buffer(c.simulator.bandwidth_bytes_per_s, c.simulator.latency_s, c.page_bytes()));
    cli::ProgramSpec spec{"rsum", 256};
    const std::uint64_t footprint = memplan::testing::footprint_pages(spec, c, dir);
    auto out = memplan::testing::plan_and_run(spec, c, memplan::testing::fraction_pages(footprint, 4, c), dir);
    CHECK(out.output_ok());
    REQUIRE(out.stats.size() == 1);
    CHECK(out.stats[0].swap_ins > 0);
    CHECK(out.stats[0].finish_swapin_stalls == 0);
}
