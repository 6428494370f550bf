#include <algorithm>

#include "doctest.h"
#include "harness.hpp"
#include "oracles.hpp"
#include "memplan/dsl/batch.hpp"
#include "memplan/dsl/integer.hpp"
#include "memplan/dsl/sharded_array.hpp"
#include "memplan/error.hpp"

using namespace memplan;
using namespace memplan::dsl;
using bytecode::OpCode;
using memplan::testing::ScratchDir;

namespace {
    ProgramOptions bit_options() {
        ProgramOptions o;
        o.page_shift = 8;
        return o;
    }

    ProgramOptions batch_options() {
        ProgramOptions o;
        o.driver = bytecode::DriverId::LeveledBatch;
        o.page_shift = 11;
        o.batch.dimension = 4;
        o.batch.relin_base = 256;
        o.batch.unrelin_base = 384;
        return o;
    }

    std::vector<bytecode::Instruction> build(const ProgramFn& fn, const ProgramOptions& o, const ScratchDir& dir,
                                             placement::PlacementResult* placed = nullptr) {
        const std::string p = dir.file("dsl.virt");
        placement::PlacementResult r = placement::run_placement(fn, o, p);
        if (placed) {
            *placed = r;
        }
        return bytecode::read_all(p).second;
    }

    std::vector<OpCode> ops(const std::vector<bytecode::Instruction>& body) {
        std::vector<OpCode> out;
        for (const auto& i : body) {
            out.push_back(i.op);
        }
        return out;
    }

    void millionaire(const ProgramOptions&) {
        Integer alice(32);
        alice.mark_input(Party::Garbler);
        Integer bob(32);
        bob.mark_input(Party::Evaluator);
        Integer richer = alice >= bob;
        richer.mark_output();
    }

    std::string run_bits(const ProgramFn& fn, const std::string& input) {
        ScratchDir dir;
        return memplan::testing::run_program(fn, bit_options(), input, dir).output;
    }
}

TEST_CASE("millionaire program") {
    ScratchDir dir;
    placement::PlacementResult placed;
    auto body = build(millionaire, bit_options(), dir, &placed);
    CHECK(ops(body) == std::vector<OpCode>{OpCode::Input, OpCode::Input, OpCode::IntCompareGe, OpCode::Output});
    CHECK(placed.stats.allocations == 3);
    CHECK(placed.stats.peak_live_units == 65);
    CHECK(body[2].width == 32);

    CHECK(run_bits(millionaire, "5\n3\n") == "1\n");
    CHECK(run_bits(millionaire, "3\n5\n") == "0\n");
    CHECK(run_bits(millionaire, "7\n7\n") == "1\n");
}

TEST_CASE("an empty program emits nothing") {
    ScratchDir dir;
    CHECK(build([](const ProgramOptions&) {}, bit_options(), dir).empty());
}

TEST_CASE("builder errors") {
    ScratchDir dir;
    auto fails = [&](const ProgramFn& fn) {
        CHECK_THROWS_AS(build(fn, bit_options(), dir), BuilderError);
    };
    fails([](const ProgramOptions&) {
        Integer a(8);
        a.mark_input(Party::Garbler);
        a.mark_input(Party::Garbler);
    });
    fails([](const ProgramOptions&) {
        Integer a = Integer::constant(32, 1);
        Integer b = Integer::constant(16, 1);
        Integer c = a + b;
    });
    fails([](const ProgramOptions&) {
        Integer a = Integer::constant(32, 1);
        Integer b = Integer::constant(8, 1);
        Integer c = a >= b;
    });
    fails([](const ProgramOptions&) {
        Integer s = Integer::constant(2, 1);
        Integer x = Integer::constant(8, 1);
        Integer c = mux(s, x, x);
    });
}

TEST_CASE("one instruction and one allocation per operation") {
    ScratchDir dir;
    placement::PlacementResult placed;
    auto body = build(
        [](const ProgramOptions&) {
            Integer a(32), b(32);
            a.mark_input(Party::Garbler);
            b.mark_input(Party::Garbler);
            Integer c = a + b;
            Integer d = a ^ a;
            c.mark_output();
            d.mark_output();
        },
        bit_options(), dir, &placed);
    REQUIRE(body.size() == 6);
    CHECK(body[2].op == OpCode::IntAdd);
    CHECK(body[2].width == 32);
    CHECK(body[3].op == OpCode::BitXor);
    CHECK(body[3].inputs[0] == body[3].inputs[1]);
    CHECK(placed.stats.allocations == 4);
    CHECK(placed.stats.deallocations == 4);
}

TEST_CASE("comparison and mux semantics") {
    auto program = [](std::uint64_t sel, std::uint64_t x, std::uint64_t y) {
        return [=](const ProgramOptions&) {
            Integer s = Integer::constant(1, sel);
            Integer a = Integer::constant(8, x);
            Integer b = Integer::constant(8, y);
            Integer m = mux(s, a, b);
            Integer same = mux(s, a, a);
            Integer refl = a >= a;
            m.mark_output();
            same.mark_output();
            refl.mark_output();
        };
    };
    CHECK(run_bits(program(1, 5, 9), "") == "5\n5\n1\n");
    CHECK(run_bits(program(0, 5, 9), "") == "9\n5\n1\n");
}

TEST_CASE("batch level algebra at build time") {
    ScratchDir dir;
    SUBCASE("multiply then relinearize drops one level") {
        build(
            [](const ProgramOptions&) {
                Batch a = Batch::input(4);
                Batch b = Batch::input(4);
                CHECK(a.level() == 2);
                Batch p = mul_no_relin(a, b);
                CHECK(p.level() == 2);
                CHECK_FALSE(p.relinearized());
                Batch r = relin_rescale(p);
                CHECK(r.level() == 1);
                CHECK(r.relinearized());
                Batch q = mul_plain(r, encode_fixed(0.5));
                CHECK(q.level() == 0);
            },
            batch_options(), dir);
    }

    SUBCASE("ab + cd needs a single relinearization") {
        auto body = build(
            [](const ProgramOptions&) {
                Batch a = Batch::input(4), b = Batch::input(4), c = Batch::input(4), d = Batch::input(4);
                Batch sum = relin_rescale(mul_no_relin(a, b) + mul_no_relin(c, d));
                sum.mark_output();
            },
            batch_options(), dir);
        auto relins = std::count_if(body.begin(), body.end(), [](const auto& i) { return i.op == OpCode::BatchRelinRescale; });
        CHECK(relins == 1);
    }

    SUBCASE("illegal combinations") {
        auto fails = [&](const ProgramFn& fn) {
            CHECK_THROWS_AS(build(fn, batch_options(), dir), BuilderError);
        };
        fails([](const ProgramOptions&) {
            Batch a = Batch::input(4);
            Batch z = relin_rescale(mul_no_relin(a, a));
            Batch y = relin_rescale(mul_no_relin(z, z));
            Batch bad = mul_no_relin(y, y);
        });
        fails([](const ProgramOptions&) {
            Batch a = Batch::input(4);
            Batch low = relin_rescale(mul_no_relin(a, a));
            Batch bad = a + low;
        });
        fails([](const ProgramOptions&) {
            Batch a = Batch::input(4);
            Batch p = mul_no_relin(a, a);
            Batch bad = p + a;
        });
        fails([](const ProgramOptions&) {
            Batch a = Batch::input(4);
            Batch bad = relin_rescale(a);
        });
    }
}

TEST_CASE("level flags agree with the reference rules") {
    memplan::testing::Rng rng(99);
    ScratchDir dir;
    for (int trial = 0; trial < 200; trial++) {
        auto dag = memplan::testing::random_batch_dag(rng, 2, 4, 12);
        auto reference = memplan::testing::evaluate_batch(dag, 2);
        std::vector<std::pair<std::uint8_t, bool>> observed;
        build(memplan::testing::batch_program(dag, &observed), batch_options(), dir);
        REQUIRE(observed.size() == reference.size());
        for (std::size_t i = 0; i != observed.size(); i++) {
            CHECK(observed[i].first == reference[i].level);
            CHECK(observed[i].second == reference[i].relinearized);
        }
    }
}

TEST_CASE("network peers are checked") {
    ScratchDir dir;
    ProgramOptions o = bit_options();
    o.worker_count = 2;
    o.worker_id = 0;
    auto send_to = [](WorkerId peer) {
        return [peer](const ProgramOptions&) {
            Integer x = Integer::constant(8, 1);
            send(x, peer);
            barrier();
        };
    };
    CHECK(build(send_to(1), o, dir).size() == 3);
    CHECK_THROWS_AS(build(send_to(2), o, dir), BuilderError);
    CHECK_THROWS_AS(build(send_to(0), o, dir), BuilderError);
}

TEST_CASE("builds are deterministic and memory follows live handles") {
    ScratchDir dir;
    auto loop = [](const ProgramOptions&) {
        Integer acc(32);
        acc.mark_input(Party::Garbler);
        for (int i = 0; i < 100000; i++) {
            acc = increment(acc);
        }
        acc.mark_output();
    };
    placement::PlacementResult placed;
    placement::run_placement(loop, bit_options(), dir.file("a"));
    placed = placement::run_placement(loop, bit_options(), dir.file("b"));
    CHECK(memplan::testing::read_file(dir.file("a")) == memplan::testing::read_file(dir.file("b")));
    CHECK(placed.instructions == 100002);
    CHECK(placed.stats.peak_live_units <= 64);
    CHECK(placed.stats.peak_live_pages <= 2);
}

TEST_CASE("sharded arrays partition the index space") {
    const std::uint64_t total = 64;
    for (WorkerId workers : {1u, 2u, 4u, 8u}) {
        std::vector<int> owner_count(total, 0);
        for (WorkerId w = 0; w != workers; w++) {
            ShardedArray<int> arr(total, w, workers);
            for (std::uint64_t i = 0; i != arr.local_size(); i++) {
                std::uint64_t g = arr.to_global(i);
                CHECK(arr.to_local(g) == i);
                CHECK(arr.owner(g) == w);
                owner_count[g]++;
            }
        }
        CHECK(std::all_of(owner_count.begin(), owner_count.end(), [](int c) { return c == 1; }));
    }
    CHECK_THROWS_AS(ShardedArray<int>(10, 0, 4), BuilderError);
}
