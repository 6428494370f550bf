#include "doctest.h"
#include "harness.hpp"
#include "oracles.hpp"
#include "memplan/drivers/batch.hpp"
#include "memplan/drivers/bitwire.hpp"
#include "memplan/drivers/fixed_point.hpp"
#include "memplan/error.hpp"

using namespace memplan;
using namespace memplan::drivers;
using bytecode::BatchMeta;
using memplan::testing::Rng;
using memplan::testing::ScratchDir;

TEST_CASE("bit-wire gates") {
    BitWireDriver d({});
    REQUIRE(d.wire_bytes() == 16);
    std::vector<std::byte> w[2], out(16);
    for (int v = 0; v < 2; v++) {
        w[v].resize(16);
        d.input(w[v].data(), v == 1);
        CHECK(w[v][0] == static_cast<std::byte>(v));
    }
    for (int a = 0; a < 2; a++) {
        for (int b = 0; b < 2; b++) {
            d.gate_and(out.data(), w[a].data(), w[b].data());
            CHECK(d.reveal(out.data()) == (a & b));
            d.gate_xor(out.data(), w[a].data(), w[b].data());
            CHECK(d.reveal(out.data()) == (a ^ b));
        }
    }
    CHECK(d.and_gates() == 4);
    CHECK(d.xor_gates() == 4);

    BitWireDriver again({});
    std::vector<std::byte> same(16);
    again.constant(same.data(), true);
    CHECK(same == w[1]);

    std::vector<std::byte> junk(16, std::byte{9});
    CHECK_THROWS_AS(d.reveal(junk.data()), ProtocolError);
}

TEST_CASE("ciphertext sizes") {
    LeveledBatchConfig c;
    CHECK(c.size_of(2, true) == 192 * 1024);
    for (std::uint32_t level = 0; level <= c.max_level; level++) {
        CHECK(c.size_of(level, false) > c.size_of(level, true));
        if (level > 0) {
            CHECK(c.size_of(level, true) > c.size_of(level - 1, true));
        }
    }
    CHECK(c.largest_size() == c.size_of(2, false));
    CHECK_THROWS_AS(c.size_of(3, true), ConfigError);
}

TEST_CASE("batch driver operations") {
    LeveledBatchConfig c;
    c.dimension = 2;
    c.relin_base = 256;
    c.unrelin_base = 384;
    LeveledBatchDriver d(c);
    std::vector<std::byte> a(c.largest_size()), b(c.largest_size()), out(c.largest_size()), r(c.largest_size());
    const std::int64_t xs[] = {fixed_from_int(1), fixed_from_int(2)};
    const std::int64_t ys[] = {fixed_from_int(3), fixed_from_int(4)};
    d.encode(a.data(), {2, true}, xs);
    d.encode(b.data(), {2, true}, ys);

    d.add(out.data(), a.data(), b.data());
    CiphertextView v = d.view(out.data());
    CHECK(v.meta == BatchMeta{2, true});
    REQUIRE(v.count == 2);
    CHECK(v.slots[0] == fixed_from_int(4));
    CHECK(v.slots[1] == fixed_from_int(6));

    d.mul_no_relin(out.data(), a.data(), b.data());
    CHECK(d.view(out.data()).meta == BatchMeta{2, false});
    CHECK_THROWS_AS(d.add(r.data(), out.data(), a.data()), ProtocolError);
    d.relin_rescale(r.data(), out.data());
    v = d.view(r.data());
    CHECK(v.meta == BatchMeta{1, true});
    CHECK(v.slots[0] == fixed_from_int(3));
    CHECK(v.slots[1] == fixed_from_int(8));
    CHECK_THROWS_AS(d.add(out.data(), r.data(), a.data()), ProtocolError);

    d.mul_plain(out.data(), r.data(), fixed_one / 2);
    v = d.view(out.data());
    CHECK(v.meta == BatchMeta{0, true});
    CHECK(v.slots[1] == fixed_from_int(4));
    CHECK_THROWS_AS(d.mul_no_relin(a.data(), out.data(), out.data()), ProtocolError);
    CHECK_THROWS_AS(d.mul_plain(a.data(), out.data(), fixed_one), ProtocolError);

    d.add_plain(a.data(), out.data(), fixed_from_int(-10));
    CHECK(d.view(a.data()).slots[0] == fixed_from_int(-8) - fixed_one / 2);
}

TEST_CASE("fixed-point arithmetic and text") {
    CHECK(fixed_mul(fixed_from_int(3), fixed_from_int(-2)) == fixed_from_int(-6));
    CHECK(fixed_mul(1, fixed_one / 2) == 1);
    CHECK(fixed_mul(-1, fixed_one / 2) == 0);
    CHECK(format_fixed(fixed_from_int(5)) == "5");
    CHECK(format_fixed(-fixed_one / 4) == "-0.25");
    CHECK(format_fixed(1) == "0.00000095367431640625");
    CHECK(parse_fixed("2.5") == fixed_from_int(5) / 2);
    CHECK(parse_fixed("-0.25") == -fixed_one / 4);
    CHECK_THROWS_AS(parse_fixed("1.2.3"), InputError);
    CHECK_THROWS_AS(parse_fixed(""), InputError);
    Rng rng(3);
    for (int i = 0; i < 1000; i++) {
        const auto raw = static_cast<std::int64_t>(rng() % (std::uint64_t(1) << 40)) - (std::int64_t(1) << 39);
        CHECK(parse_fixed(format_fixed(raw)) == raw);
    }
}

TEST_CASE("random batch programs match the reference evaluator") {
    Rng rng(12);
    dsl::ProgramOptions o;
    o.driver = bytecode::DriverId::LeveledBatch;
    o.page_shift = 11;
    o.batch.dimension = 4;
    o.batch.relin_base = 256;
    o.batch.unrelin_base = 384;
    for (int trial = 0; trial < 100; trial++) {
        ScratchDir dir;
        auto dag = memplan::testing::random_batch_dag(rng, 2, 4, 14);
        auto values = memplan::testing::evaluate_batch(dag, 2);
        engine::EngineOptions eo;
        eo.batch = o.batch;
        auto run = memplan::testing::run_program(memplan::testing::batch_program(dag, nullptr), o,
                                                 memplan::testing::batch_input_text(dag), dir, never, {}, eo);
        CAPTURE(trial);
        CHECK(run.output == memplan::testing::batch_output_text(dag, values));
    }
}
