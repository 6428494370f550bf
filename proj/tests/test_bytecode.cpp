#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "harness.hpp"
#include "oracles.hpp"
#include "memplan/bytecode/disassemble.hpp"
#include "memplan/bytecode/program.hpp"
#include "memplan/error.hpp"

using namespace memplan;
using namespace memplan::bytecode;
using memplan::testing::Rng;
using memplan::testing::ScratchDir;
using memplan::testing::draw;

namespace {
    Instruction random_instruction(Rng& rng) {
        Instruction inst;
        inst.op = static_cast<OpCode>(draw(rng, 0, opcode_count - 1));
        const OpInfo& oi = info(inst.op);
        inst.width = static_cast<std::uint16_t>(rng());
        inst.meta = static_cast<std::uint8_t>(rng());
        inst.num_inputs = oi.arity;
        for (std::uint8_t i = 0; i != oi.arity; i++) {
            inst.inputs[i] = rng() & address_mask;
        }
        if (oi.has_output) {
            inst.output = rng() & address_mask;
        }
        if (oi.uses_immediate) {
            inst.immediate = rng();
        }
        return inst;
    }

    ProgramHeader virtual_header() {
        ProgramHeader h;
        h.page_shift = 12;
        return h;
    }
}

TEST_CASE("records are 40 bytes and start with the opcode") {
    Record r = encode(make(OpCode::IntAdd, 32, 0, {32, 64}));
    CHECK(r.size() == 40);
    CHECK(static_cast<std::uint8_t>(r[0]) == static_cast<std::uint8_t>(OpCode::IntAdd));
}

TEST_CASE("encode/decode round trip") {
    Rng rng(11);
    for (int i = 0; i < 1000; i++) {
        Instruction inst = random_instruction(rng);
        Record r = encode(inst);
        CHECK(decode(r) == inst);
    }
}

TEST_CASE("malformed instructions are rejected") {
    Instruction mux = make(OpCode::Mux, 8, 0, {1, 2, 3});
    mux.num_inputs = 2;
    mux.inputs[2] = 0;
    CHECK_THROWS_AS(encode(mux), MalformedInstruction);

    CHECK_THROWS_AS(encode(make(OpCode::IntAdd, 8, address_limit, {0, 0})), MalformedInstruction);

    Instruction halt = directive::halt();
    halt.output = 5;
    CHECK_THROWS_AS(validate(halt), MalformedInstruction);

    Record r = encode(directive::halt());
    r[0] = std::byte{200};
    CHECK_THROWS_AS(decode(r), FormatError);
}

TEST_CASE("program files") {
    ScratchDir dir;

    SUBCASE("empty program is just a header") {
        const std::string p = dir.file("empty.prog");
        write_program(p, virtual_header(), {});
        CHECK(std::filesystem::file_size(p) == header_size);
        auto [h, body] = read_all(p);
        CHECK(h.instruction_count == 0);
        CHECK(body.empty());
    }

    SUBCASE("round trip and random access") {
        Rng rng(5);
        std::vector<Instruction> body;
        for (int i = 0; i < 3000; i++) {
            Instruction inst;
            do {
                inst = random_instruction(rng);
            } while (is_paging_directive(inst.op));
            body.push_back(inst);
        }
        const std::string p = dir.file("body.prog");
        write_program(p, virtual_header(), body);
        CHECK(std::filesystem::file_size(p) == header_size + body.size() * record_size);

        auto [h, back] = read_all(p);
        CHECK(h.instruction_count == body.size());
        CHECK(back == body);

        ProgramReader reader(p);
        CHECK(reader.at(1234) == body[1234]);
        CHECK(reader.at(7) == body[7]);

        ReverseProgramReader rev(p);
        std::uint64_t expect = body.size();
        while (auto item = rev.next()) {
            expect--;
            CHECK(item->first == expect);
            CHECK(item->second == body[expect]);
        }
        CHECK(expect == 0);
    }

    SUBCASE("header count larger than the body") {
        const std::string p = dir.file("short.prog");
        std::vector<Instruction> four(4, make(OpCode::IntAdd, 8, 0, {8, 16}));
        write_program(p, virtual_header(), four);
        ProgramHeader h = virtual_header();
        h.instruction_count = 5;
        auto bytes = encode_header(h);
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        f.close();
        CHECK_THROWS_AS(ProgramReader{p}, TruncatedProgram);
    }

    SUBCASE("bad magic") {
        const std::string p = dir.file("magic.prog");
        write_program(p, virtual_header(), {});
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(ProgramReader{p}, FormatError);
    }

    SUBCASE("dialects do not mix") {
        ProgramWriter w(dir.file("virt.prog"), virtual_header());
        CHECK_THROWS_AS(w.append(directive::issue_swap_in(0, 0)), FormatError);

        ProgramHeader ph;
        ph.dialect = Dialect::Physical;
        ph.page_shift = 4;
        ph.frame_count = 2;
        ph.prefetch_frames = 1;
        write_program(dir.file("ok.prog"), ph, std::vector<Instruction>{directive::issue_swap_in(2, 9)});
        CHECK(read_all(dir.file("ok.prog")).second.size() == 1);
        /* Physical headers may change until finish(), so frames are checked on read. */
        write_program(dir.file("slot.prog"), ph, std::vector<Instruction>{directive::issue_swap_in(3, 9)});
        CHECK_THROWS_AS(read_all(dir.file("slot.prog")), FormatError);
        write_program(dir.file("addr.prog"), ph, std::vector<Instruction>{make(OpCode::IntAdd, 8, 3 << 4, {0, 16})});
        CHECK_THROWS_AS(read_all(dir.file("addr.prog")), FormatError);
    }
}

TEST_CASE("writer output is deterministic") {
    ScratchDir dir;
    Rng a(3), b(3);
    std::vector<Instruction> x, y;
    for (int i = 0; i < 500; i++) {
        Instruction p = make(OpCode::IntAdd, 16, a() & 0xffff, {a() & 0xffff, a() & 0xffff});
        Instruction q = make(OpCode::IntAdd, 16, b() & 0xffff, {b() & 0xffff, b() & 0xffff});
        x.push_back(p);
        y.push_back(q);
    }
    write_program(dir.file("a"), virtual_header(), x);
    write_program(dir.file("b"), virtual_header(), y);
    CHECK(memplan::testing::read_file(dir.file("a")) == memplan::testing::read_file(dir.file("b")));
}

TEST_CASE("disassembly lines") {
    ProgramHeader vh = virtual_header();
    Instruction add = make(OpCode::IntAdd, 32, pg_addr(1, 12), {0, 32});
    CHECK(format_instruction(0, add, vh) == "00000000 IADD w32 v1:0 <- v0:0, v0:32");

    ProgramHeader ph;
    ph.dialect = Dialect::Physical;
    ph.page_shift = 12;
    ph.frame_count = 4;
    CHECK(format_instruction(3, directive::issue_swap_in(2, 7), ph) == "00000003 ISWI p2 <- s7");
    CHECK(format_instruction(0, add, ph).find("p1:0 <- p0:0, p0:32") != std::string::npos);

    ScratchDir dir;
    write_program(dir.file("d.prog"), vh, std::vector<Instruction>{add, directive::halt()});
    std::ostringstream out;
    disassemble(dir.file("d.prog"), out);
    CHECK(out.str().find("00000000 IADD w32 v1:0 <- v0:0, v0:32\n") != std::string::npos);
    CHECK(out.str().find("00000001 HALT") != std::string::npos);
}
