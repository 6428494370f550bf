#include "memplan/bytecode/instruction.hpp"

#include <string>

#include "memplan/error.hpp"

namespace memplan::bytecode {
    namespace {
        constexpr std::array<OpInfo, opcode_count> op_table = {{
            /* mnemonic, arity, has_output, uses_immediate, directive */
            {"IN", 0, true, true, false},
            {"OUT", 1, false, false, false},
            {"CONST", 0, true, true, false},
            {"IADD", 2, true, false, false},
            {"ISUB", 2, true, false, false},
            {"IINC", 1, true, false, false},
            {"AND", 2, true, false, false},
            {"XOR", 2, true, false, false},
            {"OR", 2, true, false, false},
            {"NOT", 1, true, false, false},
            {"SHL", 1, true, true, false},
            {"SHR", 1, true, true, false},
            {"IGE", 2, true, false, false},
            {"IEQ", 2, true, false, false},
            {"MUX", 3, true, false, false},
            {"COPY", 1, true, false, false},
            {"BADD", 2, true, false, false},
            {"BMUL", 2, true, false, false},
            {"BRELIN", 1, true, false, false},
            {"BADDP", 1, true, true, false},
            {"BMULP", 1, true, true, false},
            {"NSEND", 1, false, true, true},
            {"NRECV", 0, true, true, true},
            {"NBAR", 0, false, false, true},
            {"ISWI", 0, true, true, true},
            {"FSWI", 0, true, true, true},
            {"ISWO", 1, false, true, true},
            {"FSWO", 1, false, true, true},
            {"CPFP", 1, true, false, true},
            {"CPTP", 1, true, false, true},
            {"STATS", 0, false, false, true},
            {"HALT", 0, false, false, true},
        }};

        void put_le(std::byte* out, std::uint64_t value, std::size_t bytes) {
            for (std::size_t i = 0; i != bytes; i++) {
                out[i] = static_cast<std::byte>(value >> (8 * i));
            }
        }

        std::uint64_t get_le(const std::byte* in, std::size_t bytes) {
            std::uint64_t value = 0;
            for (std::size_t i = 0; i != bytes; i++) {
                value |= static_cast<std::uint64_t>(in[i]) << (8 * i);
            }
            return value;
        }

        [[noreturn]] void malformed(const Instruction& inst, const std::string& why) {
            throw MalformedInstruction(std::string(info(inst.op).mnemonic) + ": " + why);
        }
    }

    const OpInfo& info(OpCode op) {
        auto index = static_cast<std::size_t>(op);
        if (index >= opcode_count) {
            throw MalformedInstruction("unknown opcode " + std::to_string(index));
        }
        return op_table[index];
    }

    void validate(const Instruction& inst) {
        const OpInfo& oi = info(inst.op);
        if (inst.num_inputs != oi.arity) {
            malformed(inst, "expected " + std::to_string(oi.arity) + " inputs, got " + std::to_string(inst.num_inputs));
        }
        for (std::size_t i = oi.arity; i != inst.inputs.size(); i++) {
            if (inst.inputs[i] != 0) {
                malformed(inst, "unused input slot " + std::to_string(i) + " is nonzero");
            }
        }
        if (!oi.has_output && inst.output != 0) {
            malformed(inst, "unused output slot is nonzero");
        }
        if (!oi.uses_immediate && inst.immediate != 0) {
            malformed(inst, "unused immediate is nonzero");
        }
        if (inst.output >= address_limit) {
            malformed(inst, "output exceeds 56 bits");
        }
        for (std::uint64_t in : inst.input_span()) {
            if (in >= address_limit) {
                malformed(inst, "input exceeds 56 bits");
            }
        }
    }

    Record encode(const Instruction& inst) {
        validate(inst);
        Record r{};
        r[0] = static_cast<std::byte>(inst.op);
        r[1] = static_cast<std::byte>(inst.meta);
        put_le(&r[2], inst.width, 2);
        put_le(&r[4], inst.output, 7);
        put_le(&r[11], inst.inputs[0], 7);
        put_le(&r[18], inst.inputs[1], 7);
        put_le(&r[25], inst.inputs[2], 7);
        put_le(&r[32], inst.immediate, 8);
        return r;
    }

    Instruction decode(std::span<const std::byte, record_size> r) {
        Instruction inst;
        auto tag = static_cast<std::uint8_t>(r[0]);
        if (tag >= opcode_count) {
            throw FormatError("unknown opcode tag " + std::to_string(tag));
        }
        inst.op = static_cast<OpCode>(tag);
        inst.meta = static_cast<std::uint8_t>(r[1]);
        inst.width = static_cast<std::uint16_t>(get_le(&r[2], 2));
        inst.output = get_le(&r[4], 7);
        inst.inputs[0] = get_le(&r[11], 7);
        inst.inputs[1] = get_le(&r[18], 7);
        inst.inputs[2] = get_le(&r[25], 7);
        inst.immediate = get_le(&r[32], 8);
        inst.num_inputs = info(inst.op).arity;
        return inst;
    }

    Instruction make(OpCode op, std::uint16_t width, std::uint64_t output,
                     std::initializer_list<std::uint64_t> inputs, std::uint64_t immediate,
                     std::uint8_t meta) {
        Instruction inst;
        inst.op = op;
        inst.width = width;
        inst.output = output;
        inst.immediate = immediate;
        inst.meta = meta;
        if (inputs.size() > inst.inputs.size()) {
            throw MalformedInstruction("too many inputs");
        }
        for (std::uint64_t in : inputs) {
            inst.inputs[inst.num_inputs++] = in;
        }
        return inst;
    }

    namespace directive {
        Instruction issue_swap_in(FrameNumber frame, StorageFrame storage) {
            return make(OpCode::IssueSwapIn, 0, frame, {}, storage);
        }

        Instruction finish_swap_in(FrameNumber frame, StorageFrame storage) {
            return make(OpCode::FinishSwapIn, 0, frame, {}, storage);
        }

        Instruction issue_swap_out(FrameNumber frame, StorageFrame storage) {
            return make(OpCode::IssueSwapOut, 0, 0, {frame}, storage);
        }

        Instruction finish_swap_out(FrameNumber frame, StorageFrame storage) {
            return make(OpCode::FinishSwapOut, 0, 0, {frame}, storage);
        }

        Instruction copy_from_prefetch(FrameNumber destination, FrameNumber slot) {
            return make(OpCode::CopyFromPrefetch, 0, destination, {slot});
        }

        Instruction copy_to_prefetch(FrameNumber slot, FrameNumber source) {
            return make(OpCode::CopyToPrefetch, 0, slot, {source});
        }

        Instruction network_barrier() {
            return make(OpCode::NetworkBarrier, 0, 0, {});
        }

        Instruction halt() {
            return make(OpCode::Halt, 0, 0, {});
        }
    }
}
