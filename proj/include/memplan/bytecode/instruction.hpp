/**
 * @file bytecode/instruction.hpp
 * @brief Opcodes and the fixed-width instruction record shared by the
 * virtual bytecode and the memory program.
 */

#ifndef MEMPLAN_BYTECODE_INSTRUCTION_HPP_
#define MEMPLAN_BYTECODE_INSTRUCTION_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "memplan/addr.hpp"

namespace memplan::bytecode {
    enum class OpCode : std::uint8_t {
        Input = 0,
        Output,
        PublicConstant,
        IntAdd,
        IntSub,
        IntIncrement,
        BitAnd,
        BitXor,
        BitOr,
        BitNot,
        ShiftLeftConst,
        ShiftRightConst,
        IntCompareGe,
        IntCompareEq,
        Mux,
        Copy,
        BatchAdd,
        BatchMulNoRelin,
        BatchRelinRescale,
        BatchAddPlain,
        BatchMulPlain,
        NetworkPostSend,
        NetworkPostReceive,
        NetworkBarrier,
        IssueSwapIn,
        FinishSwapIn,
        IssueSwapOut,
        FinishSwapOut,
        CopyFromPrefetch,
        CopyToPrefetch,
        PrintStats,
        Halt,
    };

    constexpr std::size_t opcode_count = static_cast<std::size_t>(OpCode::Halt) + 1;

    /**
     * @brief Static description of an opcode's record layout.
     *
     * @p arity is the number of used input slots and @p has_output says
     * whether the output slot is used. For protocol instructions and network
     * directives these slots hold addresses; for swap and prefetch-copy
     * directives they hold frame numbers.
     */
    struct OpInfo {
        std::string_view mnemonic;
        std::uint8_t arity;
        bool has_output;
        bool uses_immediate;
        bool directive;
    };

    const OpInfo& info(OpCode op);

    inline bool is_directive(OpCode op) {
        return info(op).directive;
    }

    /** @brief Swap and prefetch-copy directives; only memory programs carry these. */
    inline bool is_paging_directive(OpCode op) {
        return op >= OpCode::IssueSwapIn && op <= OpCode::CopyToPrefetch;
    }

    inline bool is_network(OpCode op) {
        return op == OpCode::NetworkPostSend || op == OpCode::NetworkPostReceive;
    }

    inline bool is_batch(OpCode op) {
        return op >= OpCode::BatchAdd && op <= OpCode::BatchMulPlain;
    }

    /** @brief True if the instruction's output/input slots are memory addresses. */
    inline bool has_address_operands(OpCode op) {
        return !is_directive(op) || is_network(op);
    }

    /**
     * @brief Level/relinearization tag stored in the meta byte of batch
     * instructions (and of Input/Output/network instructions in batch
     * programs). It describes the ciphertext written by the instruction, or
     * read by it when the instruction has no output.
     */
    struct BatchMeta {
        std::uint8_t level = 0;
        bool relinearized = true;

        std::uint8_t pack() const {
            return static_cast<std::uint8_t>((level & 0x0F) | (relinearized ? 0x10 : 0));
        }

        static BatchMeta unpack(std::uint8_t byte) {
            return BatchMeta{static_cast<std::uint8_t>(byte & 0x0F), (byte & 0x10) != 0};
        }

        bool operator==(const BatchMeta&) const = default;
    };

    struct Instruction {
        OpCode op = OpCode::Halt;
        std::uint8_t meta = 0;
        std::uint16_t width = 0;
        std::uint8_t num_inputs = 0;
        std::uint64_t output = 0;
        std::array<std::uint64_t, 3> inputs{};
        std::uint64_t immediate = 0;

        std::span<const std::uint64_t> input_span() const {
            return {inputs.data(), num_inputs};
        }

        bool operator==(const Instruction&) const = default;
    };

    constexpr std::size_t record_size = 40;
    using Record = std::array<std::byte, record_size>;

    /**
     * @brief Serializes one instruction as a 40-byte little-endian record:
     * opcode (1), meta (1), width (2), output (7), three inputs (7 each),
     * immediate (8).
     *
     * Throws MalformedInstruction if the operand count does not match the
     * opcode, an unused slot is nonzero, or an address exceeds 56 bits.
     */
    Record encode(const Instruction& inst);

    Instruction decode(std::span<const std::byte, record_size> record);

    void validate(const Instruction& inst);

    /* Convenience constructors used by the planner stages. */
    Instruction make(OpCode op, std::uint16_t width, std::uint64_t output,
                     std::initializer_list<std::uint64_t> inputs, std::uint64_t immediate = 0,
                     std::uint8_t meta = 0);

    namespace directive {
        Instruction issue_swap_in(FrameNumber frame, StorageFrame storage);
        Instruction finish_swap_in(FrameNumber frame, StorageFrame storage);
        Instruction issue_swap_out(FrameNumber frame, StorageFrame storage);
        Instruction finish_swap_out(FrameNumber frame, StorageFrame storage);
        Instruction copy_from_prefetch(FrameNumber destination, FrameNumber slot);
        Instruction copy_to_prefetch(FrameNumber slot, FrameNumber source);
        Instruction network_barrier();
        Instruction halt();
    }

    /**
     * @brief Frame referenced by a swap directive: the destination of a
     * swap-in or the source of a swap-out.
     */
    inline FrameNumber swap_frame(const Instruction& inst) {
        return (inst.op == OpCode::IssueSwapIn || inst.op == OpCode::FinishSwapIn) ? inst.output : inst.inputs[0];
    }
}

#endif
