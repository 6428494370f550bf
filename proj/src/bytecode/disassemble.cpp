#include "memplan/bytecode/disassemble.hpp"

#include <cstdio>
#include <sstream>

namespace memplan::bytecode {
    std::string format_address(std::uint64_t addr, const ProgramHeader& header) {
        char prefix = header.dialect == Dialect::Virtual ? 'v' : 'p';
        return prefix + std::to_string(pg_num(addr, header.page_shift)) + ":"
            + std::to_string(pg_offset(addr, header.page_shift));
    }

    std::string format_instruction(std::uint64_t index, const Instruction& inst, const ProgramHeader& header) {
        char idx[24];
        std::snprintf(idx, sizeof(idx), "%08llu ", static_cast<unsigned long long>(index));
        std::ostringstream line;
        line << idx << info(inst.op).mnemonic;

        auto frame = [](std::uint64_t f) { return "p" + std::to_string(f); };
        auto storage = [](std::uint64_t s) { return "s" + std::to_string(s); };

        switch (inst.op) {
        case OpCode::IssueSwapIn:
        case OpCode::FinishSwapIn:
            line << ' ' << frame(inst.output) << " <- " << storage(inst.immediate);
            return line.str();
        case OpCode::IssueSwapOut:
        case OpCode::FinishSwapOut:
            line << ' ' << storage(inst.immediate) << " <- " << frame(inst.inputs[0]);
            return line.str();
        case OpCode::CopyFromPrefetch:
        case OpCode::CopyToPrefetch:
            line << ' ' << frame(inst.output) << " <- " << frame(inst.inputs[0]);
            return line.str();
        case OpCode::NetworkPostSend:
            line << " w" << inst.width << ' ' << format_address(inst.inputs[0], header) << " -> worker" << inst.immediate;
            return line.str();
        case OpCode::NetworkPostReceive:
            line << " w" << inst.width << ' ' << format_address(inst.output, header) << " <- worker" << inst.immediate;
            return line.str();
        case OpCode::NetworkBarrier:
        case OpCode::PrintStats:
        case OpCode::Halt:
            return line.str();
        default:
            break;
        }

        const OpInfo& oi = info(inst.op);
        line << " w" << inst.width;
        if (oi.has_output) {
            line << ' ' << format_address(inst.output, header);
        }
        if (oi.arity != 0) {
            line << " <-";
            for (std::uint8_t i = 0; i != oi.arity; i++) {
                line << (i == 0 ? " " : ", ") << format_address(inst.inputs[i], header);
            }
        }
        if (oi.uses_immediate) {
            line << " #" << inst.immediate;
        }
        if (header.driver == DriverId::LeveledBatch) {
            BatchMeta m = BatchMeta::unpack(inst.meta);
            line << " L" << static_cast<int>(m.level) << (m.relinearized ? "" : "u");
        }
        return line.str();
    }

    void disassemble(const std::string& path, std::ostream& sink) {
        ProgramReader reader(path);
        const ProgramHeader& h = reader.header();
        sink << "; dialect=" << to_string(h.dialect) << " unit=" << to_string(h.address_unit)
             << " driver=" << to_string(h.driver) << " page_shift=" << static_cast<int>(h.page_shift)
             << " instructions=" << h.instruction_count << '\n';
        if (h.dialect == Dialect::Physical) {
            sink << "; frames=" << h.frame_count << " prefetch_frames=" << h.prefetch_frames
                 << " storage_frames=" << h.storage_frame_count << '\n';
        }
        while (auto inst = reader.next()) {
            sink << format_instruction(reader.position() - 1, *inst, h) << '\n';
        }
    }
}
