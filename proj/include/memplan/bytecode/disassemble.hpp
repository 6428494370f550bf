/**
 * @file bytecode/disassemble.hpp
 * @brief Human-readable listing of program files.
 */

#ifndef MEMPLAN_BYTECODE_DISASSEMBLE_HPP_
#define MEMPLAN_BYTECODE_DISASSEMBLE_HPP_

#include <cstdint>
#include <ostream>
#include <string>

#include "memplan/bytecode/program.hpp"

namespace memplan::bytecode {
    /** @brief Formats @p addr as `v<page>:<offset>` or `p<frame>:<offset>`. */
    std::string format_address(std::uint64_t addr, const ProgramHeader& header);

    /** @brief One listing line without the trailing newline. */
    std::string format_instruction(std::uint64_t index, const Instruction& inst, const ProgramHeader& header);

    void disassemble(const std::string& path, std::ostream& sink);
}

#endif
