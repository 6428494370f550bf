/**
 * @file replacement/planner.hpp
 * @brief Translation of a virtual program into a physical one for a fixed
 * number of frames.
 *
 * Planning is two streaming passes. annotate() walks the virtual program
 * backwards and records, for each operand, the next instruction that touches
 * the same page. plan_replacement() then walks forwards, reading the program
 * and the annotations in lockstep, and feeds each instruction's pages to a
 * PagingCore.
 *
 * A synchronous swap in the output is the adjacent pair Issue/Finish on the
 * same frame; the scheduler later splits such pairs apart.
 */

#ifndef MEMPLAN_REPLACEMENT_PLANNER_HPP_
#define MEMPLAN_REPLACEMENT_PLANNER_HPP_

#include <array>
#include <string>
#include <vector>

#include "memplan/bytecode/program.hpp"
#include "memplan/replacement/core.hpp"

namespace memplan::replacement {
    /** @brief Operand slots in annotation order: output, in0, in1, in2. */
    constexpr std::size_t operand_slots = 4;
    constexpr std::size_t annotation_record_size = operand_slots * sizeof(std::uint64_t);

    struct OperandPage {
        std::size_t slot;
        PageNumber page;
        bool write;
    };

    /** @brief Pages named by @p inst's address operands, one entry per slot in use. */
    std::vector<OperandPage> operand_pages(const bytecode::Instruction& inst, PageShift shift);

    /**
     * @brief Writes one record per instruction holding, for each operand slot,
     * the index of the next instruction touching that slot's page (`never`
     * for unused slots and last uses).
     */
    void annotate(const std::string& virtual_path, const std::string& annotation_path);

    struct PlanOptions {
        /** @brief Frame budget; `never` plans without a limit. */
        std::uint64_t frames = never;
        Policy policy = Policy::Min;
    };

    struct PlanResult {
        ReplacementStats stats;
        bytecode::ProgramHeader header;
        std::uint64_t input_instructions = 0;
    };

    PlanResult plan_replacement(const std::string& virtual_path, const std::string& annotation_path,
                                const std::string& physical_path, const PlanOptions& options);

    /** @brief annotate() followed by plan_replacement(), using a scratch annotation file next to the output. */
    PlanResult plan_replacement(const std::string& virtual_path, const std::string& physical_path,
                                const PlanOptions& options);

    /** @brief Demand-paging planner with LRU or FIFO eviction. */
    PlanResult plan_replacement_baseline(const std::string& virtual_path, const std::string& physical_path,
                                         std::uint64_t frames, Policy policy);

    std::string plan_stats_json(const PlanResult& result);
}

#endif
