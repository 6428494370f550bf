/**
 * @file placement/run.hpp
 * @brief First planner stage: unroll a DSL program into a virtual bytecode.
 */

#ifndef MEMPLAN_PLACEMENT_RUN_HPP_
#define MEMPLAN_PLACEMENT_RUN_HPP_

#include <string>

#include "memplan/dsl/context.hpp"
#include "memplan/placement/allocator.hpp"

namespace memplan::placement {
    struct PlacementResult {
        AllocatorStats stats;
        std::uint64_t instructions = 0;
    };

    /**
     * @brief Runs @p program under a fresh builder context, streaming its
     * instructions to a virtual program file at @p output_path.
     *
     * Builder errors are rethrown with the index of the instruction being
     * emitted. Handles still allocated when the program returns are reported
     * as a leak.
     */
    PlacementResult run_placement(const dsl::ProgramFn& program, const dsl::ProgramOptions& options,
                                  const std::string& output_path);
}

#endif
