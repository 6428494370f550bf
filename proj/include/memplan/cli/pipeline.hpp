/**
 * @file cli/pipeline.hpp
 * @brief Planning and execution entry points behind the command line.
 */

#ifndef MEMPLAN_CLI_PIPELINE_HPP_
#define MEMPLAN_CLI_PIPELINE_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "memplan/cli/config.hpp"
#include "memplan/placement/allocator.hpp"
#include "memplan/replacement/planner.hpp"
#include "memplan/scheduling/scheduler.hpp"
#include "memplan/workloads/workloads.hpp"

namespace memplan::cli {
    /**
     * @brief A named program: one of the benchmark workloads, or
     * "millionaire" (two 32-bit inputs, one output bit a >= b).
     */
    struct ProgramSpec {
        std::string name;
        std::uint64_t n = 0;
        WorkerId worker_count = 1;
        std::uint64_t tile = 0;
    };

    std::vector<std::string> program_names();

    /** @throws SpecError for unknown names or invalid sizes. */
    bytecode::DriverId program_driver(const ProgramSpec& spec);

    dsl::ProgramFn resolve_program(const ProgramSpec& spec);

    std::optional<workloads::WorkloadSpec> as_workload(const ProgramSpec& spec);

    dsl::ProgramOptions program_options(const ProgramSpec& spec, const RunConfig& config, WorkerId worker);

    /** @brief Largest power-of-two tile t <= n such that three t x t tiles of ciphertexts fit in @p frames. */
    std::uint64_t choose_tile(std::uint64_t n, std::uint64_t frames, const RunConfig& config);

    /** @brief Per-worker inputs and expected output for any named program. */
    workloads::GeneratedInputs program_inputs(const ProgramSpec& spec, std::uint64_t seed, const RunConfig& config);

    struct PlanReport {
        placement::AllocatorStats placement;
        std::uint64_t virtual_instructions = 0;
        replacement::PlanResult replacement;
        std::optional<scheduling::SchedulerStats> scheduling;
        std::uint64_t frames = never;
        std::uint64_t output_bytes = 0;
        double plan_seconds = 0;
        /** @brief Process resident-set high-water mark after planning. */
        long maxrss_kib = 0;

        std::string to_json() const;
    };

    /**
     * @brief Placement, then replacement, then (for MIN with a bounded
     * budget) scheduling. LRU and FIFO plan demand paging over all
     * T + B frames with no prefetching.
     *
     * Intermediates are written next to @p output_path with .virt, .phys
     * and .ann suffixes and removed unless @p keep_intermediates is set.
     */
    PlanReport plan_program(const ProgramSpec& spec, const RunConfig& config, WorkerId worker,
                            const std::string& output_path, bool keep_intermediates = false);

    /** @brief Executes one worker's memory program with the configured storage backend. */
    engine::ExecStats run_worker(const std::string& program_path, const RunConfig& config, WorkerId worker,
                                 engine::Channel* channel, std::istream& input, std::ostream& output);

    struct WorkerRun {
        engine::ExecStats stats;
        std::string output;
    };

    /** @brief Runs every worker on its own thread over an in-process channel. */
    std::vector<WorkerRun> run_in_process(const std::vector<std::string>& program_paths, const RunConfig& config,
                                          const std::vector<std::string>& inputs);

    /** @brief Replaces "{worker}" in @p pattern, or appends ".w<id>" when there are several workers and no marker. */
    std::string worker_path(const std::string& pattern, WorkerId worker, WorkerId worker_count);
}

#endif
