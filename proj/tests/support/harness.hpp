/**
 * @file harness.hpp
 * @brief Shared plumbing for the test programs: scratch directories and an
 * end-to-end plan/replay/run helper over the CLI pipeline.
 */
#ifndef MEMPLAN_TESTS_HARNESS_HPP_
#define MEMPLAN_TESTS_HARNESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "memplan/cli/pipeline.hpp"
#include "memplan/engine/engine.hpp"
#include "memplan/placement/run.hpp"
#include "memplan/scheduling/scheduler.hpp"
#include "memplan/replay/replay.hpp"
#include "memplan/workloads/workloads.hpp"

namespace memplan::testing {
    /** @brief A fresh directory under the system temp dir, removed on destruction. */
    class ScratchDir {
    public:
        ScratchDir();
        ~ScratchDir();
        ScratchDir(const ScratchDir&) = delete;
        ScratchDir& operator=(const ScratchDir&) = delete;

        const std::string& path() const {
            return this->root;
        }
        std::string file(const std::string& name) const {
            return this->root + "/" + name;
        }

    private:
        std::string root;
    };

    std::string read_file(const std::string& path);
    void write_file(const std::string& path, const std::string& contents);

    struct ProgramRun {
        placement::PlacementResult placed;
        replacement::PlanResult plan;
        replay::ReplayReport replay;
        engine::ExecStats stats;
        std::string output;
        std::string program;
    };

    /**
     * @brief Places, plans with MIN over @p frames (then schedules with
     * @p sched when bounded), replays, and executes a builder program under
     * the simulator with a single worker.
     */
    ProgramRun run_program(const dsl::ProgramFn& fn, const dsl::ProgramOptions& options, const std::string& input,
                           const ScratchDir& dir, std::uint64_t frames = never,
                           const scheduling::SchedulerConfig& sched = {},
                           const engine::EngineOptions& engine_options = {});

    /*
     * Small-page configurations so that modest problem sizes still span
     * hundreds of pages: 256 wires per bit-wire page, 2 KiB batch pages
     * with 8-slot ciphertexts.
     */
    cli::RunConfig small_config(bytecode::DriverId driver);

    /** @brief Problem sizes used for the correctness sweeps. */
    std::uint64_t small_size(workloads::Workload w);

    struct Outcome {
        std::vector<cli::PlanReport> plans;
        std::vector<replay::ReplayReport> replays;
        std::vector<engine::ExecStats> stats;
        std::vector<std::string> programs;
        /** @brief Frame budget T per worker; `never` when unbounded. */
        std::uint64_t frames = never;
        std::string output;
        std::string expected;

        bool replay_ok() const;
        /** @brief Replay and runtime residency stay within T and T + B. */
        bool residency_ok() const;
        bool output_ok() const {
            return this->output == this->expected;
        }
    };

    /**
     * @brief Plans every worker of @p spec with @p memory_pages frames of
     * memory per worker (prefetch buffer included; 0 means unbounded),
     * replays each plan against its virtual program, and runs all workers
     * in-process under the simulator.
     */
    Outcome plan_and_run(const cli::ProgramSpec& spec, cli::RunConfig config, std::uint64_t memory_pages,
                         const ScratchDir& dir, std::uint64_t seed = 7);

    /** @brief Largest peak_live_pages over the workers of an unbounded plan. */
    std::uint64_t footprint_pages(const cli::ProgramSpec& spec, const cli::RunConfig& config, const ScratchDir& dir);

    /**
     * @brief Memory pages for 1/@p divisor of @p footprint, never below
     * B + 4 frames (four pages is the widest instruction).
     */
    std::uint64_t fraction_pages(std::uint64_t footprint, std::uint64_t divisor, const cli::RunConfig& config);
}

#endif
