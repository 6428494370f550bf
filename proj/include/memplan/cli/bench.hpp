/**
 * @file cli/bench.hpp
 * @brief Workload x scenario sweep under the storage simulator.
 *
 * Scenarios:
 *  - unbounded: no memory limit, no swapping.
 *  - min_prefetch: MIN replacement plus prefetch scheduling.
 *  - demand_lru, demand_fifo: demand paging over the same memory, standing
 *    in for operating-system swapping.
 *
 * The memory limit of a bounded scenario is the unbounded plan's peak
 * residency divided by footprint_ratio, so T = limit - B.
 */

#ifndef MEMPLAN_CLI_BENCH_HPP_
#define MEMPLAN_CLI_BENCH_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "memplan/cli/pipeline.hpp"

namespace memplan::cli {
    enum class Scenario { Unbounded, MinPrefetch, DemandLru, DemandFifo };

    constexpr Scenario all_scenarios[] = {Scenario::Unbounded, Scenario::MinPrefetch, Scenario::DemandLru,
                                          Scenario::DemandFifo};

    std::string_view scenario_name(Scenario s);

    /** @throws SpecError for an unknown name. */
    Scenario parse_scenario(std::string_view name);

    struct BenchSettings {
        std::vector<ProgramSpec> programs;
        std::vector<Scenario> scenarios{std::begin(all_scenarios), std::end(all_scenarios)};
        std::uint64_t seed = 1;
        double footprint_ratio = 4;
        /**
         * @brief When positive, each program's lookahead becomes
         * margin * page_transfer_time / per_instruction_compute_time, using
         * the unbounded run's compute time. Otherwise the config's l is used.
         */
        double lookahead_margin = 0;
        RunConfig bitwire = default_config(bytecode::DriverId::BitWire);
        RunConfig batch = default_config(bytecode::DriverId::LeveledBatch);
        /** @brief Scratch directory for memory programs. */
        std::string work_dir;
    };

    struct BenchCell {
        std::string program;
        std::uint64_t n = 0;
        WorkerId workers = 1;
        Scenario scenario = Scenario::Unbounded;
        std::uint64_t footprint_pages = 0;
        /** @brief Bytes per worker; 0 when unbounded. */
        std::uint64_t memory_limit = 0;
        /** @brief The scaled limit was too small for B plus the widest instruction and was raised. */
        bool limit_raised = false;
        std::uint64_t tile = 0;
        std::uint64_t lookahead = 0;
        std::vector<PlanReport> plans;
        std::vector<engine::ExecStats> stats;
        /** @brief Slowest worker's total_virtual_time. */
        double total_virtual_time = 0;
        /** @brief total_virtual_time over the unbounded scenario's. */
        double ratio = 0;
        bool output_ok = false;
    };

    struct BenchReport {
        std::vector<BenchCell> cells;
        BenchSettings settings;

        const BenchCell* find(std::string_view program, Scenario scenario) const;

        /** @brief Deterministic per-cell table; excludes wall-clock planner figures. */
        std::string to_csv() const;

        /** @brief One row per program, one normalized-time column per scenario. */
        std::string to_ratio_csv() const;

        /** @brief Everything in the CSV plus plan statistics, planner time and memory, and the calibration. */
        std::string to_json() const;
    };

    BenchReport run_bench(const BenchSettings& settings);

    /** @brief gnuplot script drawing the ratio table in @p csv_name as clustered bars. */
    std::string gnuplot_script(const std::string& csv_name);
}

#endif
