/**
 * @file cli/config.hpp
 * @brief YAML run configuration shared by plan, run and bench.
 *
 * Memory limits are in bytes. The frame budget T handed to the planner is
 * floor(memory_limit / page_bytes) - prefetch_frames; a limit of 0 means
 * unbounded. Page size in bytes depends on the driver: bit-wire pages hold
 * 2^page_shift wires of wire_bytes each, batch pages 2^page_shift bytes.
 */

#ifndef MEMPLAN_CLI_CONFIG_HPP_
#define MEMPLAN_CLI_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "memplan/addr.hpp"
#include "memplan/bytecode/program.hpp"
#include "memplan/drivers/config.hpp"
#include "memplan/engine/engine.hpp"
#include "memplan/engine/storage.hpp"
#include "memplan/replacement/core.hpp"

namespace memplan::cli {
    struct WorkerConfig {
        std::uint64_t memory_limit = 0;
        /** @brief Swap file; empty selects the simulator. */
        std::string storage_path;
        /** @brief host:port for the TCP channel. */
        std::string endpoint;
    };

    struct RunConfig {
        bytecode::DriverId driver = bytecode::DriverId::BitWire;
        PageShift page_shift = 12;
        std::uint64_t lookahead = 10000;
        std::uint64_t prefetch_frames = 256;
        replacement::Policy policy = replacement::Policy::Min;
        engine::SimulatorParams simulator;
        engine::CostModel cost;
        drivers::BitWireConfig bitwire;
        drivers::LeveledBatchConfig batch;
        std::vector<WorkerConfig> workers{WorkerConfig{}};

        std::uint64_t page_bytes() const;

        /** @brief A single entry applies to every worker. */
        const WorkerConfig& worker(WorkerId id) const;

        /** @brief Frame budget T for @p id, or `never` when unbounded. @throws ConfigError if the limit leaves no frames. */
        std::uint64_t frames(WorkerId id) const;

        engine::EngineOptions engine_options() const;

        /** @throws ConfigError on inconsistent values. */
        void validate() const;
    };

    /** @brief Defaults per driver: 64 KiB pages, l = 10000, B = 256 for bit-wire; 2 MiB pages, l = 100, B = 16 for batch. */
    RunConfig default_config(bytecode::DriverId driver);

    /** @brief Parses YAML text; keys not present keep the driver's defaults. */
    RunConfig parse_config(const std::string& yaml_text);

    RunConfig load_config(const std::string& path);

    std::string dump_config(const RunConfig& config);
}

#endif
