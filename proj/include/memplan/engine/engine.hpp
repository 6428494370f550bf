/**
 * @file engine/engine.hpp
 * @brief Interpreter for physical programs.
 *
 * The engine owns one flat array of (T + B) frames. Directives are handled
 * here; protocol instructions are expanded into driver operations by an
 * engine layer chosen once per program from the header's driver id.
 *
 * Under a simulated storage backend all times are virtual: each driver
 * operation advances the clock by its configured cost, and waiting for a
 * transfer that has not completed advances it to the completion time.
 */

#ifndef MEMPLAN_ENGINE_ENGINE_HPP_
#define MEMPLAN_ENGINE_ENGINE_HPP_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "memplan/drivers/config.hpp"
#include "memplan/engine/channel.hpp"
#include "memplan/engine/storage.hpp"

namespace memplan::engine {
    /** @brief Virtual-time cost of each kind of work, in seconds. */
    struct CostModel {
        double and_gate = 20e-9;
        double xor_gate = 2e-9;
        double batch_op = 100e-6;
        double copy_per_byte = 0.05e-9;
        /** @brief Per bit-wire Input or Output wire: label generation or oblivious transfer, and decoding. */
        double io_wire = 10e-9;
    };

    struct EngineOptions {
        drivers::BitWireConfig bitwire;
        drivers::LeveledBatchConfig batch;
        CostModel cost;
        /** @brief Destination for PrintStats; discarded when null. */
        std::ostream* diagnostics = nullptr;
    };

    struct ExecStats {
        std::uint64_t instructions_executed = 0;
        std::uint64_t protocol_instructions = 0;
        std::uint64_t swap_ins = 0;
        std::uint64_t swap_outs = 0;
        std::uint64_t finish_swapin_stalls = 0;
        std::uint64_t finish_swapout_stalls = 0;
        double stall_time = 0;
        double compute_time = 0;
        double total_virtual_time = 0;
        std::uint64_t resident_highwater_frames = 0;
        std::uint64_t network_bytes = 0;
        std::uint64_t and_gates = 0;
        std::uint64_t xor_gates = 0;
        std::uint64_t batch_ops = 0;
        /** @brief Wires (bit-wire) or ciphertexts (batch) passed through Input and Output. */
        std::uint64_t io_units = 0;
        std::uint64_t copied_bytes = 0;
        bool simulated = true;

        std::string to_json() const;
    };

    /**
     * @param channel Links to the other workers; may be null for
     * single-worker programs.
     */
    ExecStats execute(const std::string& program_path, const EngineOptions& options, StorageBackend& storage,
                      Channel* channel, std::istream& input, std::ostream& output);
}

#endif
