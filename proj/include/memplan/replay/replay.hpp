/**
 * @file replay/replay.hpp
 * @brief Shadow replay of a physical program against the virtual program it
 * was planned from.
 *
 * Every memory location (frame, prefetch slot, storage frame) carries a tag
 * naming the virtual page version it holds. Walking both programs together,
 * each protocol instruction must find its operands' current versions at the
 * frames it names, and no directive may destroy the only copy of a page that
 * is still needed. Transfers in flight and pending network buffers must not
 * be touched until they complete.
 */

#ifndef MEMPLAN_REPLAY_REPLAY_HPP_
#define MEMPLAN_REPLAY_REPLAY_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace memplan::replay {
    struct ReplayReport {
        std::vector<std::string> violations;
        std::uint64_t frame_count = 0;
        std::uint64_t prefetch_frames = 0;
        /** @brief Most frames below T simultaneously holding a page that is still needed. */
        std::uint64_t peak_resident = 0;
        /** @brief Most prefetch slots simultaneously busy. */
        std::uint64_t peak_slots_busy = 0;
        std::uint64_t highest_frame_touched = 0;
        std::uint64_t swap_ins = 0;
        std::uint64_t swap_outs = 0;
        std::uint64_t matched_instructions = 0;

        bool ok() const {
            return violations.empty();
        }
    };

    ReplayReport replay(const std::string& virtual_path, const std::string& physical_path);
}

#endif
