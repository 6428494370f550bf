/**
 * @file scheduling/scheduler.hpp
 * @brief Turns the synchronous swaps of a replacement plan into
 * asynchronous transfers staged through a prefetch buffer.
 *
 * The input is read as a sequence of units: the swap pairs the replacement
 * stage placed before an instruction, then the instruction itself. A swap-in
 * needed by unit k is issued into a free prefetch slot before unit k - ℓ
 * when possible and completed by FinishSwapIn + CopyFromPrefetch just
 * before its use. A swap-out copies the frame into a slot and issues the
 * write; the write is only waited for when a slot is needed and none is
 * free, oldest first.
 */

#ifndef MEMPLAN_SCHEDULING_SCHEDULER_HPP_
#define MEMPLAN_SCHEDULING_SCHEDULER_HPP_

#include <cstdint>
#include <string>

namespace memplan::scheduling {
    struct SchedulerConfig {
        /** @brief How many instructions ahead of its use a swap-in may be issued. */
        std::uint64_t lookahead = 0;
        std::uint64_t prefetch_frames = 0;
    };

    struct SchedulerStats {
        std::uint64_t swap_ins = 0;
        std::uint64_t swap_outs = 0;
        /** @brief Swap-ins issued at least one instruction before their use. */
        std::uint64_t hoisted = 0;
        /** @brief Swap-outs written straight from their frame because every slot held an inbound page. */
        std::uint64_t direct_swap_outs = 0;
        std::uint64_t forced_finishes = 0;
        std::uint64_t output_instructions = 0;
    };

    /** @throws ConfigError when lookahead > 0 and there is no prefetch buffer. */
    void validate(const SchedulerConfig& cfg);

    SchedulerStats schedule(const std::string& input_path, const std::string& output_path,
                            const SchedulerConfig& cfg);

    /** @brief Frames needed to keep a device busy: ceil(bandwidth * latency / page size). */
    std::uint64_t little_law_buffer(double bandwidth_bytes_per_s, double latency_s, std::uint64_t page_bytes);
}

#endif
