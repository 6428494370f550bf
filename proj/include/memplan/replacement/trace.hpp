/**
 * @file replacement/trace.hpp
 * @brief Replacement over bare page-access traces, and an exhaustive-search
 * oracle for small instances.
 *
 * In trace mode every page starts out in storage, so a page's first access
 * costs a swap-in.
 */

#ifndef MEMPLAN_REPLACEMENT_TRACE_HPP_
#define MEMPLAN_REPLACEMENT_TRACE_HPP_

#include <cstdint>
#include <vector>

#include "memplan/replacement/core.hpp"

namespace memplan::replacement {
    struct TraceAccess {
        PageNumber page;
        bool write = false;
    };

    std::vector<TraceAccess> reads(const std::vector<PageNumber>& pages);

    ReplacementStats plan_trace(const std::vector<TraceAccess>& trace, std::uint64_t frames, Policy policy);

    struct BruteForceResult {
        std::uint64_t min_swap_ins;
        /** @brief Fewest swap-ins plus dirty swap-outs over all schedules. */
        std::uint64_t min_total_swaps;
    };

    constexpr std::size_t brute_force_max_trace = 24;
    constexpr std::size_t brute_force_max_pages = 8;
    constexpr std::uint64_t brute_force_max_frames = 4;

    /** @throws SpecError when the instance exceeds the tractability bounds. */
    BruteForceResult brute_force_min(const std::vector<TraceAccess>& trace, std::uint64_t frames);
}

#endif
