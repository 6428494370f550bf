/**
 * @file replacement/core.hpp
 * @brief Page-table bookkeeping shared by the MIN planner and the
 * demand-paging baselines.
 *
 * The core consumes one "step" per instruction: the distinct pages the
 * instruction touches, whether each is written, and (for MIN) when each is
 * next used. It keeps every page of the step resident at once, evicting by
 * policy when the frames run out, and reports the swap and barrier
 * directives the step requires.
 */

#ifndef MEMPLAN_REPLACEMENT_CORE_HPP_
#define MEMPLAN_REPLACEMENT_CORE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "memplan/addr.hpp"

namespace memplan::replacement {
    enum class Policy { Min, Lru, Fifo };

    std::string_view to_string(Policy p);

    struct PageAccess {
        PageNumber page;
        bool write;
        /** @brief Next instruction touching this page after the current one, or `never`. */
        InstructionNumber next_use = never;
        /** @brief Filled in by PagingCore::step. */
        FrameNumber frame = 0;
    };

    struct PagingEvent {
        enum class Kind { SwapIn, SwapOut, Barrier } kind;
        PageNumber page = 0;
        FrameNumber frame = 0;
        StorageFrame storage = 0;
    };

    struct ReplacementStats {
        std::uint64_t frames = 0;
        std::uint64_t swap_ins = 0;
        std::uint64_t swap_outs = 0;
        std::uint64_t barriers_inserted = 0;
        std::uint64_t peak_resident = 0;
        std::uint64_t storage_frames = 0;
        std::uint64_t dead_drops = 0;
    };

    struct CoreOptions {
        std::uint64_t frames = 0;
        Policy policy = Policy::Min;
        /**
         * @brief Treat every page as already present in storage before its
         * first access (trace experiments); otherwise a page's first access
         * claims an empty frame without a swap-in.
         */
        bool pages_start_in_storage = false;
    };

    class PagingCore {
    public:
        explicit PagingCore(const CoreOptions& options);

        /**
         * @brief Makes every page of @p accesses resident, appending the
         * directives this requires to @p events and the frame of each page
         * to its entry. @p accesses must name distinct pages, in operand
         * order.
         */
        void step(InstructionNumber index, std::span<PageAccess> accesses, std::vector<PagingEvent>& events);

        FrameNumber frame_of(PageNumber page) const;

        /** @brief Records an outstanding network operation on a resident page. */
        void network_post(PageNumber page);

        /** @brief Records a program-issued barrier; no pages remain pending. */
        void network_barrier();

        const ReplacementStats& stats() const {
            return this->st;
        }

        std::uint64_t resident() const {
            return this->resident_count;
        }

        /** @brief Largest frame number ever assigned, plus one. */
        std::uint64_t frames_used() const {
            return this->frame_high_water;
        }

    private:
        enum class State { Fresh, Resident, Stored };

        struct Entry {
            State state = State::Fresh;
            FrameNumber frame = 0;
            std::optional<StorageFrame> storage;
            bool dirty = false;
            InstructionNumber next_use = never;
            std::uint64_t recency = 0;
            std::uint64_t loaded = 0;
            std::uint64_t version = 0;
        };

        struct HeapItem {
            std::uint64_t k1, k2, k3;
            PageNumber page;
            std::uint64_t version;

            bool operator<(const HeapItem& o) const {
                if (k1 != o.k1) {
                    return k1 < o.k1;
                }
                if (k2 != o.k2) {
                    return k2 < o.k2;
                }
                return k3 < o.k3;
            }
        };

        void push(PageNumber page, Entry& e);
        FrameNumber take_frame(const std::unordered_set<PageNumber>& pinned, std::vector<PagingEvent>& events);
        void evict(PageNumber page, std::vector<PagingEvent>& events);
        StorageFrame allocate_storage();
        void release_storage(Entry& e);
        void release_frame(FrameNumber f);
        Entry& entry(PageNumber page);

        CoreOptions opts;
        std::unordered_map<PageNumber, Entry> table;
        std::priority_queue<HeapItem> heap;
        std::set<FrameNumber> free_frames;
        FrameNumber frame_high_water = 0;
        std::set<StorageFrame> free_storage;
        StorageFrame storage_high_water = 0;
        std::unordered_set<PageNumber> pending_network;
        std::uint64_t resident_count = 0;
        std::uint64_t clock = 0;
        ReplacementStats st;
    };
}

#endif
