/**
 * @file placement/allocator.hpp
 * @brief Page-aware slab allocator over the virtual address space.
 *
 * Every page holds slots of exactly one size, so no allocation straddles a
 * page boundary. Among pages of a size class with free slots, allocation
 * picks the one with the fewest free slots (lowest page number on ties), so
 * lightly used pages get a chance to empty out and die. A page whose slots
 * are all free leaves the allocator; its number is never handed out again.
 */

#ifndef MEMPLAN_PLACEMENT_ALLOCATOR_HPP_
#define MEMPLAN_PLACEMENT_ALLOCATOR_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memplan/addr.hpp"

namespace memplan::placement {
    struct AllocatorStats {
        std::uint64_t pages_ever_allocated = 0;
        std::uint64_t live_pages = 0;
        std::uint64_t peak_live_pages = 0;
        std::uint64_t live_allocations = 0;
        std::uint64_t live_units = 0;
        /** @brief Largest number of simultaneously live allocation units (w). */
        std::uint64_t peak_live_units = 0;
        std::uint64_t allocations = 0;
        std::uint64_t deallocations = 0;
        /** @brief Units in pages ever opened that could not hold any slot. */
        std::uint64_t unusable_units = 0;

        double classic_fragmentation_ratio(PageShift shift) const {
            if (this->pages_ever_allocated == 0) {
                return 0.0;
            }
            return static_cast<double>(this->unusable_units)
                / static_cast<double>(this->pages_ever_allocated * pg_size(shift));
        }
    };

    class Allocator {
    public:
        explicit Allocator(PageShift page_shift);

        VirtAddr allocate(std::uint64_t size);
        void deallocate(VirtAddr addr);

        /** @brief Size of the slot at @p addr; throws if not allocated. */
        std::uint64_t slot_size(VirtAddr addr) const;

        const AllocatorStats& stats() const {
            return this->st;
        }

        PageShift page_shift() const {
            return this->shift;
        }

        /** @brief Free-slot counts of the current candidate pages of a size class, keyed by page. */
        std::map<PageNumber, std::uint64_t> candidates(std::uint64_t size) const;

        /** @brief Number of page records currently tracked (live pages). */
        std::size_t tracked_pages() const {
            return this->pages.size();
        }

    private:
        struct PageRecord {
            std::uint64_t slot_size;
            std::uint64_t slot_count;
            std::uint64_t free_count;
            std::vector<std::uint64_t> free_bitmap;
        };

        /* Candidate pages ordered by (free slots, page number). */
        using CandidateSet = std::set<std::pair<std::uint64_t, PageNumber>>;

        PageShift shift;
        PageNumber next_page = 0;
        std::unordered_map<PageNumber, PageRecord> pages;
        std::unordered_map<std::uint64_t, CandidateSet> classes;
        AllocatorStats st;
    };
}

#endif
