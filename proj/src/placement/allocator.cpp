#include "memplan/placement/allocator.hpp"

#include <bit>
#include <string>

#include "memplan/error.hpp"

namespace memplan::placement {
    Allocator::Allocator(PageShift page_shift) : shift(page_shift) {
        if (page_shift == 0 || page_shift >= address_bits) {
            throw AllocatorError("invalid page shift " + std::to_string(page_shift));
        }
    }

    VirtAddr Allocator::allocate(std::uint64_t size) {
        const std::uint64_t page_size = pg_size(this->shift);
        if (size == 0) {
            throw AllocatorError("zero-sized allocation");
        }
        if (size > page_size) {
            throw AllocatorError("allocation of " + std::to_string(size) + " units exceeds the page size of "
                                 + std::to_string(page_size));
        }

        CandidateSet& cands = this->classes[size];
        PageNumber page;
        if (cands.empty()) {
            page = this->next_page++;
            if (pg_addr(page, this->shift) >= address_limit) {
                throw AllocatorError("virtual address space exhausted");
            }
            PageRecord rec;
            rec.slot_size = size;
            rec.slot_count = page_size / size;
            rec.free_count = rec.slot_count;
            rec.free_bitmap.assign((rec.slot_count + 63) / 64, ~UINT64_C(0));
            if (rec.slot_count % 64 != 0) {
                rec.free_bitmap.back() = (UINT64_C(1) << (rec.slot_count % 64)) - 1;
            }
            this->pages.emplace(page, std::move(rec));
            cands.emplace(this->pages.at(page).free_count, page);
            this->st.pages_ever_allocated++;
            this->st.unusable_units += page_size % size;
            this->st.live_pages++;
            this->st.peak_live_pages = std::max(this->st.peak_live_pages, this->st.live_pages);
        } else {
            page = cands.begin()->second;
        }

        PageRecord& rec = this->pages.at(page);
        cands.erase({rec.free_count, page});
        std::uint64_t slot = 0;
        for (std::size_t w = 0; w != rec.free_bitmap.size(); w++) {
            if (rec.free_bitmap[w] != 0) {
                std::uint64_t bit = std::countr_zero(rec.free_bitmap[w]);
                rec.free_bitmap[w] &= ~(UINT64_C(1) << bit);
                slot = w * 64 + bit;
                break;
            }
        }
        rec.free_count--;
        if (rec.free_count != 0) {
            cands.emplace(rec.free_count, page);
        }

        this->st.allocations++;
        this->st.live_allocations++;
        this->st.live_units += size;
        this->st.peak_live_units = std::max(this->st.peak_live_units, this->st.live_units);
        return pg_addr(page, this->shift) + slot * size;
    }

    void Allocator::deallocate(VirtAddr addr) {
        PageNumber page = pg_num(addr, this->shift);
        auto it = this->pages.find(page);
        if (it == this->pages.end()) {
            throw AllocatorError("deallocation of unknown address " + std::to_string(addr));
        }
        PageRecord& rec = it->second;
        std::uint64_t offset = pg_offset(addr, this->shift);
        if (offset % rec.slot_size != 0 || offset / rec.slot_size >= rec.slot_count) {
            throw AllocatorError("deallocation of misaligned address " + std::to_string(addr));
        }
        std::uint64_t slot = offset / rec.slot_size;
        std::uint64_t mask = UINT64_C(1) << (slot % 64);
        if ((rec.free_bitmap[slot / 64] & mask) != 0) {
            throw AllocatorError("double free of address " + std::to_string(addr));
        }

        CandidateSet& cands = this->classes.at(rec.slot_size);
        if (rec.free_count != 0) {
            cands.erase({rec.free_count, page});
        }
        rec.free_bitmap[slot / 64] |= mask;
        rec.free_count++;

        this->st.deallocations++;
        this->st.live_allocations--;
        this->st.live_units -= rec.slot_size;

        if (rec.free_count == rec.slot_count) {
            this->pages.erase(it);
            this->st.live_pages--;
        } else {
            cands.emplace(rec.free_count, page);
        }
    }

    std::uint64_t Allocator::slot_size(VirtAddr addr) const {
        auto it = this->pages.find(pg_num(addr, this->shift));
        if (it == this->pages.end()) {
            throw AllocatorError("unknown address " + std::to_string(addr));
        }
        return it->second.slot_size;
    }

    std::map<PageNumber, std::uint64_t> Allocator::candidates(std::uint64_t size) const {
        std::map<PageNumber, std::uint64_t> out;
        auto it = this->classes.find(size);
        if (it != this->classes.end()) {
            for (const auto& [free, page] : it->second) {
                out.emplace(page, free);
            }
        }
        return out;
    }
}
