#include "memplan/replacement/core.hpp"

#include <algorithm>

#include "memplan/error.hpp"

namespace memplan::replacement {
    std::string_view to_string(Policy p) {
        switch (p) {
        case Policy::Min:
            return "min";
        case Policy::Lru:
            return "lru";
        case Policy::Fifo:
            return "fifo";
        }
        return "?";
    }

    PagingCore::PagingCore(const CoreOptions& options) : opts(options) {
        if (options.frames == 0) {
            throw InfeasiblePlan("replacement needs at least one frame");
        }
        this->st.frames = options.frames;
    }

    PagingCore::Entry& PagingCore::entry(PageNumber page) {
        auto [it, inserted] = this->table.try_emplace(page);
        if (inserted && this->opts.pages_start_in_storage) {
            it->second.state = State::Stored;
            it->second.storage = this->allocate_storage();
        }
        return it->second;
    }

    FrameNumber PagingCore::frame_of(PageNumber page) const {
        auto it = this->table.find(page);
        if (it == this->table.end() || it->second.state != State::Resident) {
            throw InfeasiblePlan("page " + std::to_string(page) + " is not resident");
        }
        return it->second.frame;
    }

    void PagingCore::push(PageNumber page, Entry& e) {
        e.version++;
        HeapItem item{0, 0, 0, page, e.version};
        switch (this->opts.policy) {
        case Policy::Min:
            /* Farthest next use first, then clean before dirty, then highest page. */
            item.k1 = e.next_use;
            item.k2 = e.dirty ? 0 : 1;
            item.k3 = page;
            break;
        case Policy::Lru:
            item.k1 = never - e.recency;
            break;
        case Policy::Fifo:
            item.k1 = never - e.loaded;
            break;
        }
        this->heap.push(item);
    }

    StorageFrame PagingCore::allocate_storage() {
        if (!this->free_storage.empty()) {
            StorageFrame s = *this->free_storage.begin();
            this->free_storage.erase(this->free_storage.begin());
            return s;
        }
        StorageFrame s = this->storage_high_water++;
        this->st.storage_frames = this->storage_high_water;
        return s;
    }

    void PagingCore::release_storage(Entry& e) {
        if (e.storage) {
            this->free_storage.insert(*e.storage);
            e.storage.reset();
        }
    }

    void PagingCore::release_frame(FrameNumber f) {
        this->free_frames.insert(f);
        this->resident_count--;
    }

    void PagingCore::evict(PageNumber page, std::vector<PagingEvent>& events) {
        Entry& e = this->table.at(page);
        if (this->pending_network.contains(page)) {
            events.push_back({PagingEvent::Kind::Barrier});
            this->st.barriers_inserted++;
            this->pending_network.clear();
        }
        const bool dead = this->opts.policy == Policy::Min && e.next_use == never;
        FrameNumber frame = e.frame;
        if (dead) {
            this->release_storage(e);
            this->table.erase(page);
            this->st.dead_drops++;
        } else if (e.dirty) {
            if (!e.storage) {
                e.storage = this->allocate_storage();
            }
            events.push_back({PagingEvent::Kind::SwapOut, page, frame, *e.storage});
            this->st.swap_outs++;
            e.state = State::Stored;
            e.dirty = false;
        } else {
            e.state = e.storage ? State::Stored : State::Fresh;
        }
        this->release_frame(frame);
    }

    FrameNumber PagingCore::take_frame(const std::unordered_set<PageNumber>& pinned, std::vector<PagingEvent>& events) {
        if (this->free_frames.empty() && this->frame_high_water < this->opts.frames) {
            this->free_frames.insert(this->frame_high_water++);
        }
        if (this->free_frames.empty()) {
            std::vector<HeapItem> stash;
            std::optional<PageNumber> victim;
            while (!this->heap.empty()) {
                HeapItem top = this->heap.top();
                this->heap.pop();
                auto it = this->table.find(top.page);
                if (it == this->table.end() || it->second.state != State::Resident || it->second.version != top.version) {
                    continue;
                }
                if (pinned.contains(top.page)) {
                    stash.push_back(top);
                    continue;
                }
                victim = top.page;
                break;
            }
            for (const HeapItem& item : stash) {
                this->heap.push(item);
            }
            if (!victim) {
                throw InfeasiblePlan("no evictable page");
            }
            this->evict(*victim, events);
        }
        FrameNumber f = *this->free_frames.begin();
        this->free_frames.erase(this->free_frames.begin());
        this->resident_count++;
        this->st.peak_resident = std::max(this->st.peak_resident, this->resident_count);
        return f;
    }

    void PagingCore::step(InstructionNumber index, std::span<PageAccess> accesses, std::vector<PagingEvent>& events) {
        if (accesses.size() > this->opts.frames) {
            throw InfeasiblePlan("instruction " + std::to_string(index) + " touches " + std::to_string(accesses.size())
                                 + " pages but only " + std::to_string(this->opts.frames) + " frames are available");
        }
        std::unordered_set<PageNumber> pinned;
        for (const PageAccess& a : accesses) {
            pinned.insert(a.page);
        }
        for (const PageAccess& a : accesses) {
            Entry& e = this->entry(a.page);
            if (e.state == State::Resident) {
                continue;
            }
            FrameNumber f = this->take_frame(pinned, events);
            Entry& fresh = this->table.at(a.page);
            if (fresh.state == State::Stored) {
                events.push_back({PagingEvent::Kind::SwapIn, a.page, f, *fresh.storage});
                this->st.swap_ins++;
            }
            fresh.state = State::Resident;
            fresh.frame = f;
            fresh.dirty = false;
            fresh.loaded = ++this->clock;
        }
        for (PageAccess& a : accesses) {
            Entry& e = this->table.at(a.page);
            a.frame = e.frame;
            e.dirty = e.dirty || a.write;
            e.next_use = a.next_use;
            e.recency = ++this->clock;
            if (this->opts.policy == Policy::Min && a.next_use == never && !this->pending_network.contains(a.page)) {
                this->release_storage(e);
                this->release_frame(e.frame);
                this->table.erase(a.page);
                this->st.dead_drops++;
                continue;
            }
            this->push(a.page, e);
        }
    }

    void PagingCore::network_post(PageNumber page) {
        this->pending_network.insert(page);
    }

    void PagingCore::network_barrier() {
        /* Pages kept only because of pending I/O can now be dropped. */
        for (PageNumber page : this->pending_network) {
            auto it = this->table.find(page);
            if (it != this->table.end() && it->second.state == State::Resident && this->opts.policy == Policy::Min
                && it->second.next_use == never) {
                this->release_storage(it->second);
                this->release_frame(it->second.frame);
                this->table.erase(it);
                this->st.dead_drops++;
            }
        }
        this->pending_network.clear();
    }
}
