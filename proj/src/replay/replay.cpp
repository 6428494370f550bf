#include "memplan/replay/replay.hpp"

#include <algorithm>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "memplan/bytecode/program.hpp"
#include "memplan/replacement/planner.hpp"

namespace memplan::replay {
    using bytecode::Instruction;
    using bytecode::OpCode;

    namespace {
        constexpr std::size_t violation_cap = 16;
        constexpr std::uint64_t storage_bit = UINT64_C(1) << 63;

        struct Tag {
            PageNumber page;
            std::uint64_t version;
        };

        struct PageInfo {
            std::uint64_t version = 0;
            /* Locations holding the current version. */
            std::vector<std::uint64_t> holders;
            InstructionNumber last_access = 0;
        };

        struct Outbound {
            std::optional<Tag> snapshot;
            std::uint64_t source;
        };

        class Replayer {
        public:
            Replayer(const std::string& virtual_path, const std::string& physical_path)
                : vreader(virtual_path), preader(physical_path) {
                const auto& vh = this->vreader.header();
                const auto& ph = this->preader.header();
                this->report.frame_count = ph.frame_count;
                this->report.prefetch_frames = ph.prefetch_frames;
                if (vh.dialect != bytecode::Dialect::Virtual || ph.dialect != bytecode::Dialect::Physical) {
                    this->violation("expected a virtual and a physical program");
                }
                if (vh.page_shift != ph.page_shift || vh.driver != ph.driver) {
                    this->violation("page size or driver differs between the programs");
                }
                this->shift = vh.page_shift;
                this->total_frames = ph.total_frames();

                bytecode::ProgramReader scan(virtual_path);
                while (auto inst = scan.next()) {
                    for (const auto& op : replacement::operand_pages(*inst, this->shift)) {
                        this->pages[op.page].last_access = scan.position() - 1;
                    }
                }
            }

            ReplayReport run() {
                while (auto inst = this->preader.next()) {
                    this->position = this->preader.position() - 1;
                    if (this->report.violations.size() >= violation_cap) {
                        break;
                    }
                    this->step(*inst);
                }
                if (this->vreader.position() != this->vreader.header().instruction_count) {
                    this->violation("physical program ends after " + std::to_string(this->vreader.position())
                                    + " of " + std::to_string(this->vreader.header().instruction_count)
                                    + " virtual instructions");
                }
                if (!this->inbound.empty() || !this->outbound.empty()) {
                    this->violation("transfers still outstanding at the end of the program");
                }
                this->report.matched_instructions = this->vreader.position();
                return this->report;
            }

        private:
            void violation(const std::string& what) {
                if (this->report.violations.size() < violation_cap) {
                    this->report.violations.push_back("at " + std::to_string(this->position) + ": " + what);
                }
            }

            bool current(const std::optional<Tag>& t) {
                return t && this->pages[t->page].version == t->version;
            }

            std::optional<Tag> tag_of(std::uint64_t loc) {
                auto it = this->tags.find(loc);
                return it == this->tags.end() ? std::nullopt : std::optional<Tag>(it->second);
            }

            void set_tag(std::uint64_t loc, std::optional<Tag> value, InstructionNumber needed_from) {
                auto old = this->tag_of(loc);
                if (this->current(old)) {
                    PageInfo& pi = this->pages[old->page];
                    if (value && value->page == old->page && value->version == old->version) {
                        return;
                    }
                    std::erase(pi.holders, loc);
                    if (pi.holders.empty() && pi.last_access >= needed_from) {
                        this->violation("destroys the only copy of page " + std::to_string(old->page));
                    }
                    this->resident_delta(loc, -1);
                }
                if (value) {
                    this->tags[loc] = *value;
                } else {
                    this->tags.erase(loc);
                }
                if (this->current(value)) {
                    this->pages[value->page].holders.push_back(loc);
                    this->resident_delta(loc, +1);
                }
            }

            void resident_delta(std::uint64_t loc, int delta) {
                if ((loc & storage_bit) != 0 || loc >= this->report.frame_count) {
                    return;
                }
                this->resident = static_cast<std::uint64_t>(static_cast<std::int64_t>(this->resident) + delta);
                this->report.peak_resident = std::max(this->report.peak_resident, this->resident);
            }

            bool check_frame(std::uint64_t frame, const char* role) {
                this->report.highest_frame_touched = std::max(this->report.highest_frame_touched, frame);
                if (frame >= this->total_frames) {
                    this->violation(std::string(role) + " frame " + std::to_string(frame) + " beyond "
                                    + std::to_string(this->total_frames) + " frames");
                    return false;
                }
                return true;
            }

            bool writable(std::uint64_t frame) {
                if (this->inbound.contains(frame)) {
                    this->violation("frame " + std::to_string(frame) + " is the target of an unfinished swap-in");
                    return false;
                }
                if (this->outbound_sources.contains(frame)) {
                    this->violation("frame " + std::to_string(frame) + " is the source of an unfinished swap-out");
                    return false;
                }
                return true;
            }

            /* A frame with a posted send or receive must stay put until the barrier. */
            bool settled(std::uint64_t frame) {
                if (this->network_pending.contains(frame)) {
                    this->violation("frame " + std::to_string(frame) + " has a network operation pending");
                    return false;
                }
                return true;
            }

            bool readable(std::uint64_t frame) {
                if (this->inbound.contains(frame)) {
                    this->violation("frame " + std::to_string(frame) + " is read before its swap-in finished");
                    return false;
                }
                return true;
            }

            void update_slots() {
                std::uint64_t busy = 0;
                for (const auto& [frame, s] : this->inbound) {
                    busy += frame >= this->report.frame_count;
                }
                for (std::uint64_t src : this->outbound_sources) {
                    busy += src >= this->report.frame_count;
                }
                this->report.peak_slots_busy = std::max(this->report.peak_slots_busy, busy);
            }

            void step(const Instruction& inst) {
                const InstructionNumber vi = this->vreader.position();
                switch (inst.op) {
                case OpCode::IssueSwapIn: {
                    if (!this->check_frame(inst.output, "swap-in") || !this->writable(inst.output)
                        || !this->settled(inst.output)) {
                        return;
                    }
                    if (this->outbound.contains(inst.immediate)) {
                        this->violation("swap-in from storage " + std::to_string(inst.immediate)
                                        + " races an unfinished swap-out");
                    }
                    this->inbound[inst.output] = inst.immediate;
                    this->report.swap_ins++;
                    this->update_slots();
                    return;
                }
                case OpCode::FinishSwapIn: {
                    auto it = this->inbound.find(inst.output);
                    if (it == this->inbound.end() || it->second != inst.immediate) {
                        this->violation("finish of a swap-in that was never issued");
                        return;
                    }
                    this->inbound.erase(it);
                    this->set_tag(inst.output, this->tag_of(storage_bit | inst.immediate), vi);
                    return;
                }
                case OpCode::IssueSwapOut: {
                    const std::uint64_t f = inst.inputs[0];
                    if (!this->check_frame(f, "swap-out") || !this->readable(f) || !this->settled(f)) {
                        return;
                    }
                    if (this->outbound.contains(inst.immediate)) {
                        this->violation("two unfinished swap-outs to storage " + std::to_string(inst.immediate));
                    }
                    for (const auto& [frame, s] : this->inbound) {
                        if (s == inst.immediate) {
                            this->violation("swap-out to storage " + std::to_string(s) + " races a swap-in");
                        }
                    }
                    this->outbound[inst.immediate] = Outbound{this->tag_of(f), f};
                    this->outbound_sources.insert(f);
                    this->report.swap_outs++;
                    this->update_slots();
                    return;
                }
                case OpCode::FinishSwapOut: {
                    auto it = this->outbound.find(inst.immediate);
                    if (it == this->outbound.end() || it->second.source != inst.inputs[0]) {
                        this->violation("finish of a swap-out that was never issued");
                        return;
                    }
                    this->outbound_sources.erase(it->second.source);
                    auto snapshot = it->second.snapshot;
                    this->outbound.erase(it);
                    this->set_tag(storage_bit | inst.immediate, snapshot, vi);
                    return;
                }
                case OpCode::CopyFromPrefetch:
                case OpCode::CopyToPrefetch: {
                    const std::uint64_t dst = inst.output;
                    const std::uint64_t src = inst.inputs[0];
                    if (!this->check_frame(dst, "copy") || !this->check_frame(src, "copy") || !this->readable(src)
                        || !this->writable(dst) || !this->settled(src) || !this->settled(dst)) {
                        return;
                    }
                    const bool from = inst.op == OpCode::CopyFromPrefetch;
                    const std::uint64_t slot = from ? src : dst;
                    const std::uint64_t frame = from ? dst : src;
                    if (slot < this->report.frame_count || frame >= this->report.frame_count) {
                        this->violation("prefetch copy between frames " + std::to_string(frame) + " and "
                                        + std::to_string(slot) + " mixes up slots and frames");
                    }
                    this->set_tag(dst, this->tag_of(src), vi);
                    return;
                }
                case OpCode::NetworkBarrier:
                    this->network_pending.clear();
                    if (auto next = this->peek_virtual(); next && next->op == OpCode::NetworkBarrier) {
                        this->vreader.next();
                    }
                    return;
                default:
                    break;
                }
                this->protocol(inst, vi);
            }

            std::optional<Instruction> peek_virtual() {
                const std::uint64_t pos = this->vreader.position();
                if (pos >= this->vreader.header().instruction_count) {
                    return std::nullopt;
                }
                Instruction next = this->vreader.at(pos);
                this->vreader.seek(pos);
                return next;
            }

            void protocol(const Instruction& inst, InstructionNumber vi) {
                auto vnext = this->vreader.next();
                if (!vnext) {
                    this->violation("instruction with no virtual counterpart");
                    return;
                }
                const Instruction& v = *vnext;
                if (v.op != inst.op || v.width != inst.width || v.meta != inst.meta || v.immediate != inst.immediate
                    || v.num_inputs != inst.num_inputs) {
                    this->violation("does not match virtual instruction " + std::to_string(vi));
                    return;
                }
                auto vops = replacement::operand_pages(v, this->shift);
                auto pops = replacement::operand_pages(inst, this->shift);
                std::vector<std::pair<std::uint64_t, PageNumber>> writes;
                for (std::size_t k = 0; k != vops.size(); k++) {
                    const std::uint64_t vaddr = vops[k].slot == 0 ? v.output : v.inputs[vops[k].slot - 1];
                    const std::uint64_t paddr = pops[k].slot == 0 ? inst.output : inst.inputs[pops[k].slot - 1];
                    const std::uint64_t frame = pops[k].page;
                    const PageNumber page = vops[k].page;
                    if (pg_offset(vaddr, this->shift) != pg_offset(paddr, this->shift)) {
                        this->violation("operand offset changed in translation");
                    }
                    if (!this->check_frame(frame, "operand")) {
                        continue;
                    }
                    if (frame >= this->report.frame_count) {
                        this->violation("operand names prefetch slot " + std::to_string(frame));
                    }
                    auto t = this->tag_of(frame);
                    const bool holds = t && t->page == page && this->current(t);
                    if (vops[k].write) {
                        if (this->pages[page].version != 0 && !holds) {
                            this->violation("writes page " + std::to_string(page) + " at frame "
                                            + std::to_string(frame) + " where it is not resident");
                        }
                        if (this->writable(frame)) {
                            writes.emplace_back(frame, page);
                        }
                    } else if (!holds) {
                        this->violation("reads page " + std::to_string(page) + " at frame " + std::to_string(frame)
                                        + ", which does not hold its current contents");
                    } else {
                        this->readable(frame);
                    }
                    if (bytecode::is_network(inst.op)) {
                        this->network_pending.insert(frame);
                    }
                }
                for (const auto& [frame, page] : writes) {
                    PageInfo& pi = this->pages[page];
                    for (std::uint64_t loc : pi.holders) {
                        this->resident_delta(loc, -1);
                    }
                    pi.holders.clear();
                    pi.version++;
                    this->set_tag(frame, Tag{page, pi.version}, vi + 1);
                }
            }

            bytecode::ProgramReader vreader;
            bytecode::ProgramReader preader;
            PageShift shift = 0;
            std::uint64_t total_frames = 0;
            std::uint64_t position = 0;
            std::uint64_t resident = 0;
            std::unordered_map<PageNumber, PageInfo> pages;
            std::unordered_map<std::uint64_t, Tag> tags;
            std::unordered_map<std::uint64_t, StorageFrame> inbound;
            std::unordered_map<StorageFrame, Outbound> outbound;
            std::unordered_set<std::uint64_t> outbound_sources;
            std::unordered_set<std::uint64_t> network_pending;
            ReplayReport report;
        };
    }

    ReplayReport replay(const std::string& virtual_path, const std::string& physical_path) {
        return Replayer(virtual_path, physical_path).run();
    }
}
