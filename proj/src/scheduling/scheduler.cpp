#include "memplan/scheduling/scheduler.hpp"

#include <cmath>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "memplan/bytecode/program.hpp"
#include "memplan/error.hpp"

namespace memplan::scheduling {
    using bytecode::Instruction;
    using bytecode::OpCode;
    namespace directive = bytecode::directive;

    void validate(const SchedulerConfig& cfg) {
        if (cfg.lookahead > 0 && cfg.prefetch_frames == 0) {
            throw ConfigError("lookahead " + std::to_string(cfg.lookahead) + " needs at least one prefetch frame");
        }
    }

    std::uint64_t little_law_buffer(double bandwidth, double latency, std::uint64_t page_bytes) {
        if (bandwidth <= 0 || latency <= 0 || page_bytes == 0) {
            return 0;
        }
        const double frames = bandwidth * latency / static_cast<double>(page_bytes);
        return static_cast<std::uint64_t>(std::ceil(frames * (1 - 1e-12)));
    }

    namespace {
        struct SwapEvent {
            bool in;
            FrameNumber frame;
            StorageFrame storage;
            /* Swap-ins: unit of the latest earlier swap-out to the same storage frame. */
            std::optional<std::uint64_t> after_unit;
            std::optional<std::uint64_t> slot;
        };

        struct Unit {
            std::uint64_t index;
            std::vector<SwapEvent> events;
            std::optional<Instruction> inst;
        };

        enum class SlotState { Free, Inbound, Outbound };

        struct Slot {
            SlotState state = SlotState::Free;
            StorageFrame storage = 0;
            std::uint64_t sequence = 0;
        };

        class Scheduler {
        public:
            Scheduler(bytecode::ProgramReader& reader, bytecode::ProgramWriter& writer, const SchedulerConfig& cfg)
                : reader(reader), writer(writer), cfg(cfg), base(reader.header().frame_count),
                  slots(cfg.prefetch_frames) {}

            SchedulerStats run() {
                bool more = true;
                while (more || !this->window.empty()) {
                    while (more && this->window.size() < this->cfg.lookahead + 1) {
                        more = this->read_unit();
                    }
                    if (this->window.empty()) {
                        break;
                    }
                    this->issue_ahead();
                    this->emit_front();
                }
                while (auto oldest = this->oldest_outbound()) {
                    this->finish_outbound(*oldest);
                }
                this->st.output_instructions = this->writer.count();
                return this->st;
            }

        private:
            bool read_unit() {
                Unit unit{this->units_read, {}, std::nullopt};
                while (auto inst = this->reader.next()) {
                    if (inst->op == OpCode::IssueSwapIn || inst->op == OpCode::IssueSwapOut) {
                        auto finish = this->reader.next();
                        const OpCode expect =
                            inst->op == OpCode::IssueSwapIn ? OpCode::FinishSwapIn : OpCode::FinishSwapOut;
                        if (!finish || finish->op != expect || bytecode::swap_frame(*finish) != bytecode::swap_frame(*inst)
                            || finish->immediate != inst->immediate) {
                            throw CorruptProgram(this->reader.path() + ": unpaired swap directive at instruction "
                                                 + std::to_string(this->reader.position() - 1));
                        }
                        SwapEvent ev{inst->op == OpCode::IssueSwapIn, bytecode::swap_frame(*inst), inst->immediate,
                                     std::nullopt, std::nullopt};
                        if (ev.in) {
                            auto it = this->last_out_unit.find(ev.storage);
                            if (it != this->last_out_unit.end()) {
                                ev.after_unit = it->second;
                            }
                            this->pending_ins.push_back({unit.index, unit.events.size()});
                        } else {
                            this->last_out_unit[ev.storage] = unit.index;
                        }
                        unit.events.push_back(ev);
                        continue;
                    }
                    if (bytecode::is_paging_directive(inst->op)) {
                        throw CorruptProgram(this->reader.path() + ": input is already scheduled");
                    }
                    unit.inst = *inst;
                    break;
                }
                const bool more = unit.inst.has_value();
                if (more || !unit.events.empty()) {
                    this->window.push_back(std::move(unit));
                    this->units_read++;
                }
                return more;
            }

            SwapEvent& event_at(std::pair<std::uint64_t, std::size_t> ref) {
                return this->window[ref.first - this->window.front().index].events[ref.second];
            }

            std::optional<std::size_t> oldest_outbound() const {
                std::optional<std::size_t> best;
                for (std::size_t i = 0; i != this->slots.size(); i++) {
                    if (this->slots[i].state == SlotState::Outbound
                        && (!best || this->slots[i].sequence < this->slots[*best].sequence)) {
                        best = i;
                    }
                }
                return best;
            }

            void finish_outbound(std::size_t i) {
                Slot& s = this->slots[i];
                this->writer.append(directive::finish_swap_out(this->base + i, s.storage));
                this->outbound_by_storage.erase(s.storage);
                s.state = SlotState::Free;
            }

            /* Lowest free slot, waiting for the oldest outbound write if none is free. */
            std::optional<std::size_t> acquire_slot() {
                for (std::size_t i = 0; i != this->slots.size(); i++) {
                    if (this->slots[i].state == SlotState::Free) {
                        return i;
                    }
                }
                auto oldest = this->oldest_outbound();
                if (!oldest) {
                    return std::nullopt;
                }
                this->finish_outbound(*oldest);
                this->st.forced_finishes++;
                return oldest;
            }

            bool issue(SwapEvent& ev) {
                auto pending = this->outbound_by_storage.find(ev.storage);
                if (pending != this->outbound_by_storage.end()) {
                    this->finish_outbound(pending->second);
                }
                auto slot = this->acquire_slot();
                if (!slot) {
                    return false;
                }
                Slot& s = this->slots[*slot];
                s.state = SlotState::Inbound;
                s.storage = ev.storage;
                s.sequence = this->sequence++;
                ev.slot = *slot;
                this->writer.append(directive::issue_swap_in(this->base + *slot, ev.storage));
                return true;
            }

            void issue_ahead() {
                const std::uint64_t front = this->window.front().index;
                while (!this->pending_ins.empty()) {
                    auto ref = this->pending_ins.front();
                    if (ref.first > front + this->cfg.lookahead) {
                        break;
                    }
                    SwapEvent& ev = this->event_at(ref);
                    if (ev.after_unit && *ev.after_unit >= front) {
                        break;
                    }
                    if (!this->issue(ev)) {
                        break;
                    }
                    if (ref.first > front) {
                        this->st.hoisted++;
                    }
                    this->pending_ins.pop_front();
                }
            }

            void emit_front() {
                Unit& unit = this->window.front();
                for (std::size_t e = 0; e != unit.events.size(); e++) {
                    SwapEvent& ev = unit.events[e];
                    if (ev.in) {
                        this->st.swap_ins++;
                        if (this->slots.empty()) {
                            this->writer.append(directive::issue_swap_in(ev.frame, ev.storage));
                            this->writer.append(directive::finish_swap_in(ev.frame, ev.storage));
                        } else {
                            if (!ev.slot) {
                                if (!this->issue(ev)) {
                                    throw CorruptProgram("no prefetch slot for a swap-in at its use");
                                }
                            }
                            FrameNumber slot_frame = this->base + *ev.slot;
                            this->writer.append(directive::finish_swap_in(slot_frame, ev.storage));
                            this->writer.append(directive::copy_from_prefetch(ev.frame, slot_frame));
                            this->slots[*ev.slot].state = SlotState::Free;
                        }
                        if (!this->pending_ins.empty() && this->pending_ins.front() == std::make_pair(unit.index, e)) {
                            this->pending_ins.pop_front();
                        }
                    } else {
                        this->st.swap_outs++;
                        auto previous = this->outbound_by_storage.find(ev.storage);
                        if (previous != this->outbound_by_storage.end()) {
                            this->finish_outbound(previous->second);
                        }
                        auto slot = this->slots.empty() ? std::nullopt : this->acquire_slot();
                        if (!slot) {
                            if (!this->slots.empty()) {
                                this->st.direct_swap_outs++;
                            }
                            this->writer.append(directive::issue_swap_out(ev.frame, ev.storage));
                            this->writer.append(directive::finish_swap_out(ev.frame, ev.storage));
                            continue;
                        }
                        FrameNumber slot_frame = this->base + *slot;
                        Slot& s = this->slots[*slot];
                        s.state = SlotState::Outbound;
                        s.storage = ev.storage;
                        s.sequence = this->sequence++;
                        this->outbound_by_storage[ev.storage] = *slot;
                        this->writer.append(directive::copy_to_prefetch(slot_frame, ev.frame));
                        this->writer.append(directive::issue_swap_out(slot_frame, ev.storage));
                    }
                }
                if (unit.inst) {
                    this->writer.append(*unit.inst);
                }
                this->window.pop_front();
            }

            bytecode::ProgramReader& reader;
            bytecode::ProgramWriter& writer;
            SchedulerConfig cfg;
            FrameNumber base;
            std::vector<Slot> slots;
            std::deque<Unit> window;
            std::deque<std::pair<std::uint64_t, std::size_t>> pending_ins;
            std::unordered_map<StorageFrame, std::uint64_t> last_out_unit;
            std::unordered_map<StorageFrame, std::size_t> outbound_by_storage;
            std::uint64_t units_read = 0;
            std::uint64_t sequence = 0;
            SchedulerStats st;
        };
    }

    SchedulerStats schedule(const std::string& input_path, const std::string& output_path,
                            const SchedulerConfig& cfg) {
        validate(cfg);
        bytecode::ProgramReader reader(input_path);
        const bytecode::ProgramHeader& in = reader.header();
        if (in.dialect != bytecode::Dialect::Physical || in.prefetch_frames != 0) {
            throw FormatError(input_path + " is not an unscheduled physical program");
        }
        bytecode::ProgramHeader out = in;
        out.prefetch_frames = cfg.prefetch_frames;
        out.instruction_count = 0;
        bytecode::ProgramWriter writer(output_path, out);
        Scheduler scheduler(reader, writer, cfg);
        SchedulerStats st = scheduler.run();
        writer.finish();
        return st;
    }
}
