#include "memplan/replacement/planner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "json.hpp"

#include "memplan/error.hpp"

namespace memplan::replacement {
    using bytecode::Instruction;
    using bytecode::OpCode;

    namespace {
        constexpr std::size_t annotation_chunk = 4096;

        void put_u64(std::byte* out, std::uint64_t v) {
            for (int i = 0; i != 8; i++) {
                out[i] = static_cast<std::byte>(v >> (8 * i));
            }
        }

        std::uint64_t get_u64(const std::byte* in) {
            std::uint64_t v = 0;
            for (int i = 0; i != 8; i++) {
                v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
            }
            return v;
        }

        class AnnotationReader {
        public:
            explicit AnnotationReader(const std::string& path) : file_path(path), in(path, std::ios::binary) {
                if (!this->in) {
                    throw IoError("cannot open annotation file " + path);
                }
            }

            std::array<InstructionNumber, operand_slots> next() {
                std::array<std::byte, annotation_record_size> raw;
                this->in.read(reinterpret_cast<char*>(raw.data()), raw.size());
                if (this->in.gcount() != static_cast<std::streamsize>(raw.size())) {
                    throw TruncatedProgram("annotation file " + this->file_path + " is shorter than its program");
                }
                std::array<InstructionNumber, operand_slots> out;
                for (std::size_t s = 0; s != operand_slots; s++) {
                    out[s] = get_u64(&raw[s * 8]);
                }
                return out;
            }

        private:
            std::string file_path;
            std::ifstream in;
        };
    }

    std::vector<OperandPage> operand_pages(const Instruction& inst, PageShift shift) {
        std::vector<OperandPage> out;
        if (!bytecode::has_address_operands(inst.op)) {
            return out;
        }
        const bytecode::OpInfo& oi = bytecode::info(inst.op);
        if (oi.has_output) {
            out.push_back({0, pg_num(inst.output, shift), true});
        }
        for (std::size_t i = 0; i != oi.arity; i++) {
            out.push_back({i + 1, pg_num(inst.inputs[i], shift), false});
        }
        return out;
    }

    void annotate(const std::string& virtual_path, const std::string& annotation_path) {
        bytecode::ReverseProgramReader reader(virtual_path);
        if (reader.header().dialect != bytecode::Dialect::Virtual) {
            throw FormatError(virtual_path + " is not a virtual program");
        }
        const PageShift shift = reader.header().page_shift;
        const std::uint64_t n = reader.header().instruction_count;

        std::ofstream out(annotation_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot create annotation file " + annotation_path);
        }
        std::unordered_map<PageNumber, InstructionNumber> next_seen;
        std::vector<std::byte> chunk(annotation_chunk * annotation_record_size);
        std::uint64_t chunk_lo = n;
        std::uint64_t chunk_hi = n;

        auto flush = [&]() {
            if (chunk_hi == chunk_lo) {
                return;
            }
            out.seekp(static_cast<std::streamoff>(chunk_lo * annotation_record_size));
            out.write(reinterpret_cast<const char*>(chunk.data()),
                      static_cast<std::streamsize>((chunk_hi - chunk_lo) * annotation_record_size));
            if (!out) {
                throw IoError("write failed on " + annotation_path);
            }
        };

        while (auto item = reader.next()) {
            auto [index, inst] = *item;
            if (index < chunk_lo) {
                flush();
                chunk_hi = index + 1;
                chunk_lo = chunk_hi >= annotation_chunk ? chunk_hi - annotation_chunk : 0;
            }
            std::array<InstructionNumber, operand_slots> rec;
            rec.fill(never);
            auto pages = operand_pages(inst, shift);
            for (const OperandPage& op : pages) {
                auto it = next_seen.find(op.page);
                rec[op.slot] = it == next_seen.end() ? never : it->second;
            }
            for (const OperandPage& op : pages) {
                next_seen[op.page] = index;
            }
            std::byte* dst = &chunk[(index - chunk_lo) * annotation_record_size];
            for (std::size_t s = 0; s != operand_slots; s++) {
                put_u64(dst + 8 * s, rec[s]);
            }
        }
        flush();
        out.close();
        if (!out) {
            throw IoError("failed to finalize " + annotation_path);
        }
    }

    PlanResult plan_replacement(const std::string& virtual_path, const std::string& annotation_path,
                                const std::string& physical_path, const PlanOptions& options) {
        bytecode::ProgramReader reader(virtual_path);
        const bytecode::ProgramHeader& vh = reader.header();
        if (vh.dialect != bytecode::Dialect::Virtual) {
            throw FormatError(virtual_path + " is not a virtual program");
        }
        const PageShift shift = vh.page_shift;
        AnnotationReader annotations(annotation_path);

        bytecode::ProgramHeader ph = vh;
        ph.dialect = bytecode::Dialect::Physical;
        ph.instruction_count = 0;
        bytecode::ProgramWriter writer(physical_path, ph);

        PagingCore core(CoreOptions{options.frames, options.policy, false});
        std::vector<PagingEvent> events;
        std::vector<PageAccess> accesses;

        auto translate = [&](std::uint64_t addr) {
            PageNumber page = pg_num(addr, shift);
            for (const PageAccess& a : accesses) {
                if (a.page == page) {
                    return pg_set_num(addr, a.frame, shift);
                }
            }
            throw InfeasiblePlan("operand page " + std::to_string(page) + " missing from its step");
        };

        while (auto next = reader.next()) {
            const InstructionNumber index = reader.position() - 1;
            Instruction inst = *next;
            auto ann = annotations.next();

            if (inst.op == OpCode::NetworkBarrier) {
                core.network_barrier();
                writer.append(inst);
                continue;
            }
            auto pages = operand_pages(inst, shift);
            accesses.clear();
            for (const OperandPage& op : pages) {
                auto it = std::find_if(accesses.begin(), accesses.end(),
                                       [&](const PageAccess& a) { return a.page == op.page; });
                if (it == accesses.end()) {
                    accesses.push_back({op.page, op.write, ann[op.slot]});
                } else {
                    it->write = it->write || op.write;
                }
            }
            if (bytecode::is_network(inst.op)) {
                core.network_post(accesses.front().page);
            }

            events.clear();
            try {
                core.step(index, accesses, events);
            } catch (const InfeasiblePlan& e) {
                throw InfeasiblePlan(virtual_path + ": " + e.what());
            }
            for (const PagingEvent& ev : events) {
                switch (ev.kind) {
                case PagingEvent::Kind::SwapIn:
                    writer.append(bytecode::directive::issue_swap_in(ev.frame, ev.storage));
                    writer.append(bytecode::directive::finish_swap_in(ev.frame, ev.storage));
                    break;
                case PagingEvent::Kind::SwapOut:
                    writer.append(bytecode::directive::issue_swap_out(ev.frame, ev.storage));
                    writer.append(bytecode::directive::finish_swap_out(ev.frame, ev.storage));
                    break;
                case PagingEvent::Kind::Barrier:
                    writer.append(bytecode::directive::network_barrier());
                    break;
                }
            }

            Instruction phys = inst;
            for (const OperandPage& op : pages) {
                std::uint64_t& field = op.slot == 0 ? phys.output : phys.inputs[op.slot - 1];
                field = translate(field);
            }
            writer.append(phys);
        }

        PlanResult result;
        result.stats = core.stats();
        result.input_instructions = vh.instruction_count;
        writer.header().frame_count = options.frames == never ? core.frames_used() : options.frames;
        writer.header().storage_frame_count = core.stats().storage_frames;
        writer.finish();
        result.header = writer.header();
        result.stats.frames = result.header.frame_count;
        return result;
    }

    PlanResult plan_replacement(const std::string& virtual_path, const std::string& physical_path,
                                const PlanOptions& options) {
        const std::string annotation_path = physical_path + ".ann";
        annotate(virtual_path, annotation_path);
        try {
            PlanResult r = plan_replacement(virtual_path, annotation_path, physical_path, options);
            std::remove(annotation_path.c_str());
            return r;
        } catch (...) {
            std::remove(annotation_path.c_str());
            throw;
        }
    }

    PlanResult plan_replacement_baseline(const std::string& virtual_path, const std::string& physical_path,
                                         std::uint64_t frames, Policy policy) {
        if (policy == Policy::Min) {
            throw ConfigError("baseline planner takes LRU or FIFO");
        }
        return plan_replacement(virtual_path, physical_path, PlanOptions{frames, policy});
    }

    std::string plan_stats_json(const PlanResult& r) {
        nlohmann::ordered_json j;
        j["frames"] = r.stats.frames;
        j["swap_ins"] = r.stats.swap_ins;
        j["swap_outs"] = r.stats.swap_outs;
        j["barriers_inserted"] = r.stats.barriers_inserted;
        j["peak_resident"] = r.stats.peak_resident;
        j["storage_frames"] = r.stats.storage_frames;
        j["dead_drops"] = r.stats.dead_drops;
        j["virtual_instructions"] = r.input_instructions;
        j["physical_instructions"] = r.header.instruction_count;
        return j.dump(2);
    }
}
