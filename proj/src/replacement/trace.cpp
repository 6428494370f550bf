#include "memplan/replacement/trace.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <unordered_map>

#include "memplan/error.hpp"

namespace memplan::replacement {
    std::vector<TraceAccess> reads(const std::vector<PageNumber>& pages) {
        std::vector<TraceAccess> out;
        out.reserve(pages.size());
        for (PageNumber p : pages) {
            out.push_back({p, false});
        }
        return out;
    }

    ReplacementStats plan_trace(const std::vector<TraceAccess>& trace, std::uint64_t frames, Policy policy) {
        std::vector<InstructionNumber> next_use(trace.size(), never);
        std::unordered_map<PageNumber, InstructionNumber> seen;
        for (std::size_t i = trace.size(); i-- > 0;) {
            auto it = seen.find(trace[i].page);
            if (it != seen.end()) {
                next_use[i] = it->second;
            }
            seen[trace[i].page] = i;
        }

        PagingCore core(CoreOptions{frames, policy, true});
        std::vector<PagingEvent> events;
        for (std::size_t i = 0; i != trace.size(); i++) {
            PageAccess a{trace[i].page, trace[i].write, next_use[i]};
            events.clear();
            core.step(i, std::span<PageAccess>(&a, 1), events);
        }
        return core.stats();
    }

    namespace {
        class Search {
        public:
            Search(const std::vector<std::uint8_t>& seq, const std::vector<bool>& writes, std::uint64_t frames,
                   unsigned out_cost)
                : seq(seq), writes(writes), frames(frames), out_cost(out_cost), future(seq.size() + 1, 0) {
                for (std::size_t i = seq.size(); i-- > 0;) {
                    this->future[i] = this->future[i + 1] | (1u << seq[i]);
                }
                this->memo.assign((seq.size() + 1) << 16, -1);
            }

            std::uint32_t solve(std::size_t pos, std::uint32_t resident, std::uint32_t dirty) {
                if (pos == this->seq.size()) {
                    return 0;
                }
                std::int32_t& slot = this->memo[(pos << 16) | (resident << 8) | dirty];
                if (slot >= 0) {
                    return static_cast<std::uint32_t>(slot);
                }
                const std::uint32_t bit = 1u << this->seq[pos];
                const std::uint32_t wbit = this->writes[pos] ? bit : 0;
                std::uint32_t best;
                if (resident & bit) {
                    best = this->solve(pos + 1, resident, dirty | wbit);
                } else if (static_cast<std::uint64_t>(std::popcount(resident)) < this->frames) {
                    best = 1 + this->solve(pos + 1, resident | bit, dirty | wbit);
                } else {
                    best = UINT32_MAX;
                    for (std::uint32_t r = resident; r != 0; r &= r - 1) {
                        const std::uint32_t v = r & -r;
                        const bool live = (this->future[pos] & v) != 0;
                        const std::uint32_t writeback = (dirty & v) && live ? this->out_cost : 0;
                        std::uint32_t cost = 1 + writeback
                                             + this->solve(pos + 1, (resident & ~v) | bit, ((dirty & ~v) | wbit));
                        best = std::min(best, cost);
                    }
                }
                slot = static_cast<std::int32_t>(best);
                return best;
            }

        private:
            const std::vector<std::uint8_t>& seq;
            const std::vector<bool>& writes;
            std::uint64_t frames;
            unsigned out_cost;
            std::vector<std::uint32_t> future;
            std::vector<std::int32_t> memo;
        };
    }

    BruteForceResult brute_force_min(const std::vector<TraceAccess>& trace, std::uint64_t frames) {
        if (trace.size() > brute_force_max_trace) {
            throw SpecError("brute force limited to " + std::to_string(brute_force_max_trace) + " accesses");
        }
        if (frames == 0 || frames > brute_force_max_frames) {
            throw SpecError("brute force needs 1 to " + std::to_string(brute_force_max_frames) + " frames");
        }
        std::map<PageNumber, std::uint8_t> ids;
        std::vector<std::uint8_t> seq;
        std::vector<bool> writes;
        for (const TraceAccess& a : trace) {
            auto [it, inserted] = ids.try_emplace(a.page, static_cast<std::uint8_t>(ids.size()));
            if (ids.size() > brute_force_max_pages) {
                throw SpecError("brute force limited to " + std::to_string(brute_force_max_pages) + " pages");
            }
            seq.push_back(it->second);
            writes.push_back(a.write);
        }
        BruteForceResult result;
        result.min_swap_ins = Search(seq, writes, frames, 0).solve(0, 0, 0);
        result.min_total_swaps = Search(seq, writes, frames, 1).solve(0, 0, 0);
        return result;
    }
}
