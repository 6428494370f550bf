/**
 * @file dsl/context.hpp
 * @brief Build context shared by all DSL handles of one program.
 *
 * A DSL program is an ordinary C++ function. Running it with an active
 * BuilderContext emits a virtual bytecode: every handle operation allocates
 * its result through the placement allocator and appends one instruction.
 * No value is ever computed at build time.
 */

#ifndef MEMPLAN_DSL_CONTEXT_HPP_
#define MEMPLAN_DSL_CONTEXT_HPP_

#include <cstdint>
#include <functional>

#include "memplan/bytecode/program.hpp"
#include "memplan/drivers/config.hpp"
#include "memplan/placement/allocator.hpp"

namespace memplan::dsl {
    enum class Party : std::uint8_t { Garbler = 0, Evaluator = 1 };

    struct ProgramOptions {
        WorkerId worker_id = 0;
        WorkerId worker_count = 1;
        std::uint64_t problem_size = 0;
        bytecode::DriverId driver = bytecode::DriverId::BitWire;
        PageShift page_shift = 12;
        drivers::LeveledBatchConfig batch;
        /** @brief Workload-specific knob (tile size for tiled matmul); 0 selects a default. */
        std::uint64_t tile = 0;
    };

    class BuilderContext {
    public:
        BuilderContext(const ProgramOptions& options, bytecode::ProgramWriter& sink);
        BuilderContext(const BuilderContext&) = delete;
        BuilderContext& operator=(const BuilderContext&) = delete;
        ~BuilderContext();

        /** @brief The active context of this thread; throws BuilderError if none. */
        static BuilderContext& current();

        const ProgramOptions& options() const {
            return this->opts;
        }

        placement::Allocator& allocator() {
            return this->alloc;
        }

        VirtAddr allocate(std::uint64_t units);
        void deallocate(VirtAddr addr);

        void emit(const bytecode::Instruction& inst);

        std::uint64_t emitted() const {
            return this->sink.count();
        }

    private:
        ProgramOptions opts;
        bytecode::ProgramWriter& sink;
        placement::Allocator alloc;
        BuilderContext* previous;
    };

    using ProgramFn = std::function<void(const ProgramOptions&)>;

    /* Intra-party networking between workers. */
    void post_send(VirtAddr addr, std::uint16_t width, std::uint8_t meta, WorkerId peer);
    void post_receive(VirtAddr addr, std::uint16_t width, std::uint8_t meta, WorkerId peer);
    void barrier();
}

#endif
