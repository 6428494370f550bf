#include "memplan/dsl/context.hpp"

#include <string>

#include "memplan/error.hpp"

namespace memplan::dsl {
    namespace {
        thread_local BuilderContext* active = nullptr;

        void check_peer(WorkerId peer) {
            const ProgramOptions& opts = BuilderContext::current().options();
            if (peer == opts.worker_id) {
                throw BuilderError("worker " + std::to_string(peer) + " cannot exchange data with itself");
            }
            if (peer >= opts.worker_count) {
                throw BuilderError("peer worker " + std::to_string(peer) + " out of range for "
                                   + std::to_string(opts.worker_count) + " workers");
            }
        }
    }

    BuilderContext::BuilderContext(const ProgramOptions& options, bytecode::ProgramWriter& out)
        : opts(options), sink(out), alloc(options.page_shift), previous(active) {
        if (options.worker_id >= options.worker_count) {
            throw BuilderError("worker id " + std::to_string(options.worker_id) + " out of range for "
                               + std::to_string(options.worker_count) + " workers");
        }
        active = this;
    }

    BuilderContext::~BuilderContext() {
        active = this->previous;
    }

    BuilderContext& BuilderContext::current() {
        if (active == nullptr) {
            throw BuilderError("no active builder context");
        }
        return *active;
    }

    VirtAddr BuilderContext::allocate(std::uint64_t units) {
        return this->alloc.allocate(units);
    }

    void BuilderContext::deallocate(VirtAddr addr) {
        this->alloc.deallocate(addr);
    }

    void BuilderContext::emit(const bytecode::Instruction& inst) {
        this->sink.append(inst);
    }

    void post_send(VirtAddr addr, std::uint16_t width, std::uint8_t meta, WorkerId peer) {
        check_peer(peer);
        BuilderContext::current().emit(bytecode::make(bytecode::OpCode::NetworkPostSend, width, 0, {addr}, peer, meta));
    }

    void post_receive(VirtAddr addr, std::uint16_t width, std::uint8_t meta, WorkerId peer) {
        check_peer(peer);
        BuilderContext::current().emit(bytecode::make(bytecode::OpCode::NetworkPostReceive, width, addr, {}, peer, meta));
    }

    void barrier() {
        BuilderContext::current().emit(bytecode::directive::network_barrier());
    }
}
