/**
 * @file dsl/sharded_array.hpp
 * @brief Block partition of a global array across workers.
 */

#ifndef MEMPLAN_DSL_SHARDED_ARRAY_HPP_
#define MEMPLAN_DSL_SHARDED_ARRAY_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "memplan/dsl/batch.hpp"
#include "memplan/dsl/integer.hpp"
#include "memplan/error.hpp"

namespace memplan::dsl {
    /**
     * @brief Worker w owns the contiguous global range
     * [w * total / workers, (w + 1) * total / workers).
     */
    template <typename T>
    class ShardedArray {
    public:
        ShardedArray(std::uint64_t total_length, WorkerId worker_id, WorkerId worker_count)
            : total(total_length), self(worker_id), workers(worker_count) {
            if (worker_count == 0 || worker_id >= worker_count) {
                throw BuilderError("bad worker id for ShardedArray");
            }
            if (total_length % worker_count != 0) {
                throw BuilderError("ShardedArray length " + std::to_string(total_length)
                                   + " is not divisible by the worker count");
            }
            this->elements.resize(this->local_size());
        }

        std::uint64_t total_length() const {
            return this->total;
        }

        std::uint64_t local_size() const {
            return this->total / this->workers;
        }

        std::uint64_t begin_index() const {
            return this->self * this->local_size();
        }

        std::uint64_t end_index() const {
            return this->begin_index() + this->local_size();
        }

        WorkerId owner(std::uint64_t global) const {
            return static_cast<WorkerId>(global / this->local_size());
        }

        std::uint64_t to_global(std::uint64_t local) const {
            return this->begin_index() + local;
        }

        std::uint64_t to_local(std::uint64_t global) const {
            if (global < this->begin_index() || global >= this->end_index()) {
                throw BuilderError("global index " + std::to_string(global) + " is not local to worker "
                                   + std::to_string(this->self));
            }
            return global - this->begin_index();
        }

        T& operator[](std::uint64_t local) {
            return this->elements.at(local);
        }

        const T& operator[](std::uint64_t local) const {
            return this->elements.at(local);
        }

        std::vector<T>& local() {
            return this->elements;
        }

    private:
        std::uint64_t total;
        WorkerId self;
        WorkerId workers;
        std::vector<T> elements;
    };

    inline void send(const Integer& value, WorkerId peer) {
        post_send(value.address(), value.width(), 0, peer);
    }

    inline void receive(const Integer& value, WorkerId peer) {
        post_receive(value.address(), value.width(), 0, peer);
    }

    inline void send(const Batch& value, WorkerId peer) {
        post_send(value.address(), value.element_count(), value.metadata().pack(), peer);
    }

    inline void receive(const Batch& value, WorkerId peer) {
        post_receive(value.address(), value.element_count(), value.metadata().pack(), peer);
    }
}

#endif
