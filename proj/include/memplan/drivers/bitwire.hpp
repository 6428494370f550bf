/**
 * @file drivers/bitwire.hpp
 * @brief Plaintext stand-in for a garbled-circuit backend.
 *
 * A wire is wire_bytes bytes: the logical bit in byte 0 and a padding
 * pattern, fixed per (seed, bit), in the rest. Every gate rewrites the full
 * output wire and checks the padding of its inputs, so a read of memory that
 * was never written as a wire is caught instead of silently yielding a bit.
 */

#ifndef MEMPLAN_DRIVERS_BITWIRE_HPP_
#define MEMPLAN_DRIVERS_BITWIRE_HPP_

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <vector>

#include "memplan/drivers/config.hpp"

namespace memplan::drivers {
    class BitWireDriver {
    public:
        explicit BitWireDriver(const BitWireConfig& config);

        std::size_t wire_bytes() const {
            return this->bytes;
        }

        void gate_and(std::byte* out, const std::byte* a, const std::byte* b) {
            const bool v = this->bit(a) & this->bit(b);
            this->and_count++;
            this->write(out, v);
        }

        void gate_xor(std::byte* out, const std::byte* a, const std::byte* b) {
            const bool v = this->bit(a) ^ this->bit(b);
            this->xor_count++;
            this->write(out, v);
        }

        /** @brief Public constant; free, as in garbling schemes with fixed constant labels. */
        void constant(std::byte* out, bool v) {
            this->write(out, v);
        }

        void input(std::byte* out, bool v) {
            this->write(out, v);
        }

        void copy(std::byte* out, const std::byte* a) const {
            this->write(out, this->bit(a));
        }

        bool reveal(const std::byte* w) const {
            return this->bit(w);
        }

        std::uint64_t and_gates() const {
            return this->and_count;
        }

        std::uint64_t xor_gates() const {
            return this->xor_count;
        }

    private:
        bool bit(const std::byte* w) const;

        void write(std::byte* out, bool v) const {
            std::memcpy(out, this->pattern[v].data(), this->bytes);
        }

        std::size_t bytes;
        std::vector<std::byte> pattern[2];
        std::uint64_t and_count = 0;
        std::uint64_t xor_count = 0;
    };
}

#endif
