/**
 * @file dsl/batch.hpp
 * @brief Ciphertext handles for the leveled-batch dialect.
 *
 * Level algebra enforced at build time:
 *  - add: operands share (level, relinearized); the result keeps both.
 *  - mul_no_relin: relinearized operands at the same level >= 1; the result
 *    is unrelinearized at that level.
 *  - relin_rescale: unrelinearized input at level l >= 1; the result is
 *    relinearized at level l - 1.
 *  - add_plain keeps the level; mul_plain needs a relinearized operand at
 *    level >= 1 and drops one level.
 */

#ifndef MEMPLAN_DSL_BATCH_HPP_
#define MEMPLAN_DSL_BATCH_HPP_

#include <cstdint>

#include "memplan/bytecode/instruction.hpp"
#include "memplan/dsl/context.hpp"

namespace memplan::dsl {
    class Batch {
    public:
        Batch() = default;
        Batch(std::uint8_t level, bool relinearized, std::uint16_t element_count);
        Batch(const Batch&) = delete;
        Batch& operator=(const Batch&) = delete;
        Batch(Batch&& other) noexcept;
        Batch& operator=(Batch&& other) noexcept;
        ~Batch();

        /** @brief A fresh input ciphertext at the program's maximum level. */
        static Batch input(std::uint16_t element_count, Party party = Party::Garbler);

        void mark_input(Party party);
        void mark_output() const;

        std::uint8_t level() const {
            return this->meta.level;
        }

        bool relinearized() const {
            return this->meta.relinearized;
        }

        std::uint16_t element_count() const {
            return this->count;
        }

        VirtAddr address() const {
            return this->addr;
        }

        bool valid() const {
            return this->count != 0;
        }

        bytecode::BatchMeta metadata() const {
            return this->meta;
        }

        friend Batch operator+(const Batch& a, const Batch& b);
        friend Batch mul_no_relin(const Batch& a, const Batch& b);
        friend Batch relin_rescale(const Batch& a);
        /** @brief Adds the fixed-point scalar @p raw_value to every slot. */
        friend Batch add_plain(const Batch& a, std::int64_t raw_value);
        /** @brief Multiplies every slot by the fixed-point scalar @p raw_value. */
        friend Batch mul_plain(const Batch& a, std::int64_t raw_value);

    private:
        void release();

        VirtAddr addr = 0;
        std::uint16_t count = 0;
        bytecode::BatchMeta meta;
        bool input_marked = false;
    };

    /** @brief a * b followed by a single relinearize-and-rescale. */
    inline Batch operator*(const Batch& a, const Batch& b) {
        return relin_rescale(mul_no_relin(a, b));
    }

    /** @brief Fixed-point encoding of @p value (scale 2^20, round to nearest). */
    std::int64_t encode_fixed(double value);
}

#endif
