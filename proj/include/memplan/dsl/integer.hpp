/**
 * @file dsl/integer.hpp
 * @brief Integer handles for the bit-wire dialect.
 *
 * An Integer holds only the virtual address and width of its wires. Owning
 * handles release their address when destroyed or reassigned. A slice()
 * is a non-owning view of a contiguous range of wires inside another
 * handle; it must not outlive the handle it views.
 */

#ifndef MEMPLAN_DSL_INTEGER_HPP_
#define MEMPLAN_DSL_INTEGER_HPP_

#include <cstdint>

#include "memplan/bytecode/instruction.hpp"
#include "memplan/dsl/context.hpp"

namespace memplan::dsl {
    class Integer {
    public:
        Integer() = default;
        explicit Integer(std::uint16_t width);
        Integer(const Integer& other);
        Integer(Integer&& other) noexcept;
        ~Integer();

        /**
         * @brief Copy assignment. An owning target is rebound to a fresh
         * copy of @p other (its old address is freed first); a view target
         * receives the wires of @p other in place.
         */
        Integer& operator=(const Integer& other);
        Integer& operator=(Integer&& other);

        static Integer constant(std::uint16_t width, std::uint64_t value);

        void mark_input(Party party);
        void mark_output() const;

        /** @brief Writes the wires of @p source into this handle's wires. */
        void assign(const Integer& source);

        /** @brief Overwrites this handle's wires with a public constant. */
        void set_constant(std::uint64_t value);

        Integer slice(std::uint16_t offset, std::uint16_t width) const;
        Integer bit(std::uint16_t index) const {
            return this->slice(index, 1);
        }

        std::uint16_t width() const {
            return this->w;
        }

        VirtAddr address() const {
            return this->addr;
        }

        bool valid() const {
            return this->w != 0;
        }

        bool is_view() const {
            return this->view;
        }

        friend Integer operator+(const Integer& a, const Integer& b);
        friend Integer operator-(const Integer& a, const Integer& b);
        friend Integer operator&(const Integer& a, const Integer& b);
        friend Integer operator^(const Integer& a, const Integer& b);
        friend Integer operator|(const Integer& a, const Integer& b);
        friend Integer operator~(const Integer& a);
        friend Integer operator<<(const Integer& a, std::uint16_t shift);
        friend Integer operator>>(const Integer& a, std::uint16_t shift);
        friend Integer operator>=(const Integer& a, const Integer& b);
        friend Integer operator==(const Integer& a, const Integer& b);
        friend Integer increment(const Integer& a);
        friend Integer mux(const Integer& selector, const Integer& if_one, const Integer& if_zero);

    private:
        void release();
        void require_valid(const char* what) const;

        VirtAddr addr = 0;
        std::uint16_t w = 0;
        bool view = false;
        bool input_marked = false;
    };

    using Bit = Integer;

    /* Derived operations built from the opcodes above. */

    /** @brief Widens @p a to @p width wires with zeros in the high wires. */
    Integer zero_extend(const Integer& a, std::uint16_t width);

    /**
     * @brief a * b mod 2^width by shift-and-add over the low
     * @p multiplier_bits wires of b (the remaining wires of b must be zero).
     */
    Integer multiply(const Integer& a, const Integer& b, std::uint16_t multiplier_bits);

    /** @brief Number of one wires in @p a, via an adder tree. */
    Integer popcount(const Integer& a);

    /** @brief Compare-exchange: afterwards a holds the smaller key if @p ascending. */
    void compare_swap(Integer& a, Integer& b, std::uint16_t key_offset, std::uint16_t key_width, bool ascending);
}

#endif
