/**
 * @file engine/io.hpp
 * @brief Text formats for program inputs and outputs.
 *
 * Bit-wire programs use one unsigned decimal integer per Input/Output
 * instruction, in program order. Batch programs use one row of
 * whitespace-separated fixed-point decimals per Input/Output instruction.
 */

#ifndef MEMPLAN_ENGINE_IO_HPP_
#define MEMPLAN_ENGINE_IO_HPP_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace memplan::engine {
    using u128 = unsigned __int128;

    std::string format_u128(u128 value);
    u128 parse_u128(const std::string& text);

    class InputReader {
    public:
        explicit InputReader(std::istream& in) : in(in) {}

        /** @throws InputError on underrun or a value wider than @p width bits. */
        u128 next_integer(unsigned width);

        std::vector<std::int64_t> next_row(std::size_t count);

        std::uint64_t consumed() const {
            return this->items;
        }

    private:
        std::istream& in;
        std::uint64_t items = 0;
    };

    void write_integer(std::ostream& out, u128 value);
    void write_row(std::ostream& out, const std::vector<std::int64_t>& row);
}

#endif
