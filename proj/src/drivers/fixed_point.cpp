#include "memplan/drivers/fixed_point.hpp"

#include <cctype>

#include "memplan/error.hpp"

namespace memplan::drivers {
    std::string format_fixed(std::int64_t raw) {
        const bool negative = raw < 0;
        unsigned __int128 mag = negative ? -static_cast<__int128>(raw) : static_cast<__int128>(raw);
        const unsigned __int128 mask = (static_cast<unsigned __int128>(1) << fixed_point_bits) - 1;
        auto whole = static_cast<std::uint64_t>(mag >> fixed_point_bits);
        unsigned __int128 frac = mag & mask;
        std::string out = negative ? "-" : "";
        out += std::to_string(whole);
        if (frac != 0) {
            out += '.';
            while (frac != 0) {
                frac *= 10;
                out += static_cast<char>('0' + static_cast<int>(frac >> fixed_point_bits));
                frac &= mask;
            }
        }
        return out;
    }

    std::int64_t parse_fixed(std::string_view text) {
        std::size_t i = 0;
        bool negative = false;
        if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
            negative = text[i] == '-';
            i++;
        }
        unsigned __int128 whole = 0;
        std::size_t int_digits = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            whole = whole * 10 + static_cast<unsigned>(text[i] - '0');
            if (whole > (static_cast<unsigned __int128>(1) << (63 - fixed_point_bits))) {
                throw InputError("fixed-point value out of range: " + std::string(text));
            }
            i++;
            int_digits++;
        }
        unsigned __int128 frac = 0;
        unsigned __int128 scale = 1;
        std::size_t frac_digits = 0;
        if (i < text.size() && text[i] == '.') {
            i++;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                if (frac_digits < 30) {
                    frac = frac * 10 + static_cast<unsigned>(text[i] - '0');
                    scale *= 10;
                }
                frac_digits++;
                i++;
            }
        }
        if (i != text.size() || int_digits + frac_digits == 0) {
            throw InputError("malformed fixed-point value: '" + std::string(text) + "'");
        }
        const unsigned __int128 frac_raw = ((frac << fixed_point_bits) + scale / 2) / scale;
        const __int128 mag = static_cast<__int128>((whole << fixed_point_bits) + frac_raw);
        return static_cast<std::int64_t>(negative ? -mag : mag);
    }
}
