#include "memplan/engine/io.hpp"

#include <algorithm>
#include <sstream>

#include "memplan/drivers/fixed_point.hpp"
#include "memplan/error.hpp"

namespace memplan::engine {
    std::string format_u128(u128 value) {
        if (value == 0) {
            return "0";
        }
        std::string s;
        while (value != 0) {
            s.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
            value /= 10;
        }
        std::reverse(s.begin(), s.end());
        return s;
    }

    u128 parse_u128(const std::string& text) {
        if (text.empty()) {
            throw InputError("empty integer");
        }
        u128 v = 0;
        for (char c : text) {
            if (c < '0' || c > '9') {
                throw InputError("malformed integer '" + text + "'");
            }
            const u128 next = v * 10 + static_cast<unsigned>(c - '0');
            if (next / 10 != v) {
                throw InputError("integer '" + text + "' exceeds 128 bits");
            }
            v = next;
        }
        return v;
    }

    u128 InputReader::next_integer(unsigned width) {
        std::string token;
        if (!(this->in >> token)) {
            throw InputError("input exhausted after " + std::to_string(this->items) + " values");
        }
        u128 v = parse_u128(token);
        if (width < 128 && (v >> width) != 0) {
            throw InputError("input value " + token + " does not fit in " + std::to_string(width) + " bits");
        }
        this->items++;
        return v;
    }

    std::vector<std::int64_t> InputReader::next_row(std::size_t count) {
        std::string line;
        while (std::getline(this->in, line)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                break;
            }
            line.clear();
        }
        if (line.empty()) {
            throw InputError("input exhausted after " + std::to_string(this->items) + " rows");
        }
        std::istringstream row(line);
        std::vector<std::int64_t> values;
        std::string token;
        while (row >> token) {
            values.push_back(drivers::parse_fixed(token));
        }
        if (values.size() != count) {
            throw InputError("input row " + std::to_string(this->items) + " has " + std::to_string(values.size())
                             + " values, expected " + std::to_string(count));
        }
        this->items++;
        return values;
    }

    void write_integer(std::ostream& out, u128 value) {
        out << format_u128(value) << '\n';
    }

    void write_row(std::ostream& out, const std::vector<std::int64_t>& row) {
        for (std::size_t i = 0; i != row.size(); i++) {
            if (i != 0) {
                out << ' ';
            }
            out << drivers::format_fixed(row[i]);
        }
        out << '\n';
    }
}
