#include "memplan/drivers/bitwire.hpp"

#include <string>

#include "memplan/error.hpp"

namespace memplan::drivers {
    namespace {
        std::uint64_t splitmix64(std::uint64_t& state) {
            std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }
    }

    BitWireDriver::BitWireDriver(const BitWireConfig& config) : bytes(config.wire_bytes) {
        if (this->bytes == 0) {
            throw ConfigError("wire_bytes must be positive");
        }
        std::uint64_t state = config.seed;
        for (int v = 0; v != 2; v++) {
            this->pattern[v].resize(this->bytes);
            this->pattern[v][0] = static_cast<std::byte>(v);
            for (std::size_t i = 1; i < this->bytes; i++) {
                /* Nonzero so zeroed memory never passes for a wire. */
                this->pattern[v][i] = static_cast<std::byte>((splitmix64(state) % 255) + 1);
            }
        }
    }

    bool BitWireDriver::bit(const std::byte* w) const {
        const auto b = std::to_integer<unsigned>(w[0]);
        if (b > 1 || std::memcmp(w + 1, this->pattern[b].data() + 1, this->bytes - 1) != 0) {
            throw ProtocolError("wire value is not a valid encoding (byte 0 = " + std::to_string(b) + ")");
        }
        return b != 0;
    }
}
