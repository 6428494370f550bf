#include "memplan/drivers/config.hpp"

#include <string>

#include "memplan/error.hpp"

namespace memplan::drivers {
    std::uint64_t LeveledBatchConfig::size_of(std::uint32_t level, bool relinearized) const {
        if (level > this->max_level) {
            throw ConfigError("level " + std::to_string(level) + " exceeds max level " + std::to_string(this->max_level));
        }
        return (relinearized ? this->relin_base : this->unrelin_base) * (level + 1);
    }

    void LeveledBatchConfig::validate() const {
        if (this->max_level > 15) {
            throw ConfigError("max_level must be at most 15");
        }
        if (this->dimension == 0) {
            throw ConfigError("dimension must be positive");
        }
        if (this->unrelin_base <= this->relin_base) {
            throw ConfigError("unrelinearized ciphertexts must be larger than relinearized ones");
        }
        if (this->relin_base % 8 != 0 || this->unrelin_base % 8 != 0) {
            throw ConfigError("ciphertext sizes must be multiples of 8 bytes");
        }
        if (this->relin_base < batch_header_bytes + 8ULL * this->dimension) {
            throw ConfigError("relin_base too small for " + std::to_string(this->dimension) + " slots");
        }
    }
}
