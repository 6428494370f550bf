/**
 * @file drivers/config.hpp
 * @brief Driver parameters that the planner also needs (value sizes).
 */

#ifndef MEMPLAN_DRIVERS_CONFIG_HPP_
#define MEMPLAN_DRIVERS_CONFIG_HPP_

#include <cstdint>

namespace memplan::drivers {
    struct BitWireConfig {
        /** @brief Bytes occupied by one wire in the memory array. */
        std::uint32_t wire_bytes = 16;
        /** @brief Seed for the deterministic padding of wire values. */
        std::uint64_t seed = 0x6d656d706c616eULL;
    };

    /**
     * @brief Size table and limits for the leveled-batch driver.
     *
     * size_of(l, true) = relin_base * (l + 1) and
     * size_of(l, false) = unrelin_base * (l + 1).
     */
    struct LeveledBatchConfig {
        std::uint32_t max_level = 2;
        std::uint32_t dimension = 4096;
        std::uint64_t relin_base = 64 * 1024;
        std::uint64_t unrelin_base = 96 * 1024;

        std::uint64_t size_of(std::uint32_t level, bool relinearized) const;

        /** @brief Throws ConfigError if the table cannot hold a full slot vector. */
        void validate() const;

        std::uint64_t largest_size() const {
            return this->size_of(this->max_level, false);
        }
    };

    /** @brief Bytes of ciphertext header preceding the slot values. */
    constexpr std::uint64_t batch_header_bytes = 16;
    constexpr int fixed_point_bits = 20;
}

#endif
