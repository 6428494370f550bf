/**
 * @file drivers/batch.hpp
 * @brief Plaintext stand-in for a leveled homomorphic batch scheme.
 *
 * A ciphertext occupies size_of(level, relinearized) bytes: a 16-byte header
 * (level, relinearized flag, slot count, check word) followed by the slots as
 * fixed-point values. Operations enforce the same level rules a real leveled
 * scheme would.
 */

#ifndef MEMPLAN_DRIVERS_BATCH_HPP_
#define MEMPLAN_DRIVERS_BATCH_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "memplan/bytecode/instruction.hpp"
#include "memplan/drivers/config.hpp"

namespace memplan::drivers {
    struct CiphertextView {
        bytecode::BatchMeta meta;
        std::uint32_t count;
        const std::int64_t* slots;
    };

    class LeveledBatchDriver {
    public:
        explicit LeveledBatchDriver(const LeveledBatchConfig& config);

        const LeveledBatchConfig& config() const {
            return this->cfg;
        }

        std::uint64_t size_of(bytecode::BatchMeta meta) const {
            return this->cfg.size_of(meta.level, meta.relinearized);
        }

        /** @brief Checks the header at @p ct and returns its contents. */
        CiphertextView view(const std::byte* ct) const;

        void encode(std::byte* out, bytecode::BatchMeta meta, std::span<const std::int64_t> slots);

        void add(std::byte* out, const std::byte* a, const std::byte* b);
        void mul_no_relin(std::byte* out, const std::byte* a, const std::byte* b);
        void relin_rescale(std::byte* out, const std::byte* a);
        void add_plain(std::byte* out, const std::byte* a, std::int64_t value);
        void mul_plain(std::byte* out, const std::byte* a, std::int64_t value);

        std::uint64_t operations() const {
            return this->ops;
        }

    private:
        std::int64_t* begin_output(std::byte* out, bytecode::BatchMeta meta, std::uint32_t count);

        LeveledBatchConfig cfg;
        std::vector<std::int64_t> scratch;
        std::uint64_t ops = 0;
    };
}

#endif
