#include "memplan/drivers/batch.hpp"

#include <cstring>
#include <string>

#include "memplan/drivers/fixed_point.hpp"
#include "memplan/error.hpp"

namespace memplan::drivers {
    namespace {
        constexpr std::uint32_t check_base = 0x4d504354;

        std::uint32_t check_word(std::uint32_t level, std::uint32_t relin, std::uint32_t count) {
            return check_base ^ (level << 24) ^ (relin << 16) ^ count;
        }

        std::uint32_t load32(const std::byte* p) {
            std::uint32_t v;
            std::memcpy(&v, p, 4);
            return v;
        }

        void store32(std::byte* p, std::uint32_t v) {
            std::memcpy(p, &v, 4);
        }
    }

    LeveledBatchDriver::LeveledBatchDriver(const LeveledBatchConfig& config) : cfg(config) {
        this->cfg.validate();
    }

    CiphertextView LeveledBatchDriver::view(const std::byte* ct) const {
        const std::uint32_t level = load32(ct);
        const std::uint32_t relin = load32(ct + 4);
        const std::uint32_t count = load32(ct + 8);
        if (relin > 1 || level > this->cfg.max_level || count > this->cfg.dimension
            || load32(ct + 12) != check_word(level, relin, count)) {
            throw ProtocolError("memory does not hold a valid ciphertext");
        }
        return CiphertextView{bytecode::BatchMeta{static_cast<std::uint8_t>(level), relin != 0}, count,
                              reinterpret_cast<const std::int64_t*>(ct + batch_header_bytes)};
    }

    std::int64_t* LeveledBatchDriver::begin_output(std::byte* out, bytecode::BatchMeta meta, std::uint32_t count) {
        store32(out, meta.level);
        store32(out + 4, meta.relinearized ? 1 : 0);
        store32(out + 8, count);
        store32(out + 12, check_word(meta.level, meta.relinearized ? 1 : 0, count));
        this->ops++;
        return reinterpret_cast<std::int64_t*>(out + batch_header_bytes);
    }

    void LeveledBatchDriver::encode(std::byte* out, bytecode::BatchMeta meta, std::span<const std::int64_t> slots) {
        if (meta.level > this->cfg.max_level || slots.size() > this->cfg.dimension) {
            throw ProtocolError("ciphertext shape outside the driver configuration");
        }
        std::int64_t* dst = this->begin_output(out, meta, static_cast<std::uint32_t>(slots.size()));
        this->ops--;
        std::memcpy(dst, slots.data(), slots.size_bytes());
    }

    void LeveledBatchDriver::add(std::byte* out, const std::byte* a, const std::byte* b) {
        CiphertextView x = this->view(a);
        CiphertextView y = this->view(b);
        if (!(x.meta == y.meta) || x.count != y.count) {
            throw ProtocolError("add: operands differ in level, relinearization or slot count");
        }
        this->scratch.resize(x.count);
        for (std::uint32_t i = 0; i != x.count; i++) {
            this->scratch[i] = x.slots[i] + y.slots[i];
        }
        std::memcpy(this->begin_output(out, x.meta, x.count), this->scratch.data(), x.count * 8);
    }

    void LeveledBatchDriver::mul_no_relin(std::byte* out, const std::byte* a, const std::byte* b) {
        CiphertextView x = this->view(a);
        CiphertextView y = this->view(b);
        if (!(x.meta == y.meta) || x.count != y.count) {
            throw ProtocolError("mul: operands differ in level, relinearization or slot count");
        }
        if (!x.meta.relinearized) {
            throw ProtocolError("mul: operands must be relinearized");
        }
        if (x.meta.level == 0) {
            throw ProtocolError("mul: a ciphertext at level 0 cannot be multiplied");
        }
        this->scratch.resize(x.count);
        for (std::uint32_t i = 0; i != x.count; i++) {
            this->scratch[i] = fixed_mul(x.slots[i], y.slots[i]);
        }
        bytecode::BatchMeta m{x.meta.level, false};
        std::memcpy(this->begin_output(out, m, x.count), this->scratch.data(), x.count * 8);
    }

    void LeveledBatchDriver::relin_rescale(std::byte* out, const std::byte* a) {
        CiphertextView x = this->view(a);
        if (x.meta.relinearized || x.meta.level == 0) {
            throw ProtocolError("relin_rescale: operand must be an unrelinearized product above level 0");
        }
        this->scratch.assign(x.slots, x.slots + x.count);
        bytecode::BatchMeta m{static_cast<std::uint8_t>(x.meta.level - 1), true};
        std::memcpy(this->begin_output(out, m, x.count), this->scratch.data(), x.count * 8);
    }

    void LeveledBatchDriver::add_plain(std::byte* out, const std::byte* a, std::int64_t value) {
        CiphertextView x = this->view(a);
        this->scratch.resize(x.count);
        for (std::uint32_t i = 0; i != x.count; i++) {
            this->scratch[i] = x.slots[i] + value;
        }
        std::memcpy(this->begin_output(out, x.meta, x.count), this->scratch.data(), x.count * 8);
    }

    void LeveledBatchDriver::mul_plain(std::byte* out, const std::byte* a, std::int64_t value) {
        CiphertextView x = this->view(a);
        if (!x.meta.relinearized || x.meta.level == 0) {
            throw ProtocolError("mul_plain: operand must be relinearized and above level 0");
        }
        this->scratch.resize(x.count);
        for (std::uint32_t i = 0; i != x.count; i++) {
            this->scratch[i] = fixed_mul(x.slots[i], value);
        }
        bytecode::BatchMeta m{static_cast<std::uint8_t>(x.meta.level - 1), true};
        std::memcpy(this->begin_output(out, m, x.count), this->scratch.data(), x.count * 8);
    }
}
