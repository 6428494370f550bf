#include "memplan/dsl/batch.hpp"

#include <cmath>
#include <string>

#include "memplan/error.hpp"

namespace memplan::dsl {
    using bytecode::OpCode;

    namespace {
        std::string describe(const Batch& b) {
            return "(level " + std::to_string(b.level()) + (b.relinearized() ? "" : ", unrelinearized") + ")";
        }

        void check_valid(const Batch& b, const char* op) {
            if (!b.valid()) {
                throw BuilderError(std::string(op) + ": operand is not a valid Batch");
            }
        }

        void same_shape(const Batch& a, const Batch& b, const char* op) {
            check_valid(a, op);
            check_valid(b, op);
            if (a.element_count() != b.element_count()) {
                throw BuilderError(std::string(op) + ": element count mismatch");
            }
        }
    }

    Batch::Batch(std::uint8_t level, bool relinearized, std::uint16_t element_count) {
        BuilderContext& ctx = BuilderContext::current();
        const ProgramOptions& opts = ctx.options();
        if (opts.driver != bytecode::DriverId::LeveledBatch) {
            throw BuilderError("Batch handles require the leveled-batch driver");
        }
        if (level > opts.batch.max_level) {
            throw BuilderError("level " + std::to_string(level) + " exceeds max level " + std::to_string(opts.batch.max_level));
        }
        if (element_count == 0 || element_count > opts.batch.dimension) {
            throw BuilderError("element count " + std::to_string(element_count) + " outside [1, "
                               + std::to_string(opts.batch.dimension) + "]");
        }
        this->addr = ctx.allocate(opts.batch.size_of(level, relinearized));
        this->count = element_count;
        this->meta = bytecode::BatchMeta{level, relinearized};
    }

    Batch::Batch(Batch&& other) noexcept
        : addr(other.addr), count(other.count), meta(other.meta), input_marked(other.input_marked) {
        other.count = 0;
    }

    Batch& Batch::operator=(Batch&& other) noexcept {
        if (this != &other) {
            this->release();
            this->addr = other.addr;
            this->count = other.count;
            this->meta = other.meta;
            this->input_marked = other.input_marked;
            other.count = 0;
        }
        return *this;
    }

    Batch::~Batch() {
        this->release();
    }

    void Batch::release() {
        if (this->valid()) {
            BuilderContext::current().deallocate(this->addr);
        }
        this->count = 0;
        this->input_marked = false;
    }

    Batch Batch::input(std::uint16_t element_count, Party party) {
        auto max_level = static_cast<std::uint8_t>(BuilderContext::current().options().batch.max_level);
        Batch b(max_level, true, element_count);
        b.mark_input(party);
        return b;
    }

    void Batch::mark_input(Party party) {
        check_valid(*this, "mark_input");
        if (this->input_marked) {
            throw BuilderError("Batch already marked as input");
        }
        this->input_marked = true;
        BuilderContext::current().emit(bytecode::make(OpCode::Input, this->count, this->addr, {},
                                                      static_cast<std::uint64_t>(party), this->meta.pack()));
    }

    void Batch::mark_output() const {
        check_valid(*this, "mark_output");
        BuilderContext::current().emit(bytecode::make(OpCode::Output, this->count, 0, {this->addr}, 0, this->meta.pack()));
    }

    Batch operator+(const Batch& a, const Batch& b) {
        same_shape(a, b, "add");
        if (a.level() != b.level()) {
            throw BuilderError("add: level mismatch " + describe(a) + " vs " + describe(b));
        }
        if (a.relinearized() != b.relinearized()) {
            throw BuilderError("add: cannot mix relinearized and unrelinearized operands");
        }
        Batch out(a.level(), a.relinearized(), a.element_count());
        BuilderContext::current().emit(bytecode::make(OpCode::BatchAdd, a.element_count(), out.address(),
                                                      {a.address(), b.address()}, 0, out.metadata().pack()));
        return out;
    }

    Batch mul_no_relin(const Batch& a, const Batch& b) {
        same_shape(a, b, "mul");
        if (a.level() != b.level()) {
            throw BuilderError("mul: level mismatch " + describe(a) + " vs " + describe(b));
        }
        if (!a.relinearized() || !b.relinearized()) {
            throw BuilderError("mul: operands must be relinearized");
        }
        if (a.level() == 0) {
            throw BuilderError("mul: a ciphertext at level 0 cannot be multiplied");
        }
        Batch out(a.level(), false, a.element_count());
        BuilderContext::current().emit(bytecode::make(OpCode::BatchMulNoRelin, a.element_count(), out.address(),
                                                      {a.address(), b.address()}, 0, out.metadata().pack()));
        return out;
    }

    Batch relin_rescale(const Batch& a) {
        check_valid(a, "relin_rescale");
        if (a.relinearized()) {
            throw BuilderError("relin_rescale: operand is already relinearized");
        }
        if (a.level() == 0) {
            throw BuilderError("relin_rescale: operand at level 0");
        }
        Batch out(static_cast<std::uint8_t>(a.level() - 1), true, a.element_count());
        BuilderContext::current().emit(bytecode::make(OpCode::BatchRelinRescale, a.element_count(), out.address(),
                                                      {a.address()}, 0, out.metadata().pack()));
        return out;
    }

    Batch add_plain(const Batch& a, std::int64_t raw_value) {
        check_valid(a, "add_plain");
        Batch out(a.level(), a.relinearized(), a.element_count());
        BuilderContext::current().emit(bytecode::make(OpCode::BatchAddPlain, a.element_count(), out.address(),
                                                      {a.address()}, static_cast<std::uint64_t>(raw_value),
                                                      out.metadata().pack()));
        return out;
    }

    Batch mul_plain(const Batch& a, std::int64_t raw_value) {
        check_valid(a, "mul_plain");
        if (!a.relinearized()) {
            throw BuilderError("mul_plain: operand must be relinearized");
        }
        if (a.level() == 0) {
            throw BuilderError("mul_plain: a ciphertext at level 0 cannot be multiplied");
        }
        Batch out(static_cast<std::uint8_t>(a.level() - 1), true, a.element_count());
        BuilderContext::current().emit(bytecode::make(OpCode::BatchMulPlain, a.element_count(), out.address(),
                                                      {a.address()}, static_cast<std::uint64_t>(raw_value),
                                                      out.metadata().pack()));
        return out;
    }

    std::int64_t encode_fixed(double value) {
        return static_cast<std::int64_t>(std::llround(std::ldexp(value, drivers::fixed_point_bits)));
    }
}
