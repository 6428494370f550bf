#include "memplan/dsl/integer.hpp"

#include <string>
#include <utility>
#include <vector>

#include "memplan/error.hpp"

namespace memplan::dsl {
    using bytecode::OpCode;

    namespace {
        void check_driver() {
            if (BuilderContext::current().options().driver != bytecode::DriverId::BitWire) {
                throw BuilderError("Integer handles require the bit-wire driver");
            }
        }

        void same_width(const Integer& a, const Integer& b, const char* op) {
            if (a.width() != b.width()) {
                throw BuilderError(std::string(op) + ": width mismatch (" + std::to_string(a.width()) + " vs "
                                   + std::to_string(b.width()) + ")");
            }
        }

        Integer binary(OpCode op, const Integer& a, const Integer& b, std::uint16_t out_width, const char* name) {
            if (!a.valid() || !b.valid()) {
                throw BuilderError(std::string(name) + ": operand is not a valid Integer");
            }
            same_width(a, b, name);
            Integer out(out_width);
            BuilderContext::current().emit(bytecode::make(op, a.width(), out.address(), {a.address(), b.address()}));
            return out;
        }

        Integer unary(OpCode op, const Integer& a, std::uint64_t immediate, const char* name) {
            if (!a.valid()) {
                throw BuilderError(std::string(name) + ": operand is not a valid Integer");
            }
            Integer out(a.width());
            BuilderContext::current().emit(bytecode::make(op, a.width(), out.address(), {a.address()}, immediate));
            return out;
        }
    }

    Integer::Integer(std::uint16_t width) {
        if (width == 0) {
            throw BuilderError("Integer width must be positive");
        }
        check_driver();
        this->addr = BuilderContext::current().allocate(width);
        this->w = width;
    }

    Integer::Integer(const Integer& other) {
        if (other.valid()) {
            *this = Integer(other.w);
            this->assign(other);
        }
    }

    Integer::Integer(Integer&& other) noexcept
        : addr(other.addr), w(other.w), view(other.view), input_marked(other.input_marked) {
        other.w = 0;
        other.view = false;
    }

    Integer::~Integer() {
        this->release();
    }

    void Integer::release() {
        if (this->valid() && !this->view) {
            BuilderContext::current().deallocate(this->addr);
        }
        this->w = 0;
        this->view = false;
        this->input_marked = false;
    }

    void Integer::require_valid(const char* what) const {
        if (!this->valid()) {
            throw BuilderError(std::string(what) + " on an invalid Integer");
        }
    }

    Integer& Integer::operator=(const Integer& other) {
        if (this == &other) {
            return *this;
        }
        if (this->view) {
            this->assign(other);
            return *this;
        }
        other.require_valid("copy");
        Integer fresh(other.w);
        fresh.assign(other);
        return *this = std::move(fresh);
    }

    Integer& Integer::operator=(Integer&& other) {
        if (this == &other) {
            return *this;
        }
        if (this->view) {
            this->assign(other);
            return *this;
        }
        this->release();
        this->addr = other.addr;
        this->w = other.w;
        this->view = other.view;
        this->input_marked = other.input_marked;
        other.w = 0;
        other.view = false;
        return *this;
    }

    Integer Integer::constant(std::uint16_t width, std::uint64_t value) {
        Integer out(width);
        out.set_constant(value);
        return out;
    }

    void Integer::mark_input(Party party) {
        this->require_valid("mark_input");
        if (this->view) {
            throw BuilderError("mark_input on a slice");
        }
        if (this->input_marked) {
            throw BuilderError("Integer already marked as input");
        }
        this->input_marked = true;
        BuilderContext::current().emit(
            bytecode::make(OpCode::Input, this->w, this->addr, {}, static_cast<std::uint64_t>(party)));
    }

    void Integer::mark_output() const {
        this->require_valid("mark_output");
        BuilderContext::current().emit(bytecode::make(OpCode::Output, this->w, 0, {this->addr}));
    }

    void Integer::assign(const Integer& source) {
        this->require_valid("assign");
        source.require_valid("assign");
        same_width(*this, source, "assign");
        BuilderContext::current().emit(bytecode::make(OpCode::Copy, this->w, this->addr, {source.addr}));
    }

    void Integer::set_constant(std::uint64_t value) {
        this->require_valid("set_constant");
        BuilderContext::current().emit(bytecode::make(OpCode::PublicConstant, this->w, this->addr, {}, value));
    }

    Integer Integer::slice(std::uint16_t offset, std::uint16_t width) const {
        this->require_valid("slice");
        if (width == 0 || static_cast<std::uint32_t>(offset) + width > this->w) {
            throw BuilderError("slice [" + std::to_string(offset) + ", +" + std::to_string(width) + ") out of range for width "
                               + std::to_string(this->w));
        }
        Integer v;
        v.addr = this->addr + offset;
        v.w = width;
        v.view = true;
        return v;
    }

    Integer operator+(const Integer& a, const Integer& b) {
        return binary(OpCode::IntAdd, a, b, a.width(), "add");
    }

    Integer operator-(const Integer& a, const Integer& b) {
        return binary(OpCode::IntSub, a, b, a.width(), "sub");
    }

    Integer operator&(const Integer& a, const Integer& b) {
        return binary(OpCode::BitAnd, a, b, a.width(), "and");
    }

    Integer operator^(const Integer& a, const Integer& b) {
        return binary(OpCode::BitXor, a, b, a.width(), "xor");
    }

    Integer operator|(const Integer& a, const Integer& b) {
        return binary(OpCode::BitOr, a, b, a.width(), "or");
    }

    Integer operator~(const Integer& a) {
        return unary(OpCode::BitNot, a, 0, "not");
    }

    Integer operator<<(const Integer& a, std::uint16_t shift) {
        return unary(OpCode::ShiftLeftConst, a, shift, "shl");
    }

    Integer operator>>(const Integer& a, std::uint16_t shift) {
        return unary(OpCode::ShiftRightConst, a, shift, "shr");
    }

    Integer operator>=(const Integer& a, const Integer& b) {
        return binary(OpCode::IntCompareGe, a, b, 1, "compare_ge");
    }

    Integer operator==(const Integer& a, const Integer& b) {
        return binary(OpCode::IntCompareEq, a, b, 1, "compare_eq");
    }

    Integer increment(const Integer& a) {
        return unary(OpCode::IntIncrement, a, 0, "increment");
    }

    Integer mux(const Integer& selector, const Integer& if_one, const Integer& if_zero) {
        if (!selector.valid() || !if_one.valid() || !if_zero.valid()) {
            throw BuilderError("mux: operand is not a valid Integer");
        }
        if (selector.width() != 1) {
            throw BuilderError("mux: selector must be one wire wide");
        }
        same_width(if_one, if_zero, "mux");
        Integer out(if_one.width());
        BuilderContext::current().emit(bytecode::make(OpCode::Mux, if_one.width(), out.address(),
                                                      {selector.address(), if_one.address(), if_zero.address()}));
        return out;
    }

    Integer zero_extend(const Integer& a, std::uint16_t width) {
        if (width < a.width()) {
            throw BuilderError("zero_extend to a narrower width");
        }
        if (width == a.width()) {
            return Integer(a);
        }
        Integer out(width);
        out.slice(a.width(), width - a.width()).set_constant(0);
        out.slice(0, a.width()).assign(a);
        return out;
    }

    Integer multiply(const Integer& a, const Integer& b, std::uint16_t multiplier_bits) {
        same_width(a, b, "multiply");
        if (multiplier_bits == 0 || multiplier_bits > b.width()) {
            throw BuilderError("multiply: bad multiplier width");
        }
        Integer zero = Integer::constant(a.width(), 0);
        Integer acc = mux(b.bit(0), a, zero);
        for (std::uint16_t j = 1; j < multiplier_bits; j++) {
            Integer partial = mux(b.bit(j), a << j, zero);
            acc = acc + partial;
        }
        return acc;
    }

    Integer popcount(const Integer& a) {
        if (!a.valid()) {
            throw BuilderError("popcount of an invalid Integer");
        }
        std::vector<Integer> level;
        level.reserve(a.width());
        for (std::uint16_t i = 0; i != a.width(); i++) {
            level.push_back(a.bit(i));
        }
        while (level.size() > 1) {
            std::vector<Integer> next;
            next.reserve((level.size() + 1) / 2);
            for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
                auto width = static_cast<std::uint16_t>(std::max(level[i].width(), level[i + 1].width()) + 1);
                next.push_back(zero_extend(level[i], width) + zero_extend(level[i + 1], width));
            }
            if (level.size() % 2 == 1) {
                if (level.back().is_view()) {
                    next.push_back(Integer(level.back()));
                } else {
                    next.push_back(std::move(level.back()));
                }
            }
            level = std::move(next);
        }
        if (level.front().is_view()) {
            return Integer(level.front());
        }
        return std::move(level.front());
    }

    void compare_swap(Integer& a, Integer& b, std::uint16_t key_offset, std::uint16_t key_width, bool ascending) {
        Integer a_ge_b = a.slice(key_offset, key_width) >= b.slice(key_offset, key_width);
        Integer low = mux(a_ge_b, b, a);
        Integer high = mux(a_ge_b, a, b);
        if (ascending) {
            a = std::move(low);
            b = std::move(high);
        } else {
            a = std::move(high);
            b = std::move(low);
        }
    }
}
