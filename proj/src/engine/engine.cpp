#include "memplan/engine/engine.hpp"

#include <chrono>
#include <cstring>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "memplan/bytecode/program.hpp"
#include "memplan/drivers/batch.hpp"
#include "memplan/drivers/bitwire.hpp"
#include "memplan/engine/io.hpp"
#include "memplan/error.hpp"

namespace memplan::engine {
    using bytecode::Instruction;
    using bytecode::OpCode;

    std::string ExecStats::to_json() const {
        nlohmann::ordered_json j;
        j["instructions_executed"] = this->instructions_executed;
        j["protocol_instructions"] = this->protocol_instructions;
        j["swap_ins"] = this->swap_ins;
        j["swap_outs"] = this->swap_outs;
        j["finish_swapin_stalls"] = this->finish_swapin_stalls;
        j["finish_swapout_stalls"] = this->finish_swapout_stalls;
        j["stall_time"] = this->stall_time;
        j["compute_time"] = this->compute_time;
        j["total_virtual_time"] = this->total_virtual_time;
        j["resident_highwater_frames"] = this->resident_highwater_frames;
        j["network_bytes"] = this->network_bytes;
        j["and_gates"] = this->and_gates;
        j["xor_gates"] = this->xor_gates;
        j["batch_ops"] = this->batch_ops;
        j["io_units"] = this->io_units;
        j["copied_bytes"] = this->copied_bytes;
        j["simulated"] = this->simulated;
        return j.dump(2);
    }

    namespace {
        class Memory {
        public:
            Memory(std::uint64_t frames, PageShift shift, std::size_t unit_bytes)
                : shift(shift), unit(unit_bytes), frames(frames), touched(frames, false),
                  bytes(frames * pg_size(shift) * unit_bytes) {}

            std::byte* range(std::uint64_t addr, std::uint64_t units) {
                const FrameNumber f = pg_num(addr, this->shift);
                if (f >= this->frames || pg_offset(addr, this->shift) + units > pg_size(this->shift)) {
                    throw CorruptProgram("access to [" + std::to_string(addr) + ", +" + std::to_string(units)
                                         + ") outside the " + std::to_string(this->frames) + "-frame memory");
                }
                this->touch(f);
                return this->bytes.data() + addr * this->unit;
            }

            std::span<std::byte> frame(FrameNumber f) {
                if (f >= this->frames) {
                    throw CorruptProgram("frame " + std::to_string(f) + " outside the "
                                         + std::to_string(this->frames) + "-frame memory");
                }
                this->touch(f);
                return {this->bytes.data() + f * this->frame_bytes(), this->frame_bytes()};
            }

            std::size_t frame_bytes() const {
                return pg_size(this->shift) * this->unit;
            }

            std::uint64_t touched_frames() const {
                return this->touched_count;
            }

        private:
            void touch(FrameNumber f) {
                if (!this->touched[f]) {
                    this->touched[f] = true;
                    this->touched_count++;
                }
            }

            PageShift shift;
            std::size_t unit;
            std::uint64_t frames;
            std::vector<bool> touched;
            std::uint64_t touched_count = 0;
            std::vector<std::byte> bytes;
        };

        /* Expands integer instructions into AND/XOR gates over wire arrays. */
        class BitWireLayer {
        public:
            BitWireLayer(const EngineOptions& options, Memory& memory, InputReader& in, std::ostream& out)
                : driver(options.bitwire), mem(memory), in(in), out(out),
                  scratch(scratch_wires * options.bitwire.wire_bytes) {
                this->driver.constant(this->wire(zero), false);
                this->driver.constant(this->wire(one), true);
            }

            static std::size_t unit_bytes(const EngineOptions& options) {
                return options.bitwire.wire_bytes;
            }

            std::uint64_t message_units(const Instruction& inst) const {
                return inst.width;
            }

            void counters(ExecStats& st) const {
                st.and_gates = this->driver.and_gates();
                st.xor_gates = this->driver.xor_gates();
                st.io_units = this->io_wires;
            }

            double cost(const CostModel& c) const {
                return static_cast<double>(this->driver.and_gates()) * c.and_gate
                       + static_cast<double>(this->driver.xor_gates()) * c.xor_gate
                       + static_cast<double>(this->io_wires) * c.io_wire;
            }

            void execute(const Instruction& inst) {
                const std::uint64_t w = inst.width;
                switch (inst.op) {
                case OpCode::Input: {
                    if (w > 128) {
                        throw IncompatibilityError("bit-wire inputs are limited to 128 bits");
                    }
                    const u128 v = this->in.next_integer(static_cast<unsigned>(w));
                    this->io_wires += w;
                    std::byte* o = this->mem.range(inst.output, w);
                    for (std::uint64_t i = 0; i != w; i++) {
                        this->driver.input(this->at(o, i), ((v >> i) & 1) != 0);
                    }
                    return;
                }
                case OpCode::Output: {
                    if (w > 128) {
                        throw IncompatibilityError("bit-wire outputs are limited to 128 bits");
                    }
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    u128 v = 0;
                    for (std::uint64_t i = 0; i != w; i++) {
                        if (this->driver.reveal(this->at(a, i))) {
                            v |= static_cast<u128>(1) << i;
                        }
                    }
                    write_integer(this->out, v);
                    this->io_wires += w;
                    return;
                }
                case OpCode::PublicConstant: {
                    std::byte* o = this->mem.range(inst.output, w);
                    for (std::uint64_t i = 0; i != w; i++) {
                        this->driver.constant(this->at(o, i), i < 64 && ((inst.immediate >> i) & 1) != 0);
                    }
                    return;
                }
                case OpCode::IntAdd:
                case OpCode::IntSub: {
                    std::byte* o = this->mem.range(inst.output, w);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    const std::byte* b = this->mem.range(inst.inputs[1], w);
                    const bool sub = inst.op == OpCode::IntSub;
                    this->driver.copy(this->wire(carry), this->wire(sub ? one : zero));
                    for (std::uint64_t i = 0; i != w; i++) {
                        const std::byte* bi = this->at(b, i);
                        if (sub) {
                            this->driver.gate_xor(this->wire(operand), bi, this->wire(one));
                            bi = this->wire(operand);
                        }
                        this->full_adder(this->at(o, i), this->at(a, i), bi, i + 1 != w);
                    }
                    return;
                }
                case OpCode::IntIncrement: {
                    std::byte* o = this->mem.range(inst.output, w);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    this->driver.copy(this->wire(carry), this->wire(one));
                    for (std::uint64_t i = 0; i != w; i++) {
                        if (i + 1 != w) {
                            this->driver.gate_and(this->wire(t1), this->at(a, i), this->wire(carry));
                        }
                        this->driver.gate_xor(this->at(o, i), this->at(a, i), this->wire(carry));
                        if (i + 1 != w) {
                            this->driver.copy(this->wire(carry), this->wire(t1));
                        }
                    }
                    return;
                }
                case OpCode::BitAnd:
                case OpCode::BitXor:
                case OpCode::BitOr: {
                    std::byte* o = this->mem.range(inst.output, w);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    const std::byte* b = this->mem.range(inst.inputs[1], w);
                    for (std::uint64_t i = 0; i != w; i++) {
                        if (inst.op == OpCode::BitAnd) {
                            this->driver.gate_and(this->at(o, i), this->at(a, i), this->at(b, i));
                        } else if (inst.op == OpCode::BitXor) {
                            this->driver.gate_xor(this->at(o, i), this->at(a, i), this->at(b, i));
                        } else {
                            this->driver.gate_and(this->wire(t1), this->at(a, i), this->at(b, i));
                            this->driver.gate_xor(this->wire(t2), this->at(a, i), this->at(b, i));
                            this->driver.gate_xor(this->at(o, i), this->wire(t2), this->wire(t1));
                        }
                    }
                    return;
                }
                case OpCode::BitNot: {
                    std::byte* o = this->mem.range(inst.output, w);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    for (std::uint64_t i = 0; i != w; i++) {
                        this->driver.gate_xor(this->at(o, i), this->at(a, i), this->wire(one));
                    }
                    return;
                }
                case OpCode::ShiftLeftConst:
                case OpCode::ShiftRightConst: {
                    std::byte* o = this->mem.range(inst.output, w);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    const std::uint64_t k = inst.immediate;
                    if (inst.op == OpCode::ShiftLeftConst) {
                        for (std::uint64_t i = w; i-- > 0;) {
                            this->driver.copy(this->at(o, i), i >= k ? this->at(a, i - k) : this->wire(zero));
                        }
                    } else {
                        for (std::uint64_t i = 0; i != w; i++) {
                            this->driver.copy(this->at(o, i), i + k < w ? this->at(a, i + k) : this->wire(zero));
                        }
                    }
                    return;
                }
                case OpCode::IntCompareGe: {
                    std::byte* o = this->mem.range(inst.output, 1);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    const std::byte* b = this->mem.range(inst.inputs[1], w);
                    /* a >= b exactly when a + ~b + 1 carries out of the top bit. */
                    this->driver.copy(this->wire(carry), this->wire(one));
                    for (std::uint64_t i = 0; i != w; i++) {
                        this->driver.gate_xor(this->wire(operand), this->at(b, i), this->wire(one));
                        this->carry_step(this->at(a, i), this->wire(operand));
                    }
                    this->driver.copy(o, this->wire(carry));
                    return;
                }
                case OpCode::IntCompareEq: {
                    std::byte* o = this->mem.range(inst.output, 1);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    const std::byte* b = this->mem.range(inst.inputs[1], w);
                    this->driver.copy(this->wire(carry), this->wire(one));
                    for (std::uint64_t i = 0; i != w; i++) {
                        this->driver.gate_xor(this->wire(t1), this->at(a, i), this->at(b, i));
                        this->driver.gate_xor(this->wire(t1), this->wire(t1), this->wire(one));
                        this->driver.gate_and(this->wire(carry), this->wire(carry), this->wire(t1));
                    }
                    this->driver.copy(o, this->wire(carry));
                    return;
                }
                case OpCode::Mux: {
                    std::byte* o = this->mem.range(inst.output, w);
                    const std::byte* s = this->mem.range(inst.inputs[0], 1);
                    const std::byte* t = this->mem.range(inst.inputs[1], w);
                    const std::byte* f = this->mem.range(inst.inputs[2], w);
                    this->driver.copy(this->wire(operand), s);
                    for (std::uint64_t i = 0; i != w; i++) {
                        this->driver.gate_xor(this->wire(t1), this->at(t, i), this->at(f, i));
                        this->driver.gate_and(this->wire(t1), this->wire(t1), this->wire(operand));
                        this->driver.gate_xor(this->at(o, i), this->wire(t1), this->at(f, i));
                    }
                    return;
                }
                case OpCode::Copy: {
                    std::byte* o = this->mem.range(inst.output, w);
                    const std::byte* a = this->mem.range(inst.inputs[0], w);
                    if (o == a) {
                        return;
                    }
                    for (std::uint64_t i = 0; i != w; i++) {
                        this->driver.copy(this->at(o, i), this->at(a, i));
                    }
                    return;
                }
                default:
                    throw IncompatibilityError(std::string("the bit-wire engine cannot execute ")
                                               + std::string(bytecode::info(inst.op).mnemonic));
                }
            }

        private:
            enum ScratchWire : std::size_t { zero, one, carry, operand, t1, t2, scratch_wires };

            std::byte* wire(ScratchWire s) {
                return this->scratch.data() + s * this->driver.wire_bytes();
            }

            std::byte* at(std::byte* base, std::uint64_t i) const {
                return base + i * this->driver.wire_bytes();
            }

            const std::byte* at(const std::byte* base, std::uint64_t i) const {
                return base + i * this->driver.wire_bytes();
            }

            /* carry <- carry ^ ((a ^ carry) & (b ^ carry)) */
            void carry_step(const std::byte* a, const std::byte* b) {
                this->driver.gate_xor(this->wire(t1), a, this->wire(carry));
                this->driver.gate_xor(this->wire(t2), b, this->wire(carry));
                this->driver.gate_and(this->wire(t1), this->wire(t1), this->wire(t2));
                this->driver.gate_xor(this->wire(carry), this->wire(carry), this->wire(t1));
            }

            void full_adder(std::byte* o, const std::byte* a, const std::byte* b, bool need_carry) {
                this->driver.gate_xor(this->wire(t1), a, this->wire(carry));
                this->driver.gate_xor(this->wire(t2), b, this->wire(carry));
                if (need_carry) {
                    this->driver.gate_and(this->wire(t2), this->wire(t1), this->wire(t2));
                }
                /* a ^ b ^ carry, written after a and b are no longer needed */
                this->driver.gate_xor(o, this->wire(t1), b);
                if (need_carry) {
                    this->driver.gate_xor(this->wire(carry), this->wire(carry), this->wire(t2));
                }
            }

            drivers::BitWireDriver driver;
            Memory& mem;
            InputReader& in;
            std::ostream& out;
            std::vector<std::byte> scratch;
            std::uint64_t io_wires = 0;
        };

        class BatchLayer {
        public:
            BatchLayer(const EngineOptions& options, Memory& memory, InputReader& in, std::ostream& out)
                : driver(options.batch), mem(memory), in(in), out(out) {}

            static std::size_t unit_bytes(const EngineOptions&) {
                return 1;
            }

            std::uint64_t message_units(const Instruction& inst) const {
                return this->driver.size_of(bytecode::BatchMeta::unpack(inst.meta));
            }

            void counters(ExecStats& st) const {
                st.batch_ops = this->driver.operations();
                st.io_units = this->io_ciphertexts;
            }

            /* Encrypting an input or decrypting an output costs about as much as one homomorphic operation. */
            double cost(const CostModel& c) const {
                return static_cast<double>(this->driver.operations() + this->io_ciphertexts) * c.batch_op;
            }

            void execute(const Instruction& inst) {
                const bytecode::BatchMeta m = bytecode::BatchMeta::unpack(inst.meta);
                auto ct = [&](std::uint64_t addr, bytecode::BatchMeta meta) {
                    return this->mem.range(addr, this->driver.size_of(meta));
                };
                const auto up = [](bytecode::BatchMeta meta, bool relin) {
                    return bytecode::BatchMeta{static_cast<std::uint8_t>(meta.level + 1), relin};
                };
                switch (inst.op) {
                case OpCode::Input: {
                    auto row = this->in.next_row(inst.width);
                    this->driver.encode(ct(inst.output, m), m, row);
                    this->io_ciphertexts++;
                    return;
                }
                case OpCode::Output: {
                    drivers::CiphertextView v = this->driver.view(ct(inst.inputs[0], m));
                    write_row(this->out, std::vector<std::int64_t>(v.slots, v.slots + v.count));
                    this->io_ciphertexts++;
                    return;
                }
                case OpCode::BatchAdd:
                    this->driver.add(ct(inst.output, m), ct(inst.inputs[0], m), ct(inst.inputs[1], m));
                    break;
                case OpCode::BatchMulNoRelin: {
                    const bytecode::BatchMeta in_meta{m.level, true};
                    this->driver.mul_no_relin(ct(inst.output, m), ct(inst.inputs[0], in_meta),
                                              ct(inst.inputs[1], in_meta));
                    break;
                }
                case OpCode::BatchRelinRescale:
                    this->driver.relin_rescale(ct(inst.output, m), ct(inst.inputs[0], up(m, false)));
                    break;
                case OpCode::BatchAddPlain:
                    this->driver.add_plain(ct(inst.output, m), ct(inst.inputs[0], m),
                                           static_cast<std::int64_t>(inst.immediate));
                    break;
                case OpCode::BatchMulPlain:
                    this->driver.mul_plain(ct(inst.output, m), ct(inst.inputs[0], up(m, true)),
                                           static_cast<std::int64_t>(inst.immediate));
                    break;
                case OpCode::Copy: {
                    std::byte* o = ct(inst.output, m);
                    const std::byte* a = ct(inst.inputs[0], m);
                    this->driver.view(a);
                    std::memmove(o, a, this->driver.size_of(m));
                    return;
                }
                default:
                    throw IncompatibilityError(std::string("the batch engine cannot execute ")
                                               + std::string(bytecode::info(inst.op).mnemonic));
                }
                drivers::CiphertextView result = this->driver.view(ct(inst.output, m));
                if (!(result.meta == m) || result.count != inst.width) {
                    throw ProtocolError(std::string(bytecode::info(inst.op).mnemonic)
                                        + ": result shape disagrees with the instruction");
                }
            }

        private:
            drivers::LeveledBatchDriver driver;
            Memory& mem;
            InputReader& in;
            std::ostream& out;
            std::uint64_t io_ciphertexts = 0;
        };

        struct PendingTransfer {
            Token token;
            std::uint64_t other;
        };

        template <typename Layer>
        class Interpreter {
        public:
            Interpreter(bytecode::ProgramReader& reader, const EngineOptions& options, StorageBackend& storage,
                        Channel* channel, std::istream& input, std::ostream& output)
                : reader(reader), opts(options), storage(storage), channel(channel), in(input),
                  mem(reader.header().total_frames(), reader.header().page_shift, Layer::unit_bytes(options)),
                  layer(options, this->mem, this->in, output) {
                this->storage.reserve(reader.header().storage_frame_count, this->mem.frame_bytes());
                this->st.simulated = storage.simulated();
            }

            ExecStats run() {
                const auto wall_start = std::chrono::steady_clock::now();
                while (auto inst = this->reader.next()) {
                    this->st.instructions_executed++;
                    if (bytecode::is_directive(inst->op)) {
                        if (!this->directive(*inst)) {
                            break;
                        }
                        continue;
                    }
                    this->st.protocol_instructions++;
                    this->layer.execute(*inst);
                    this->advance_compute();
                }
                if (!this->inbound.empty() || !this->outbound.empty()) {
                    throw CorruptProgram("program ends with unfinished swaps");
                }
                this->layer.counters(this->st);
                this->st.resident_highwater_frames = this->mem.touched_frames();
                if (this->storage.simulated()) {
                    this->st.total_virtual_time = this->now;
                } else {
                    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - wall_start;
                    this->st.total_virtual_time = wall.count();
                    this->st.compute_time = wall.count() - this->st.stall_time;
                }
                return this->st;
            }

        private:
            void advance_compute() {
                const double total = this->layer.cost(this->opts.cost) + this->copy_cost;
                this->st.compute_time += total - this->charged;
                this->now += total - this->charged;
                this->charged = total;
            }

            /* Returns whether the transfer had to be waited for. */
            bool wait(Token token, double& stall) {
                if (this->storage.simulated()) {
                    const double done = this->storage.wait(token);
                    if (done > this->now) {
                        stall = done - this->now;
                        this->now = done;
                        return true;
                    }
                    stall = 0;
                    return false;
                }
                const auto start = std::chrono::steady_clock::now();
                this->storage.wait(token);
                const std::chrono::duration<double> waited = std::chrono::steady_clock::now() - start;
                stall = waited.count();
                return stall > 1e-6;
            }

            Channel& need_channel() {
                if (this->channel == nullptr) {
                    throw ProtocolError("network directive in a program run without worker channels");
                }
                return *this->channel;
            }

            bool directive(const Instruction& inst) {
                switch (inst.op) {
                case OpCode::IssueSwapIn: {
                    if (this->inbound.contains(inst.output)) {
                        throw CorruptProgram("second swap-in into frame " + std::to_string(inst.output));
                    }
                    Token t = this->storage.issue_read(inst.immediate, this->mem.frame(inst.output), this->now);
                    this->inbound[inst.output] = PendingTransfer{t, inst.immediate};
                    this->st.swap_ins++;
                    return true;
                }
                case OpCode::FinishSwapIn: {
                    auto it = this->inbound.find(inst.output);
                    if (it == this->inbound.end() || it->second.other != inst.immediate) {
                        throw CorruptProgram("FinishSwapIn for a transfer that was never issued (frame "
                                             + std::to_string(inst.output) + ")");
                    }
                    Token t = it->second.token;
                    this->inbound.erase(it);
                    double stall = 0;
                    if (this->wait(t, stall)) {
                        this->st.finish_swapin_stalls++;
                    }
                    this->st.stall_time += stall;
                    return true;
                }
                case OpCode::IssueSwapOut: {
                    if (this->outbound.contains(inst.immediate)) {
                        throw CorruptProgram("second swap-out to storage frame " + std::to_string(inst.immediate));
                    }
                    Token t = this->storage.issue_write(inst.immediate, this->mem.frame(inst.inputs[0]), this->now);
                    this->outbound[inst.immediate] = PendingTransfer{t, inst.inputs[0]};
                    this->st.swap_outs++;
                    return true;
                }
                case OpCode::FinishSwapOut: {
                    auto it = this->outbound.find(inst.immediate);
                    if (it == this->outbound.end() || it->second.other != inst.inputs[0]) {
                        throw CorruptProgram("FinishSwapOut for a transfer that was never issued (storage "
                                             + std::to_string(inst.immediate) + ")");
                    }
                    Token t = it->second.token;
                    this->outbound.erase(it);
                    double stall = 0;
                    if (this->wait(t, stall)) {
                        this->st.finish_swapout_stalls++;
                    }
                    this->st.stall_time += stall;
                    return true;
                }
                case OpCode::CopyFromPrefetch:
                case OpCode::CopyToPrefetch: {
                    auto dst = this->mem.frame(inst.output);
                    auto src = this->mem.frame(inst.inputs[0]);
                    std::memcpy(dst.data(), src.data(), dst.size());
                    this->st.copied_bytes += dst.size();
                    this->copy_cost += static_cast<double>(dst.size()) * this->opts.cost.copy_per_byte;
                    this->advance_compute();
                    return true;
                }
                case OpCode::NetworkPostSend: {
                    const std::uint64_t units = this->layer.message_units(inst);
                    std::byte* p = this->mem.range(inst.inputs[0], units);
                    const std::size_t bytes = units * Layer::unit_bytes(this->opts);
                    this->need_channel().post_send(static_cast<WorkerId>(inst.immediate), {p, bytes});
                    this->st.network_bytes += bytes;
                    return true;
                }
                case OpCode::NetworkPostReceive: {
                    const std::uint64_t units = this->layer.message_units(inst);
                    std::byte* p = this->mem.range(inst.output, units);
                    const std::size_t bytes = units * Layer::unit_bytes(this->opts);
                    this->need_channel().post_receive(static_cast<WorkerId>(inst.immediate), {p, bytes});
                    return true;
                }
                case OpCode::NetworkBarrier:
                    if (this->channel != nullptr) {
                        this->channel->barrier();
                    }
                    return true;
                case OpCode::PrintStats:
                    if (this->opts.diagnostics != nullptr) {
                        ExecStats snapshot = this->st;
                        this->layer.counters(snapshot);
                        snapshot.total_virtual_time = this->now;
                        *this->opts.diagnostics << snapshot.to_json() << '\n';
                    }
                    return true;
                case OpCode::Halt:
                    return false;
                default:
                    throw CorruptProgram("unexpected directive");
                }
            }

            bytecode::ProgramReader& reader;
            const EngineOptions& opts;
            StorageBackend& storage;
            Channel* channel;
            InputReader in;
            Memory mem;
            Layer layer;
            std::unordered_map<FrameNumber, PendingTransfer> inbound;
            std::unordered_map<StorageFrame, PendingTransfer> outbound;
            double now = 0;
            double charged = 0;
            double copy_cost = 0;
            ExecStats st;
        };
    }

    ExecStats execute(const std::string& program_path, const EngineOptions& options, StorageBackend& storage,
                      Channel* channel, std::istream& input, std::ostream& output) {
        bytecode::ProgramReader reader(program_path);
        const bytecode::ProgramHeader& h = reader.header();
        if (h.dialect != bytecode::Dialect::Physical) {
            throw FormatError(program_path + " is not a physical program");
        }
        switch (h.driver) {
        case bytecode::DriverId::BitWire:
            return Interpreter<BitWireLayer>(reader, options, storage, channel, input, output).run();
        case bytecode::DriverId::LeveledBatch:
            return Interpreter<BatchLayer>(reader, options, storage, channel, input, output).run();
        }
        throw FormatError(program_path + ": unknown driver");
    }
}
