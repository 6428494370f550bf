#include "memplan/bytecode/program.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>

#include "memplan/error.hpp"

namespace memplan::bytecode {
    namespace {
        constexpr std::size_t buffer_records = 4096;

        void put_le(std::byte* out, std::uint64_t value, std::size_t bytes) {
            for (std::size_t i = 0; i != bytes; i++) {
                out[i] = static_cast<std::byte>(value >> (8 * i));
            }
        }

        std::uint64_t get_le(const std::byte* in, std::size_t bytes) {
            std::uint64_t value = 0;
            for (std::size_t i = 0; i != bytes; i++) {
                value |= static_cast<std::uint64_t>(in[i]) << (8 * i);
            }
            return value;
        }

        ProgramHeader open_and_check(const std::string& path, std::ifstream& in) {
            in.open(path, std::ios::binary);
            if (!in) {
                throw IoError("cannot open program file " + path);
            }
            std::array<std::byte, header_size> raw;
            in.read(reinterpret_cast<char*>(raw.data()), header_size);
            if (in.gcount() != static_cast<std::streamsize>(header_size)) {
                throw FormatError(path + ": file shorter than a program header");
            }
            ProgramHeader header;
            try {
                header = decode_header(raw);
            } catch (const FormatError& e) {
                throw FormatError(path + ": " + e.what());
            }
            auto size = std::filesystem::file_size(path);
            auto expected = header_size + header.instruction_count * record_size;
            if (size < expected) {
                throw TruncatedProgram(path + ": header declares " + std::to_string(header.instruction_count)
                                       + " instructions but file holds " + std::to_string((size - header_size) / record_size));
            }
            if (size > expected) {
                throw FormatError(path + ": trailing bytes after last instruction");
            }
            return header;
        }
    }

    AddressUnit unit_for(DriverId driver) {
        return driver == DriverId::BitWire ? AddressUnit::Wire : AddressUnit::Byte;
    }

    std::string_view to_string(Dialect d) {
        return d == Dialect::Virtual ? "virtual" : "physical";
    }

    std::string_view to_string(AddressUnit u) {
        return u == AddressUnit::Wire ? "wire" : "byte";
    }

    std::string_view to_string(DriverId d) {
        return d == DriverId::BitWire ? "bitwire" : "leveled-batch";
    }

    std::array<std::byte, header_size> encode_header(const ProgramHeader& h) {
        std::array<std::byte, header_size> out{};
        std::memcpy(out.data(), program_magic.data(), program_magic.size());
        put_le(&out[4], program_version, 4);
        out[8] = static_cast<std::byte>(h.dialect);
        out[9] = static_cast<std::byte>(h.address_unit);
        out[10] = static_cast<std::byte>(h.page_shift);
        out[11] = static_cast<std::byte>(h.driver);
        put_le(&out[16], h.frame_count, 8);
        put_le(&out[24], h.prefetch_frames, 8);
        put_le(&out[32], h.storage_frame_count, 8);
        put_le(&out[40], h.instruction_count, 8);
        return out;
    }

    ProgramHeader decode_header(std::span<const std::byte, header_size> b) {
        if (std::memcmp(b.data(), program_magic.data(), program_magic.size()) != 0) {
            throw FormatError("bad magic");
        }
        auto version = get_le(&b[4], 4);
        if (version != program_version) {
            throw FormatError("unsupported version " + std::to_string(version));
        }
        auto dialect = static_cast<std::uint8_t>(b[8]);
        auto unit = static_cast<std::uint8_t>(b[9]);
        auto shift = static_cast<std::uint8_t>(b[10]);
        auto driver = static_cast<std::uint8_t>(b[11]);
        if (dialect > 1) {
            throw FormatError("bad dialect " + std::to_string(dialect));
        }
        if (unit > 1) {
            throw FormatError("bad address unit " + std::to_string(unit));
        }
        if (driver > 1) {
            throw FormatError("bad driver id " + std::to_string(driver));
        }
        if (shift == 0 || shift >= address_bits) {
            throw FormatError("bad page shift " + std::to_string(shift));
        }
        if (get_le(&b[12], 4) != 0) {
            throw FormatError("reserved header bytes are nonzero");
        }
        ProgramHeader h;
        h.dialect = static_cast<Dialect>(dialect);
        h.address_unit = static_cast<AddressUnit>(unit);
        h.page_shift = shift;
        h.driver = static_cast<DriverId>(driver);
        h.frame_count = get_le(&b[16], 8);
        h.prefetch_frames = get_le(&b[24], 8);
        h.storage_frame_count = get_le(&b[32], 8);
        h.instruction_count = get_le(&b[40], 8);
        if (h.address_unit != unit_for(h.driver)) {
            throw FormatError("address unit does not match driver");
        }
        if (h.dialect == Dialect::Virtual && (h.frame_count | h.prefetch_frames | h.storage_frame_count) != 0) {
            throw FormatError("virtual program carries physical header fields");
        }
        return h;
    }

    void check_dialect(const ProgramHeader& header, const Instruction& inst) {
        if (header.dialect == Dialect::Virtual) {
            if (is_paging_directive(inst.op)) {
                throw FormatError(std::string("paging directive ") + std::string(info(inst.op).mnemonic)
                                  + " in a virtual program");
            }
            return;
        }
        const std::uint64_t limit = header.total_frames();
        auto check = [&](std::uint64_t frame) {
            if (frame >= limit) {
                throw FormatError("frame " + std::to_string(frame) + " out of range (" + std::to_string(limit) + " frames)");
            }
        };
        const OpInfo& oi = info(inst.op);
        if (has_address_operands(inst.op)) {
            if (oi.has_output) {
                check(pg_num(inst.output, header.page_shift));
            }
            for (std::uint64_t in : inst.input_span()) {
                check(pg_num(in, header.page_shift));
            }
        } else if (is_paging_directive(inst.op)) {
            if (oi.has_output) {
                check(inst.output);
            }
            for (std::uint64_t in : inst.input_span()) {
                check(in);
            }
            if (oi.uses_immediate && header.storage_frame_count != 0 && inst.immediate >= header.storage_frame_count) {
                throw FormatError("storage frame " + std::to_string(inst.immediate) + " out of range");
            }
        }
    }

    ProgramWriter::ProgramWriter(std::string path, const ProgramHeader& header)
        : file_path(std::move(path)), hdr(header) {
        this->out.open(this->file_path, std::ios::binary | std::ios::trunc);
        if (!this->out) {
            throw IoError("cannot create program file " + this->file_path);
        }
        auto raw = encode_header(this->hdr);
        this->out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
        this->buffer.reserve(buffer_records * record_size);
    }

    ProgramWriter::~ProgramWriter() {
        if (!this->finished) {
            try {
                this->finish();
            } catch (...) {
            }
        }
    }

    void ProgramWriter::append(const Instruction& inst) {
        if (this->hdr.dialect == Dialect::Virtual && is_paging_directive(inst.op)) {
            check_dialect(this->hdr, inst);
        }
        auto rec = encode(inst);
        this->buffer.insert(this->buffer.end(), rec.begin(), rec.end());
        this->written++;
        if (this->buffer.size() >= buffer_records * record_size) {
            this->flush_buffer();
        }
    }

    void ProgramWriter::flush_buffer() {
        this->out.write(reinterpret_cast<const char*>(this->buffer.data()), this->buffer.size());
        if (!this->out) {
            throw IoError("write failed on " + this->file_path);
        }
        this->buffer.clear();
    }

    void ProgramWriter::finish() {
        if (this->finished) {
            return;
        }
        this->finished = true;
        this->flush_buffer();
        this->hdr.instruction_count = this->written;
        auto raw = encode_header(this->hdr);
        this->out.seekp(0);
        this->out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
        this->out.close();
        if (!this->out) {
            throw IoError("failed to finalize " + this->file_path);
        }
    }

    ProgramReader::ProgramReader(std::string path) : file_path(std::move(path)) {
        this->hdr = open_and_check(this->file_path, this->in);
        this->buffer.resize(buffer_records * record_size);
    }

    void ProgramReader::fill() {
        std::uint64_t left = this->hdr.instruction_count - this->next_index;
        std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(left, buffer_records));
        this->in.read(reinterpret_cast<char*>(this->buffer.data()), want * record_size);
        if (this->in.gcount() != static_cast<std::streamsize>(want * record_size)) {
            throw TruncatedProgram(this->file_path + ": short read at instruction " + std::to_string(this->next_index));
        }
        this->buffered = want;
        this->cursor = 0;
    }

    std::optional<Instruction> ProgramReader::next() {
        if (this->next_index >= this->hdr.instruction_count) {
            return std::nullopt;
        }
        if (this->cursor == this->buffered) {
            this->fill();
        }
        std::span<const std::byte, record_size> rec(&this->buffer[this->cursor * record_size], record_size);
        Instruction inst = decode(rec);
        try {
            check_dialect(this->hdr, inst);
        } catch (const FormatError& e) {
            throw FormatError(this->file_path + ": instruction " + std::to_string(this->next_index) + ": " + e.what());
        }
        this->cursor++;
        this->next_index++;
        return inst;
    }

    void ProgramReader::seek(std::uint64_t index) {
        if (index > this->hdr.instruction_count) {
            throw FormatError("seek past end of program");
        }
        this->in.clear();
        this->in.seekg(static_cast<std::streamoff>(header_size + index * record_size));
        this->next_index = index;
        this->buffered = 0;
        this->cursor = 0;
    }

    Instruction ProgramReader::at(std::uint64_t index) {
        if (index >= this->hdr.instruction_count) {
            throw FormatError("instruction index out of range");
        }
        this->seek(index);
        return *this->next();
    }

    ReverseProgramReader::ReverseProgramReader(std::string path) : file_path(std::move(path)) {
        this->hdr = open_and_check(this->file_path, this->in);
        this->remaining = this->hdr.instruction_count;
        this->chunk_start = this->remaining;
        this->buffer.resize(buffer_records * record_size);
    }

    std::optional<std::pair<std::uint64_t, Instruction>> ReverseProgramReader::next() {
        if (this->remaining == 0) {
            return std::nullopt;
        }
        if (this->chunk_len == 0) {
            std::uint64_t len = std::min<std::uint64_t>(this->chunk_start, buffer_records);
            this->chunk_start -= len;
            this->in.clear();
            this->in.seekg(static_cast<std::streamoff>(header_size + this->chunk_start * record_size));
            this->in.read(reinterpret_cast<char*>(this->buffer.data()), len * record_size);
            if (this->in.gcount() != static_cast<std::streamsize>(len * record_size)) {
                throw TruncatedProgram(this->file_path + ": short read");
            }
            this->chunk_len = len;
        }
        this->chunk_len--;
        this->remaining--;
        std::span<const std::byte, record_size> rec(&this->buffer[this->chunk_len * record_size], record_size);
        Instruction inst = decode(rec);
        check_dialect(this->hdr, inst);
        return std::make_pair(this->chunk_start + this->chunk_len, inst);
    }

    void write_program(const std::string& path, const ProgramHeader& header, std::span<const Instruction> body) {
        ProgramWriter writer(path, header);
        for (const Instruction& inst : body) {
            writer.append(inst);
        }
        writer.finish();
    }

    std::pair<ProgramHeader, std::vector<Instruction>> read_all(const std::string& path) {
        ProgramReader reader(path);
        std::vector<Instruction> body;
        body.reserve(reader.header().instruction_count);
        while (auto inst = reader.next()) {
            body.push_back(*inst);
        }
        return {reader.header(), std::move(body)};
    }
}
