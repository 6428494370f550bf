/**
 * @file bytecode/program.hpp
 * @brief Program file header and streaming reader/writer.
 *
 * A program file is a fixed 48-byte header followed by instruction_count
 * fixed-width records, so instruction k always sits at a computable offset.
 * Readers and writers hold only a bounded buffer; no stage of the planner
 * loads a whole program into memory.
 */

#ifndef MEMPLAN_BYTECODE_PROGRAM_HPP_
#define MEMPLAN_BYTECODE_PROGRAM_HPP_

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memplan/bytecode/instruction.hpp"

namespace memplan::bytecode {
    enum class Dialect : std::uint8_t { Virtual = 0, Physical = 1 };
    enum class AddressUnit : std::uint8_t { Wire = 0, Byte = 1 };
    enum class DriverId : std::uint8_t { BitWire = 0, LeveledBatch = 1 };

    constexpr std::array<char, 4> program_magic = {'M', 'P', 'G', '1'};
    constexpr std::uint32_t program_version = 1;
    constexpr std::size_t header_size = 48;

    struct ProgramHeader {
        Dialect dialect = Dialect::Virtual;
        AddressUnit address_unit = AddressUnit::Wire;
        PageShift page_shift = 12;
        DriverId driver = DriverId::BitWire;
        /* Physical dialect only. */
        std::uint64_t frame_count = 0;
        std::uint64_t prefetch_frames = 0;
        std::uint64_t storage_frame_count = 0;
        std::uint64_t instruction_count = 0;

        std::uint64_t total_frames() const {
            return frame_count + prefetch_frames;
        }

        bool operator==(const ProgramHeader&) const = default;
    };

    AddressUnit unit_for(DriverId driver);
    std::string_view to_string(Dialect d);
    std::string_view to_string(AddressUnit u);
    std::string_view to_string(DriverId d);

    std::array<std::byte, header_size> encode_header(const ProgramHeader& header);
    ProgramHeader decode_header(std::span<const std::byte, header_size> bytes);

    /**
     * @brief Checks that an instruction belongs to the header's dialect:
     * virtual programs carry no paging directives, and every frame a physical
     * program references is below frame_count + prefetch_frames.
     */
    void check_dialect(const ProgramHeader& header, const Instruction& inst);

    class ProgramWriter {
    public:
        /**
         * @brief Opens @p path and writes a provisional header. The
         * instruction count (and, for physical programs, any header field
         * changed through header()) is patched in by finish().
         */
        ProgramWriter(std::string path, const ProgramHeader& header);
        ProgramWriter(const ProgramWriter&) = delete;
        ProgramWriter& operator=(const ProgramWriter&) = delete;
        ~ProgramWriter();

        void append(const Instruction& inst);

        std::uint64_t count() const {
            return this->written;
        }

        ProgramHeader& header() {
            return this->hdr;
        }

        const std::string& path() const {
            return this->file_path;
        }

        void finish();

    private:
        void flush_buffer();

        std::string file_path;
        ProgramHeader hdr;
        std::ofstream out;
        std::vector<std::byte> buffer;
        std::uint64_t written = 0;
        bool finished = false;
    };

    class ProgramReader {
    public:
        explicit ProgramReader(std::string path);

        const ProgramHeader& header() const {
            return this->hdr;
        }

        /** @brief Index of the instruction the next call to next() returns. */
        std::uint64_t position() const {
            return this->next_index;
        }

        std::optional<Instruction> next();

        /** @brief Random access to instruction @p index (resets the stream position). */
        Instruction at(std::uint64_t index);

        void seek(std::uint64_t index);

        const std::string& path() const {
            return this->file_path;
        }

    private:
        void fill();

        std::string file_path;
        ProgramHeader hdr;
        std::ifstream in;
        std::vector<std::byte> buffer;
        std::size_t buffered = 0;
        std::size_t cursor = 0;
        std::uint64_t next_index = 0;
    };

    /** @brief Iterates a program file from its last instruction to its first. */
    class ReverseProgramReader {
    public:
        explicit ReverseProgramReader(std::string path);

        const ProgramHeader& header() const {
            return this->hdr;
        }

        /** @brief Returns (index, instruction) pairs with decreasing index. */
        std::optional<std::pair<std::uint64_t, Instruction>> next();

    private:
        std::string file_path;
        ProgramHeader hdr;
        std::ifstream in;
        std::vector<std::byte> buffer;
        std::uint64_t chunk_start = 0;
        std::size_t chunk_len = 0;
        std::uint64_t remaining;
    };

    /** @brief Writes @p body under @p header; the instruction count comes from @p body. */
    void write_program(const std::string& path, const ProgramHeader& header, std::span<const Instruction> body);

    /** @brief Reads a whole program; intended for tests and small files. */
    std::pair<ProgramHeader, std::vector<Instruction>> read_all(const std::string& path);
}

#endif
