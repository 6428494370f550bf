/**
 * @file engine/storage.hpp
 * @brief Backends that hold evicted pages.
 *
 * Transfers are asynchronous: issue_* returns a token at once and wait()
 * blocks until the transfer's effect on memory is visible. Each token is
 * waited for exactly once. A write captures its source bytes when issued.
 */

#ifndef MEMPLAN_ENGINE_STORAGE_HPP_
#define MEMPLAN_ENGINE_STORAGE_HPP_

#include <cstddef>
#include <cstdint>
#include <future>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memplan/addr.hpp"

namespace memplan::engine {
    using Token = std::uint64_t;

    class StorageBackend {
    public:
        virtual ~StorageBackend() = default;

        /** @brief Prepares room for @p frames storage frames of @p frame_bytes each. */
        virtual void reserve(std::uint64_t frames, std::uint64_t frame_bytes) = 0;

        /** @param now Current virtual time, for backends that model time. */
        virtual Token issue_read(StorageFrame frame, std::span<std::byte> destination, double now) = 0;
        virtual Token issue_write(StorageFrame frame, std::span<const std::byte> source, double now) = 0;

        /** @brief Blocks until @p token completes; returns its virtual completion time (0 if untimed). */
        virtual double wait(Token token) = 0;

        /** @brief Whether wait() reports virtual times rather than blocking for real. */
        virtual bool simulated() const = 0;
    };

    struct SimulatorParams {
        double latency_s = 100e-6;
        double bandwidth_bytes_per_s = 1e9;
    };

    /**
     * @brief In-memory backend with a virtual clock. The device moves one
     * transfer at a time at the configured bandwidth; each transfer also
     * pays the fixed latency, which overlaps with later transfers.
     */
    class SimulatedStorage final : public StorageBackend {
    public:
        explicit SimulatedStorage(const SimulatorParams& params);

        void reserve(std::uint64_t frames, std::uint64_t frame_bytes) override;
        Token issue_read(StorageFrame frame, std::span<std::byte> destination, double now) override;
        Token issue_write(StorageFrame frame, std::span<const std::byte> source, double now) override;
        double wait(Token token) override;

        bool simulated() const override {
            return true;
        }

    private:
        struct Pending {
            double completion;
            StorageFrame frame;
            std::span<std::byte> destination;
        };

        double schedule(std::size_t bytes, double now);
        std::byte* frame_data(StorageFrame frame, std::size_t bytes);

        SimulatorParams params;
        double device_free = 0;
        std::uint64_t frame_bytes = 0;
        std::vector<std::byte> data;
        std::unordered_map<Token, Pending> pending;
        Token next_token = 1;
    };

    /** @brief Swap file on the local file system, with transfers on worker threads. */
    class FileStorage final : public StorageBackend {
    public:
        explicit FileStorage(std::string path);
        ~FileStorage() override;

        void reserve(std::uint64_t frames, std::uint64_t frame_bytes) override;
        Token issue_read(StorageFrame frame, std::span<std::byte> destination, double now) override;
        Token issue_write(StorageFrame frame, std::span<const std::byte> source, double now) override;
        double wait(Token token) override;

        bool simulated() const override {
            return false;
        }

    private:
        std::string file_path;
        int fd = -1;
        std::uint64_t frame_bytes = 0;
        std::unordered_map<Token, std::future<void>> pending;
        Token next_token = 1;
    };
}

#endif
