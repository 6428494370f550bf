#include "memplan/engine/storage.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "memplan/error.hpp"

namespace memplan::engine {
    SimulatedStorage::SimulatedStorage(const SimulatorParams& p) : params(p) {
        if (p.latency_s < 0 || p.bandwidth_bytes_per_s <= 0) {
            throw ConfigError("simulator needs latency >= 0 and bandwidth > 0");
        }
    }

    void SimulatedStorage::reserve(std::uint64_t frames, std::uint64_t bytes) {
        this->frame_bytes = bytes;
        this->data.assign(frames * bytes, std::byte{0});
    }

    std::byte* SimulatedStorage::frame_data(StorageFrame frame, std::size_t bytes) {
        if (bytes != this->frame_bytes) {
            throw CorruptProgram("transfer size does not match the storage frame size");
        }
        const std::uint64_t end = (frame + 1) * this->frame_bytes;
        if (end > this->data.size()) {
            this->data.resize(end);
        }
        return this->data.data() + frame * this->frame_bytes;
    }

    double SimulatedStorage::schedule(std::size_t bytes, double now) {
        const double transfer = static_cast<double>(bytes) / this->params.bandwidth_bytes_per_s;
        const double start = std::max(now, this->device_free);
        this->device_free = start + transfer;
        return start + this->params.latency_s + transfer;
    }

    Token SimulatedStorage::issue_read(StorageFrame frame, std::span<std::byte> destination, double now) {
        this->frame_data(frame, destination.size());
        Token t = this->next_token++;
        this->pending.emplace(t, Pending{this->schedule(destination.size(), now), frame, destination});
        return t;
    }

    Token SimulatedStorage::issue_write(StorageFrame frame, std::span<const std::byte> source, double now) {
        std::memcpy(this->frame_data(frame, source.size()), source.data(), source.size());
        Token t = this->next_token++;
        this->pending.emplace(t, Pending{this->schedule(source.size(), now), frame, {}});
        return t;
    }

    double SimulatedStorage::wait(Token token) {
        auto it = this->pending.find(token);
        if (it == this->pending.end()) {
            throw CorruptProgram("wait on an unknown or already completed transfer");
        }
        Pending p = it->second;
        this->pending.erase(it);
        if (!p.destination.empty()) {
            std::memcpy(p.destination.data(), this->frame_data(p.frame, p.destination.size()), p.destination.size());
        }
        return p.completion;
    }

    FileStorage::FileStorage(std::string path) : file_path(std::move(path)) {
        this->fd = ::open(this->file_path.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
        if (this->fd < 0) {
            throw IoError("cannot open swap file " + this->file_path + ": " + std::strerror(errno));
        }
    }

    FileStorage::~FileStorage() {
        for (auto& [t, f] : this->pending) {
            if (f.valid()) {
                f.wait();
            }
        }
        if (this->fd >= 0) {
            ::close(this->fd);
            ::unlink(this->file_path.c_str());
        }
    }

    void FileStorage::reserve(std::uint64_t frames, std::uint64_t bytes) {
        this->frame_bytes = bytes;
        if (::ftruncate(this->fd, static_cast<off_t>(frames * bytes)) != 0) {
            throw IoError("cannot size swap file " + this->file_path + ": " + std::strerror(errno));
        }
    }

    Token FileStorage::issue_read(StorageFrame frame, std::span<std::byte> destination, double) {
        const off_t offset = static_cast<off_t>(frame * this->frame_bytes);
        const int file = this->fd;
        const std::string path = this->file_path;
        Token t = this->next_token++;
        this->pending.emplace(t, std::async(std::launch::async, [=]() {
            std::size_t done = 0;
            while (done < destination.size()) {
                ssize_t n = ::pread(file, destination.data() + done, destination.size() - done,
                                    offset + static_cast<off_t>(done));
                if (n < 0 && errno == EINTR) {
                    continue;
                }
                if (n < 0) {
                    throw IoError("read failed on " + path + ": " + std::strerror(errno));
                }
                if (n == 0) {
                    std::memset(destination.data() + done, 0, destination.size() - done);
                    break;
                }
                done += static_cast<std::size_t>(n);
            }
        }));
        return t;
    }

    Token FileStorage::issue_write(StorageFrame frame, std::span<const std::byte> source, double) {
        const off_t offset = static_cast<off_t>(frame * this->frame_bytes);
        const int file = this->fd;
        const std::string path = this->file_path;
        auto copy = std::make_shared<std::vector<std::byte>>(source.begin(), source.end());
        Token t = this->next_token++;
        this->pending.emplace(t, std::async(std::launch::async, [=]() {
            std::size_t done = 0;
            while (done < copy->size()) {
                ssize_t n = ::pwrite(file, copy->data() + done, copy->size() - done, offset + static_cast<off_t>(done));
                if (n < 0 && errno == EINTR) {
                    continue;
                }
                if (n < 0) {
                    throw IoError("write failed on " + path + ": " + std::strerror(errno));
                }
                done += static_cast<std::size_t>(n);
            }
        }));
        return t;
    }

    double FileStorage::wait(Token token) {
        auto it = this->pending.find(token);
        if (it == this->pending.end()) {
            throw CorruptProgram("wait on an unknown or already completed transfer");
        }
        auto fut = std::move(it->second);
        this->pending.erase(it);
        fut.get();
        return 0;
    }
}
