#include "memplan/engine/channel.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "memplan/error.hpp"

namespace memplan::engine {
    class InProcessChannel final : public Channel {
    public:
        InProcessChannel(InProcessHub& hub, WorkerId self) : hub(hub), self(self) {}

        void post_send(WorkerId peer, std::span<const std::byte> data) override {
            this->check(peer);
            auto& q = this->hub.queue(this->self, peer);
            {
                std::lock_guard<std::mutex> g(q.lock);
                q.messages.emplace_back(data.begin(), data.end());
            }
            q.ready.notify_all();
        }

        void post_receive(WorkerId peer, std::span<std::byte> destination) override {
            this->check(peer);
            this->receives.emplace_back(peer, destination);
        }

        void barrier() override {
            for (auto& [peer, dst] : this->receives) {
                auto& q = this->hub.queue(peer, this->self);
                std::unique_lock<std::mutex> g(q.lock);
                q.ready.wait(g, [&]() { return !q.messages.empty(); });
                std::vector<std::byte> msg = std::move(q.messages.front());
                q.messages.pop_front();
                g.unlock();
                if (msg.size() != dst.size()) {
                    throw ProtocolError("worker " + std::to_string(peer) + " sent " + std::to_string(msg.size())
                                        + " bytes, expected " + std::to_string(dst.size()));
                }
                std::memcpy(dst.data(), msg.data(), msg.size());
            }
            this->receives.clear();
        }

    private:
        void check(WorkerId peer) const {
            if (peer == this->self || peer >= this->hub.workers()) {
                throw ProtocolError("invalid peer " + std::to_string(peer));
            }
        }

        InProcessHub& hub;
        WorkerId self;
        std::vector<std::pair<WorkerId, std::span<std::byte>>> receives;
    };

    InProcessHub::InProcessHub(WorkerId workers) : count(workers) {
        for (std::uint64_t i = 0; i != static_cast<std::uint64_t>(workers) * workers; i++) {
            this->queues.push_back(std::make_unique<Queue>());
        }
    }

    std::unique_ptr<Channel> InProcessHub::endpoint(WorkerId self) {
        if (self >= this->count) {
            throw ConfigError("worker " + std::to_string(self) + " out of range");
        }
        return std::make_unique<InProcessChannel>(*this, self);
    }

    namespace {
        std::pair<std::string, std::string> split_endpoint(const std::string& ep) {
            auto colon = ep.rfind(':');
            if (colon == std::string::npos) {
                throw ConfigError("endpoint '" + ep + "' is not host:port");
            }
            return {ep.substr(0, colon), ep.substr(colon + 1)};
        }

        addrinfo* resolve(const std::string& ep, bool passive) {
            auto [host, port] = split_endpoint(ep);
            addrinfo hints{};
            hints.ai_family = AF_INET;
            hints.ai_socktype = SOCK_STREAM;
            hints.ai_flags = passive ? AI_PASSIVE : 0;
            addrinfo* res = nullptr;
            if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
                throw IoError("cannot resolve " + ep + ": " + ::gai_strerror(rc));
            }
            return res;
        }

        void write_all(int fd, const void* data, std::size_t size) {
            const char* p = static_cast<const char*>(data);
            while (size > 0) {
                ssize_t n = ::send(fd, p, size, MSG_NOSIGNAL);
                if (n < 0 && errno == EINTR) {
                    continue;
                }
                if (n <= 0) {
                    throw IoError(std::string("socket write failed: ") + std::strerror(errno));
                }
                p += n;
                size -= static_cast<std::size_t>(n);
            }
        }

        void read_all(int fd, void* data, std::size_t size) {
            char* p = static_cast<char*>(data);
            while (size > 0) {
                ssize_t n = ::recv(fd, p, size, 0);
                if (n < 0 && errno == EINTR) {
                    continue;
                }
                if (n <= 0) {
                    throw IoError("socket read failed or peer closed the connection");
                }
                p += n;
                size -= static_cast<std::size_t>(n);
            }
        }

        void tune(int fd) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        }
    }

    TcpChannel::TcpChannel(WorkerId self, const std::vector<std::string>& endpoints)
        : self(self), sockets(endpoints.size(), -1) {
        const WorkerId n = static_cast<WorkerId>(endpoints.size());
        if (self >= n) {
            throw ConfigError("worker " + std::to_string(self) + " has no endpoint");
        }
        int listener = -1;
        if (self + 1 < n) {
            addrinfo* res = resolve(endpoints[self], true);
            listener = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
            int one = 1;
            ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
            if (::bind(listener, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listener, static_cast<int>(n)) != 0) {
                ::freeaddrinfo(res);
                throw IoError("cannot listen on " + endpoints[self] + ": " + std::strerror(errno));
            }
            ::freeaddrinfo(res);
        }
        /* Lower-numbered workers accept; higher-numbered ones connect. */
        for (WorkerId peer = 0; peer < self; peer++) {
            addrinfo* res = resolve(endpoints[peer], false);
            int fd = -1;
            for (int attempt = 0; attempt != 600; attempt++) {
                fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
                if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
                    break;
                }
                ::close(fd);
                fd = -1;
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            ::freeaddrinfo(res);
            if (fd < 0) {
                throw IoError("cannot connect to worker " + std::to_string(peer) + " at " + endpoints[peer]);
            }
            tune(fd);
            std::uint32_t id = self;
            write_all(fd, &id, sizeof(id));
            this->sockets[peer] = fd;
        }
        for (WorkerId accepted = self + 1; accepted < n; accepted++) {
            int fd = ::accept(listener, nullptr, nullptr);
            if (fd < 0) {
                throw IoError(std::string("accept failed: ") + std::strerror(errno));
            }
            tune(fd);
            std::uint32_t id = 0;
            read_all(fd, &id, sizeof(id));
            if (id <= self || id >= n || this->sockets[id] >= 0) {
                throw ProtocolError("unexpected connection from worker " + std::to_string(id));
            }
            this->sockets[id] = fd;
        }
        if (listener >= 0) {
            ::close(listener);
        }
    }

    TcpChannel::~TcpChannel() {
        for (int fd : this->sockets) {
            if (fd >= 0) {
                ::close(fd);
            }
        }
    }

    void TcpChannel::post_send(WorkerId peer, std::span<const std::byte> data) {
        if (peer == this->self || peer >= this->sockets.size()) {
            throw ProtocolError("invalid peer " + std::to_string(peer));
        }
        this->sends.push_back({peer, std::vector<std::byte>(data.begin(), data.end())});
    }

    void TcpChannel::post_receive(WorkerId peer, std::span<std::byte> destination) {
        if (peer == this->self || peer >= this->sockets.size()) {
            throw ProtocolError("invalid peer " + std::to_string(peer));
        }
        this->receives.push_back({peer, destination});
    }

    void TcpChannel::barrier() {
        std::exception_ptr send_error;
        std::thread writer([&]() {
            try {
                for (const Outgoing& m : this->sends) {
                    std::byte prefix[8];
                    const std::uint64_t len = m.data.size();
                    for (int i = 0; i != 8; i++) {
                        prefix[i] = static_cast<std::byte>(len >> (8 * i));
                    }
                    write_all(this->sockets[m.peer], prefix, sizeof(prefix));
                    write_all(this->sockets[m.peer], m.data.data(), m.data.size());
                }
            } catch (...) {
                send_error = std::current_exception();
            }
        });
        std::exception_ptr receive_error;
        try {
            for (const Incoming& r : this->receives) {
                std::byte prefix[8];
                read_all(this->sockets[r.peer], prefix, sizeof(prefix));
                std::uint64_t len = 0;
                for (int i = 0; i != 8; i++) {
                    len |= static_cast<std::uint64_t>(prefix[i]) << (8 * i);
                }
                if (len != r.destination.size()) {
                    throw ProtocolError("worker " + std::to_string(r.peer) + " sent " + std::to_string(len)
                                        + " bytes, expected " + std::to_string(r.destination.size()));
                }
                read_all(this->sockets[r.peer], r.destination.data(), len);
            }
        } catch (...) {
            receive_error = std::current_exception();
        }
        writer.join();
        this->sends.clear();
        this->receives.clear();
        if (receive_error) {
            std::rethrow_exception(receive_error);
        }
        if (send_error) {
            std::rethrow_exception(send_error);
        }
    }
}
