/**
 * @file engine/channel.hpp
 * @brief Point-to-point links between the workers of one party.
 *
 * Sends capture their bytes when posted. Receives are filled, in the order
 * they were posted for each peer, by the next barrier(), which also waits
 * for every outstanding send.
 */

#ifndef MEMPLAN_ENGINE_CHANNEL_HPP_
#define MEMPLAN_ENGINE_CHANNEL_HPP_

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "memplan/addr.hpp"

namespace memplan::engine {
    class Channel {
    public:
        virtual ~Channel() = default;

        virtual void post_send(WorkerId peer, std::span<const std::byte> data) = 0;
        virtual void post_receive(WorkerId peer, std::span<std::byte> destination) = 0;
        virtual void barrier() = 0;
    };

    /** @brief Message queues shared by the workers of one process. */
    class InProcessHub {
    public:
        explicit InProcessHub(WorkerId workers);

        std::unique_ptr<Channel> endpoint(WorkerId self);

        WorkerId workers() const {
            return this->count;
        }

    private:
        friend class InProcessChannel;

        struct Queue {
            std::mutex lock;
            std::condition_variable ready;
            std::deque<std::vector<std::byte>> messages;
        };

        Queue& queue(WorkerId from, WorkerId to) {
            return *this->queues[from * this->count + to];
        }

        WorkerId count;
        std::vector<std::unique_ptr<Queue>> queues;
    };

    /**
     * @brief TCP links, one connection per pair of workers. Each message is
     * an 8-byte little-endian length followed by the payload.
     */
    class TcpChannel final : public Channel {
    public:
        /** @param endpoints "host:port" per worker; this worker listens on its own. */
        TcpChannel(WorkerId self, const std::vector<std::string>& endpoints);
        ~TcpChannel() override;

        void post_send(WorkerId peer, std::span<const std::byte> data) override;
        void post_receive(WorkerId peer, std::span<std::byte> destination) override;
        void barrier() override;

    private:
        struct Outgoing {
            WorkerId peer;
            std::vector<std::byte> data;
        };

        struct Incoming {
            WorkerId peer;
            std::span<std::byte> destination;
        };

        WorkerId self;
        std::vector<int> sockets;
        std::vector<Outgoing> sends;
        std::vector<Incoming> receives;
    };
}

#endif
