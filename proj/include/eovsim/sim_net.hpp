#pragma once

#include "eovsim/messages.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eovsim {

// Simulated time is integer microseconds since the start of the run.
using Duration = std::chrono::microseconds;
using SimTime = std::chrono::microseconds;

enum class NodeClass : std::uint8_t { Client, Peer, Orderer, Broker };
inline constexpr std::size_t kNodeClassCount = 4;

std::string_view to_string(NodeClass cls);
std::optional<NodeClass> node_class_from_string(std::string_view name);

class ConfigError : public std::runtime_error
{
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field))
    {
    }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Cost of one directed hop between two node classes. The sender's egress is
// occupied for per_message + size * per_byte_us; base latency is propagation
// and does not occupy the sender.
struct LinkProfile
{
    Duration base{0};
    double per_byte_us = 0.0;
    Duration per_message{0};
};

class LatencyModel
{
public:
    LatencyModel() = default;
    explicit LatencyModel(LinkProfile all, double jitter_fraction = 0.0);

    void set_link(NodeClass from, NodeClass to, LinkProfile profile);
    const LinkProfile& link(NodeClass from, NodeClass to) const noexcept
    {
        return links_[slot(from, to)];
    }

    double jitter_fraction() const noexcept { return jitter_; }
    void set_jitter_fraction(double fraction);

    Duration serialization(NodeClass from, NodeClass to, std::uint32_t size_bytes) const;

private:
    static constexpr std::size_t slot(NodeClass a, NodeClass b) noexcept
    {
        return static_cast<std::size_t>(a) * kNodeClassCount + static_cast<std::size_t>(b);
    }

    std::array<LinkProfile, kNodeClassCount * kNodeClassCount> links_{};
    double jitter_ = 0.0;
};

struct SimEvent
{
    SimTime fire_time{0};
    std::uint64_t seq = 0;
    NodeId target{};
    Message payload;
};

struct TraceSummary
{
    std::uint64_t events_dispatched = 0;
    SimTime final_time{0};
    std::uint64_t digest = 0;
    bool truncated = false;
};

struct NodeTraffic
{
    std::uint64_t msgs_sent = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t msgs_received = 0;
    std::uint64_t bytes_received = 0;
};

class Engine;

class Node
{
public:
    Node(Engine& engine, NodeId id) : engine_(engine), id_(id) {}
    virtual ~Node() = default;
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    NodeId id() const noexcept { return id_; }
    virtual void on_message(const Message& msg) = 0;

protected:
    Engine& engine() noexcept { return engine_; }
    const Engine& engine() const noexcept { return engine_; }

private:
    Engine& engine_;
    NodeId id_;
};

// Single-threaded discrete-event engine. Events fire in (fire_time, seq)
// order; the only randomness is latency jitter, drawn from one generator
// owned here.
class Engine
{
public:
    Engine(LatencyModel model, std::uint64_t seed);

    template <class T, class... Args>
    T& emplace_node(NodeClass cls, Args&&... args)
    {
        const NodeId id{static_cast<std::uint32_t>(nodes_.size())};
        auto node = std::make_unique<T>(*this, id, std::forward<Args>(args)...);
        T& ref = *node;
        nodes_.push_back(std::move(node));
        classes_.push_back(cls);
        traffic_.emplace_back();
        egress_free_.push_back(SimTime{0});
        return ref;
    }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    NodeClass node_class(NodeId id) const;
    Node& node(NodeId id);

    SimTime now() const noexcept { return now_; }

    std::uint64_t schedule(NodeId target, Message payload, Duration delay);

    // Returns the delivery time. Links are lossless and FIFO per (src, dst).
    SimTime send(NodeId src, NodeId dst, Message msg);

    TraceSummary run_until_quiescent(SimTime time_limit);
    std::size_t pending() const noexcept { return queue_.size(); }

    const NodeTraffic& traffic(NodeId id) const;
    const LatencyModel& latency() const noexcept { return model_; }

private:
    struct Later
    {
        bool operator()(const SimEvent& a, const SimEvent& b) const noexcept
        {
            if (a.fire_time != b.fire_time)
                return a.fire_time > b.fire_time;
            return a.seq > b.seq;
        }
    };

    void check_target(NodeId id) const;

    LatencyModel model_;
    std::mt19937_64 rng_;
    SimTime now_{0};
    std::uint64_t next_seq_ = 0;
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<NodeClass> classes_;
    std::vector<NodeTraffic> traffic_;
    std::vector<SimTime> egress_free_;
    std::unordered_map<std::uint64_t, SimTime> link_tail_;
    std::uint64_t dispatched_ = 0;
    std::uint64_t digest_;
};

// Non-preemptive FIFO processor modelling a node's compute. Work completes
// as a self-addressed timer; the completion closure runs at that instant.
class ServiceQueue
{
public:
    static constexpr std::uint32_t kTimerTag = 0xC0DE;

    ServiceQueue(Engine& engine, NodeId owner) : engine_(engine), owner_(owner) {}

    void submit(Duration cost, std::function<void()> work);

    // Call from the owner's on_message for TimerFire with kTimerTag.
    void on_complete();

    SimTime busy_until() const noexcept { return busy_until_; }
    Duration busy_time() const noexcept { return busy_total_; }

private:
    Engine& engine_;
    NodeId owner_;
    SimTime busy_until_{0};
    Duration busy_total_{0};
    std::deque<std::function<void()>> jobs_;
};

} // namespace eovsim
