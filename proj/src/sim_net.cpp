#include "eovsim/sim_net.hpp"

#include "eovsim/hash.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace eovsim {

std::string to_hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf, 16);
}

std::string_view to_string(MessageKind kind)
{
    switch (kind)
    {
    case MessageKind::Proposal: return "Proposal";
    case MessageKind::Endorsement: return "Endorsement";
    case MessageKind::Envelope: return "Envelope";
    case MessageKind::BroadcastReply: return "BroadcastReply";
    case MessageKind::LogAppend: return "LogAppend";
    case MessageKind::LogAck: return "LogAck";
    case MessageKind::LogDeliver: return "LogDeliver";
    case MessageKind::BlockDeliver: return "BlockDeliver";
    case MessageKind::GossipBlock: return "GossipBlock";
    case MessageKind::CommitNotice: return "CommitNotice";
    case MessageKind::TimerFire: return "TimerFire";
    }
    return "?";
}

std::string_view to_string(NodeClass cls)
{
    switch (cls)
    {
    case NodeClass::Client: return "client";
    case NodeClass::Peer: return "peer";
    case NodeClass::Orderer: return "orderer";
    case NodeClass::Broker: return "broker";
    }
    return "?";
}

std::optional<NodeClass> node_class_from_string(std::string_view name)
{
    if (name == "client")
        return NodeClass::Client;
    if (name == "peer")
        return NodeClass::Peer;
    if (name == "orderer")
        return NodeClass::Orderer;
    if (name == "broker")
        return NodeClass::Broker;
    return std::nullopt;
}

namespace {

void check_profile(const LinkProfile& p)
{
    if (p.base.count() < 0 || p.per_message.count() < 0 || !(p.per_byte_us >= 0.0))
        throw std::invalid_argument("link profile: latencies must be non-negative");
}

} // namespace

LatencyModel::LatencyModel(LinkProfile all, double jitter_fraction)
{
    check_profile(all);
    links_.fill(all);
    set_jitter_fraction(jitter_fraction);
}

void LatencyModel::set_link(NodeClass from, NodeClass to, LinkProfile profile)
{
    check_profile(profile);
    links_[slot(from, to)] = profile;
}

void LatencyModel::set_jitter_fraction(double fraction)
{
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw std::invalid_argument("jitter_fraction must lie in [0, 1)");
    jitter_ = fraction;
}

Duration LatencyModel::serialization(NodeClass from, NodeClass to, std::uint32_t size_bytes) const
{
    const LinkProfile& p = link(from, to);
    const auto bytes = static_cast<std::int64_t>(std::llround(p.per_byte_us * size_bytes));
    return p.per_message + Duration{bytes};
}

Engine::Engine(LatencyModel model, std::uint64_t seed)
    : model_(std::move(model)), rng_(seed), digest_(Fnv1a64::kOffsetBasis)
{
}

void Engine::check_target(NodeId id) const
{
    if (index_of(id) >= nodes_.size())
        throw ConfigError("target", "unknown node id " + std::to_string(index_of(id)));
}

NodeClass Engine::node_class(NodeId id) const
{
    check_target(id);
    return classes_[index_of(id)];
}

Node& Engine::node(NodeId id)
{
    check_target(id);
    return *nodes_[index_of(id)];
}

const NodeTraffic& Engine::traffic(NodeId id) const
{
    check_target(id);
    return traffic_[index_of(id)];
}

std::uint64_t Engine::schedule(NodeId target, Message payload, Duration delay)
{
    check_target(target);
    if (delay.count() < 0)
        throw std::invalid_argument("schedule: negative delay");
    const std::uint64_t seq = next_seq_++;
    queue_.push(SimEvent{now_ + delay, seq, target, std::move(payload)});
    return seq;
}

SimTime Engine::send(NodeId src, NodeId dst, Message msg)
{
    check_target(src);
    check_target(dst);
    const NodeClass from = classes_[index_of(src)];
    const NodeClass to = classes_[index_of(dst)];
    const LinkProfile& link = model_.link(from, to);

    SimTime& egress = egress_free_[index_of(src)];
    const SimTime depart = std::max(now_, egress) + model_.serialization(from, to, msg.size_bytes);
    egress = depart;

    Duration propagation = link.base;
    if (model_.jitter_fraction() > 0.0 && link.base.count() > 0)
    {
        // Uniform in [1 - j, 1 + j) times the base latency.
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        const double scale = 1.0 + model_.jitter_fraction() * (2.0 * u - 1.0);
        propagation = Duration{std::llround(static_cast<double>(link.base.count()) * scale)};
    }

    SimTime deliver = depart + propagation;
    const std::uint64_t link_key = (std::uint64_t{index_of(src)} << 32) | index_of(dst);
    auto [it, inserted] = link_tail_.try_emplace(link_key, deliver);
    if (!inserted)
    {
        deliver = std::max(deliver, it->second);
        it->second = deliver;
    }

    NodeTraffic& t = traffic_[index_of(src)];
    ++t.msgs_sent;
    t.bytes_sent += msg.size_bytes;

    msg.src = src;
    const std::uint64_t seq = next_seq_++;
    queue_.push(SimEvent{deliver, seq, dst, std::move(msg)});
    return deliver;
}

TraceSummary Engine::run_until_quiescent(SimTime time_limit)
{
    while (!queue_.empty() && queue_.top().fire_time <= time_limit)
    {
        // priority_queue::top is const; the event is moved out before pop.
        SimEvent ev = std::move(const_cast<SimEvent&>(queue_.top()));
        queue_.pop();
        now_ = ev.fire_time;
        ++dispatched_;

        Fnv1a64 h;
        h.update_u64(digest_);
        h.update_u64(static_cast<std::uint64_t>(ev.fire_time.count()));
        h.update_u64(ev.seq);
        h.update_u32(index_of(ev.target));
        h.update_byte(static_cast<std::uint8_t>(ev.payload.kind));
        digest_ = h.value();

        if (ev.payload.kind != MessageKind::TimerFire)
        {
            NodeTraffic& t = traffic_[index_of(ev.target)];
            ++t.msgs_received;
            t.bytes_received += ev.payload.size_bytes;
        }
        nodes_[index_of(ev.target)]->on_message(ev.payload);
    }
    return TraceSummary{dispatched_, now_, digest_, !queue_.empty()};
}

void ServiceQueue::submit(Duration cost, std::function<void()> work)
{
    const SimTime now = engine_.now();
    if (cost.count() == 0 && jobs_.empty() && busy_until_ <= now)
    {
        work();
        return;
    }
    const SimTime start = std::max(now, busy_until_);
    busy_until_ = start + cost;
    busy_total_ += cost;
    jobs_.push_back(std::move(work));
    engine_.schedule(owner_, Message{MessageKind::TimerFire, 0, owner_, TimerBody{kTimerTag, 0}},
        busy_until_ - now);
}

void ServiceQueue::on_complete()
{
    auto work = std::move(jobs_.front());
    jobs_.pop_front();
    work();
}

} // namespace eovsim
