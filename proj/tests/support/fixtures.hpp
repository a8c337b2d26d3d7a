#pragma once

#include "eovsim/committer.hpp"
#include "eovsim/endorser.hpp"
#include "eovsim/ordering.hpp"
#include "eovsim/sim_net.hpp"

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace eovsim::test {

// Records every delivery with the time it arrived.
class Recorder final : public Node
{
public:
    struct Seen
    {
        SimTime at;
        MessageKind kind;
        std::uint64_t arg;
        NodeId src;
    };

    Recorder(Engine& engine, NodeId id) : Node(engine, id) {}

    void on_message(const Message& msg) override
    {
        std::uint64_t arg = 0;
        if (const auto* t = std::get_if<TimerBody>(&msg.body))
            arg = t->arg;
        seen.push_back(Seen{engine().now(), msg.kind, arg, msg.src});
    }

    std::vector<Seen> seen;
};

inline Message timer(std::uint64_t arg = 0, std::uint32_t tag = 1)
{
    Message m;
    m.kind = MessageKind::TimerFire;
    m.body = TimerBody{tag, arg};
    return m;
}

// Stand-in for a payload message of a given size; arg travels in a timer body.
inline Message sized(std::uint32_t bytes, std::uint64_t arg = 0)
{
    Message m;
    m.kind = MessageKind::Proposal;
    m.size_bytes = bytes;
    m.body = TimerBody{0, arg};
    return m;
}

inline EndorsementRef endorsement(const std::string& txn, std::uint32_t peer, ReadSet reads,
    WriteSet writes)
{
    auto e = std::make_shared<Endorsement>();
    e->txn_id = txn;
    e->peer = Identity{NodeClass::Peer, peer};
    e->reads = std::move(reads);
    e->writes = std::move(writes);
    e->response = 0;
    return e;
}

inline EnvelopeRef envelope(const std::string& txn, std::vector<EndorsementRef> endorsements,
    std::uint32_t size_bytes = 1000)
{
    auto env = std::make_shared<Envelope>();
    env->txn_id = txn;
    env->endorsements = std::move(endorsements);
    env->size_bytes = size_bytes;
    return env;
}

// Envelope endorsed identically by peers 0..n-1.
inline EnvelopeRef agreed_envelope(const std::string& txn, std::uint32_t n, const ReadSet& reads,
    const WriteSet& writes)
{
    std::vector<EndorsementRef> es;
    for (std::uint32_t p = 0; p < n; ++p)
        es.push_back(endorsement(txn, p, reads, writes));
    return envelope(txn, std::move(es));
}

inline BlockRef block_of(std::uint64_t height, Digest prev, std::vector<EnvelopeRef> txns,
    CutReason reason = CutReason::CountThreshold)
{
    auto b = std::make_shared<Block>();
    b->height = height;
    b->prev_hash = prev;
    b->txns = std::move(txns);
    b->cut_reason = reason;
    return b;
}

inline BlockRef genesis_block(const WriteSet& writes)
{
    auto e = std::make_shared<Endorsement>();
    e->txn_id = "genesis";
    e->peer = Identity{NodeClass::Orderer, 0};
    e->writes = writes;
    return block_of(0, kGenesisPrevHash, {envelope("genesis", {e})}, CutReason::Genesis);
}

} // namespace eovsim::test
