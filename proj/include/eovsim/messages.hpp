#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <variant>
#include <vector>

namespace eovsim {

enum class NodeId : std::uint32_t {};

constexpr std::uint32_t index_of(NodeId id) noexcept
{
    return static_cast<std::uint32_t>(id);
}

struct Proposal;
struct Endorsement;
struct Envelope;
struct Block;

enum class TxnFlag : std::uint8_t { Valid, PolicyViolation, MVCCConflict };

// One kind per hop of the transaction life cycle, plus local timers.
enum class MessageKind : std::uint8_t {
    Proposal,       // client -> endorsing peer
    Endorsement,    // endorsing peer -> client (endorsement or refusal)
    Envelope,       // client -> orderer
    BroadcastReply, // orderer -> client, after the record commits in the log
    LogAppend,      // orderer -> log leader, leader -> follower
    LogAck,         // follower -> leader
    LogDeliver,     // leader -> every orderer, committed record
    BlockDeliver,   // orderer -> endorsing peer
    GossipBlock,    // endorsing peer -> non-endorsing peer
    CommitNotice,   // peer -> client
    TimerFire,
};

std::string_view to_string(MessageKind kind);

struct TimerBody
{
    std::uint32_t tag = 0;
    std::uint64_t arg = 0;
};

struct ProposalBody
{
    std::shared_ptr<const Proposal> proposal;
};

struct EndorsementBody
{
    std::uint64_t seq = 0;
    std::uint32_t peer = 0;
    // Null when the peer refused to endorse.
    std::shared_ptr<const Endorsement> endorsement;
};

struct EnvelopeBody
{
    std::shared_ptr<const Envelope> envelope;
};

struct BroadcastReplyBody
{
    std::uint64_t seq = 0;
};

struct LogRecordBody
{
    std::uint64_t offset = 0; // assigned by the leader; unset on orderer -> leader
    std::uint32_t origin_orderer = 0;
    std::shared_ptr<const Envelope> envelope;
};

struct LogAckBody
{
    std::uint64_t offset = 0;
    std::uint32_t broker = 0;
};

struct BlockBody
{
    std::shared_ptr<const Block> block;
};

struct CommitEntry
{
    std::uint64_t seq = 0;
    TxnFlag flag = TxnFlag::Valid;
};

struct CommitNoticeBody
{
    std::uint64_t height = 0;
    std::vector<CommitEntry> entries;
};

using MessageBody = std::variant<std::monostate, TimerBody, ProposalBody, EndorsementBody,
    EnvelopeBody, BroadcastReplyBody, LogRecordBody, LogAckBody, BlockBody, CommitNoticeBody>;

struct Message
{
    MessageKind kind = MessageKind::TimerFire;
    std::uint32_t size_bytes = 0;
    NodeId src{};
    MessageBody body;
};

} // namespace eovsim
