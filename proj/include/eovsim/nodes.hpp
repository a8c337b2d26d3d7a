#pragma once

#include "eovsim/committer.hpp"
#include "eovsim/config.hpp"
#include "eovsim/driver.hpp"
#include "eovsim/endorser.hpp"
#include "eovsim/ordering.hpp"
#include "eovsim/sim_net.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace eovsim {

// Wire sizes derived from MessageSizes.
std::uint32_t proposal_size(const MessageSizes& s, const Proposal& p);
std::uint32_t endorsement_size(const MessageSizes& s, const Endorsement& e);
std::uint32_t envelope_size(const MessageSizes& s, const ReadSet& reads, const WriteSet& writes,
    std::size_t n_endorsements);

// Shared, immutable wiring for one run.
struct Directory
{
    std::vector<NodeId> clients;
    std::vector<NodeId> endorsing_peers;
    std::vector<NodeId> non_endorsing_peers;
    std::vector<NodeId> orderers;
    std::vector<NodeId> brokers;

    EndorsementPolicy policy;
    ServiceTimes service;
    MessageSizes sizes;
};

class ClientNode final : public Node
{
public:
    ClientNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
        ClientConfig config, std::vector<Proposal> workload);

    void start();
    void on_message(const Message& msg) override;

    const std::vector<TxnJourney>& journeys() const noexcept { return journeys_; }
    NodeId home_peer() const;
    // Commit notices for journeys already dropped at the client.
    std::uint64_t late_commits() const noexcept { return late_commits_; }

private:
    enum class Phase : std::uint8_t { Endorsing, Broadcasting, AwaitingCommit, Done };

    struct Slot
    {
        std::shared_ptr<const Proposal> proposal;
        std::optional<EndorsementCollector> collector;
        Phase phase = Phase::Endorsing;
    };

    void submit(std::uint64_t seq);
    void on_endorsement(const EndorsementBody& body);
    void broadcast(std::uint64_t seq);
    void finish(std::uint64_t seq, JourneyStatus status);
    void set_timer(std::uint32_t tag, std::uint64_t arg, Duration delay);

    const Directory& dir_;
    std::uint32_t index_;
    ClientConfig config_;
    std::vector<Proposal> workload_;
    std::uint64_t planned_;
    std::vector<Slot> slots_;
    std::vector<TxnJourney> journeys_;
    std::uint64_t late_commits_ = 0;
};

class PeerNode final : public Node
{
public:
    PeerNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
        bool endorsing, std::vector<bool> authorized_clients, BlockRef genesis,
        std::uint32_t gossip_fanout);

    void on_message(const Message& msg) override;

    bool endorsing() const noexcept { return endorsing_; }
    const Ledger& ledger() const noexcept { return ledger_; }
    const WorldState& state() const noexcept { return state_; }
    // State digest after each committed height, genesis included.
    const std::vector<Digest>& state_history() const noexcept { return state_history_; }
    const FlagCounts& flag_counts() const noexcept { return flags_; }
    std::uint64_t refusals() const noexcept { return refusals_; }
    std::uint64_t duplicate_blocks() const noexcept { return buffer_.duplicates(); }
    Duration busy_time() const noexcept { return cpu_.busy_time(); }

private:
    void on_block(const BlockRef& block);
    void commit(const BlockRef& block);
    Duration validation_cost(const Block& block) const;

    const Directory& dir_;
    std::uint32_t index_;
    bool endorsing_;
    std::optional<Endorser> endorser_;
    ServiceQueue cpu_;
    Ledger ledger_;
    WorldState state_;
    InOrderBuffer buffer_;
    std::vector<Digest> state_history_;
    FlagCounts flags_;
    std::uint64_t refusals_ = 0;
    std::vector<bool> home_client_;
    std::vector<NodeId> gossip_targets_;
};

class OrdererNode final : public Node
{
public:
    OrdererNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
        bool cuts_blocks, BlockCutterConfig cutter, std::uint32_t queue_capacity,
        Digest genesis_hash);

    void on_message(const Message& msg) override;

    const OrdererCounters& counters() const noexcept { return admission_.counters(); }
    const std::vector<BlockRef>& cut_blocks() const noexcept { return cut_blocks_; }
    Duration busy_time() const noexcept { return cpu_.busy_time(); }

private:
    void on_envelope(const EnvelopeBody& body);
    void on_committed(const LogRecordBody& body);
    void cut_ready();
    void rearm();
    void deliver(Block block);

    const Directory& dir_;
    std::uint32_t index_;
    bool cuts_blocks_;
    ServiceQueue cpu_;
    BroadcastAdmission admission_;
    BlockCutter cutter_;
    std::uint64_t next_height_ = 1;
    Digest tip_;
    std::optional<SimTime> armed_;
    std::uint64_t timer_generation_ = 0;
    std::vector<BlockRef> cut_blocks_;
};

class BrokerNode final : public Node
{
public:
    BrokerNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
        ReplicationConfig replication);

    void on_message(const Message& msg) override;

    bool leader() const noexcept { return index_ == 0; }
    std::uint64_t records_held() const noexcept { return held_; }
    const ReplicatedLog* log() const noexcept { return log_ ? &*log_ : nullptr; }
    Duration busy_time() const noexcept { return cpu_.busy_time(); }

private:
    void on_append(const LogRecordBody& body);
    void publish(const std::vector<std::uint64_t>& offsets);

    const Directory& dir_;
    std::uint32_t index_;
    ServiceQueue cpu_;
    std::optional<ReplicatedLog> log_;
    std::vector<std::uint32_t> origin_; // per offset, the orderer that received it
    std::uint64_t held_ = 0;
};

} // namespace eovsim
