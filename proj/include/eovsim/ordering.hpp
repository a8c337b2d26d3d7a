#pragma once

#include "eovsim/endorser.hpp"
#include "eovsim/ledger.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace eovsim {

struct Envelope
{
    std::string txn_id;
    std::shared_ptr<const Proposal> proposal;
    std::vector<EndorsementRef> endorsements; // the witnessing subset
    std::uint32_t client = 0;
    SimTime broadcast_at{0};
    std::uint32_t size_bytes = 0;

    // Every endorsement in the witness carries the same sets.
    const ReadSet& reads() const { return endorsements.front()->reads; }
    const WriteSet& writes() const { return endorsements.front()->writes; }
};

struct BlockCutterConfig
{
    std::uint32_t max_txn_count = 100;
    Duration timeout = std::chrono::seconds{2};
    std::uint64_t max_block_bytes = 10ull * 1024 * 1024;

    void validate() const;
};

struct CutBatch
{
    std::vector<EnvelopeRef> txns;
    CutReason reason = CutReason::CountThreshold;
    SimTime oldest_pending_at{0};
    std::uint64_t bytes = 0;
};

// Pending envelopes in committed-offset order. Conditions are checked
// count first, then size, then timeout.
class BlockCutter
{
public:
    explicit BlockCutter(BlockCutterConfig config);

    void push(EnvelopeRef envelope, SimTime now);
    std::optional<CutBatch> cut(SimTime now);

    // Time at which the oldest pending envelope times out.
    std::optional<SimTime> deadline() const;
    std::size_t pending() const noexcept { return pending_.size(); }
    const BlockCutterConfig& config() const noexcept { return config_; }

private:
    CutBatch take(std::size_t n, CutReason reason);

    BlockCutterConfig config_;
    std::deque<std::pair<EnvelopeRef, SimTime>> pending_;
    std::uint64_t pending_bytes_ = 0;
};

// Wraps a cut batch into the next block of a chain.
Block make_block(CutBatch batch, std::uint64_t height, Digest prev_hash, SimTime now);

struct ReplicationConfig
{
    std::uint32_t brokers = 4;
    std::uint32_t factor = 3;     // copies including the leader
    std::uint32_t min_insync = 2; // copies required to commit, leader included

    void validate() const;
};

// Leader-side bookkeeping of a single-partition log. Broker 0 leads; the
// designated replicas are brokers 0 .. factor-1.
class ReplicatedLog
{
public:
    struct Unavailable
    {
        std::uint32_t reachable_replicas = 0;
    };

    struct Appended
    {
        std::uint64_t offset = 0;
        std::vector<std::uint32_t> followers;
        std::vector<std::uint64_t> committed; // newly committed offsets, ascending
    };

    explicit ReplicatedLog(ReplicationConfig config);

    std::variant<Appended, Unavailable> append(EnvelopeRef record);

    // Records one follower copy; returns newly committed offsets, ascending.
    std::vector<std::uint64_t> acknowledge(std::uint64_t offset, std::uint32_t broker);

    void set_reachable(std::uint32_t broker, bool reachable);

    std::uint64_t size() const noexcept { return records_.size(); }
    std::uint64_t committed() const noexcept { return high_watermark_; }
    std::uint32_t copies(std::uint64_t offset) const;
    const EnvelopeRef& record(std::uint64_t offset) const;
    const ReplicationConfig& config() const noexcept { return config_; }

private:
    std::vector<std::uint64_t> advance();

    struct Slot
    {
        EnvelopeRef envelope;
        std::uint32_t copies = 1;
        std::vector<bool> holders;
    };

    ReplicationConfig config_;
    std::vector<bool> reachable_;
    std::vector<Slot> records_;
    std::uint64_t high_watermark_ = 0; // offsets below are committed
};

// Orderer front-end admission: attempts are counted on receipt, successes
// when the record commits. Their ratio is the ordering backlog indicator.
struct OrdererCounters
{
    std::uint64_t attempts = 0;
    std::uint64_t successes = 0;
    std::uint64_t refusals = 0;

    OrdererCounters& operator+=(const OrdererCounters& o)
    {
        attempts += o.attempts;
        successes += o.successes;
        refusals += o.refusals;
        return *this;
    }
};

enum class BroadcastOutcome : std::uint8_t { Accepted, Refused };

class BroadcastAdmission
{
public:
    explicit BroadcastAdmission(std::uint32_t capacity) : capacity_(capacity) {}

    BroadcastOutcome offer();
    void on_committed();

    std::uint32_t in_queue() const noexcept { return in_queue_; }
    const OrdererCounters& counters() const noexcept { return counters_; }

private:
    std::uint32_t capacity_;
    std::uint32_t in_queue_ = 0;
    OrdererCounters counters_;
};

} // namespace eovsim
