#include "eovsim/ordering.hpp"

#include <stdexcept>

namespace eovsim {

void BlockCutterConfig::validate() const
{
    if (max_txn_count == 0)
        throw ConfigError("cutter.max_txn_count", "must be positive");
    if (timeout.count() <= 0)
        throw ConfigError("cutter.timeout_ms", "must be positive");
    if (max_block_bytes == 0)
        throw ConfigError("cutter.max_block_bytes", "must be positive");
}

BlockCutter::BlockCutter(BlockCutterConfig config) : config_(config)
{
    config_.validate();
}

void BlockCutter::push(EnvelopeRef envelope, SimTime now)
{
    pending_bytes_ += envelope->size_bytes;
    pending_.emplace_back(std::move(envelope), now);
}

std::optional<CutBatch> BlockCutter::cut(SimTime now)
{
    if (pending_.empty())
        return std::nullopt;
    if (pending_.size() >= config_.max_txn_count)
        return take(config_.max_txn_count, CutReason::CountThreshold);
    if (pending_bytes_ >= config_.max_block_bytes)
    {
        // Shortest prefix that reaches the byte threshold.
        std::uint64_t bytes = 0;
        std::size_t n = 0;
        while (n < pending_.size() && bytes < config_.max_block_bytes)
            bytes += pending_[n++].first->size_bytes;
        return take(n, CutReason::SizeThreshold);
    }
    if (now - pending_.front().second >= config_.timeout)
        return take(pending_.size(), CutReason::Timeout);
    return std::nullopt;
}

std::optional<SimTime> BlockCutter::deadline() const
{
    if (pending_.empty())
        return std::nullopt;
    return pending_.front().second + config_.timeout;
}

CutBatch BlockCutter::take(std::size_t n, CutReason reason)
{
    CutBatch batch;
    batch.reason = reason;
    batch.oldest_pending_at = pending_.front().second;
    batch.txns.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        batch.bytes += pending_.front().first->size_bytes;
        batch.txns.push_back(std::move(pending_.front().first));
        pending_.pop_front();
    }
    pending_bytes_ -= batch.bytes;
    return batch;
}

Block make_block(CutBatch batch, std::uint64_t height, Digest prev_hash, SimTime now)
{
    Block b;
    b.height = height;
    b.prev_hash = prev_hash;
    b.txns = std::move(batch.txns);
    b.cut_reason = batch.reason;
    b.created_at = now;
    b.oldest_pending_at = batch.oldest_pending_at;
    b.payload_bytes = batch.bytes;
    return b;
}

void ReplicationConfig::validate() const
{
    if (brokers == 0)
        throw ConfigError("topology.brokers", "must be at least 1");
    if (factor == 0 || factor > brokers)
        throw ConfigError("replication.factor", "must lie in [1, " + std::to_string(brokers) + "]");
    if (min_insync == 0 || min_insync > factor)
        throw ConfigError("replication.min_insync",
            "must lie in [1, " + std::to_string(factor) + "]");
}

ReplicatedLog::ReplicatedLog(ReplicationConfig config)
    : config_(config), reachable_(config.brokers, true)
{
    config_.validate();
}

std::variant<ReplicatedLog::Appended, ReplicatedLog::Unavailable> ReplicatedLog::append(
    EnvelopeRef record)
{
    std::uint32_t reachable = 0;
    for (std::uint32_t b = 0; b < config_.factor; ++b)
        reachable += reachable_[b] ? 1 : 0;
    if (!reachable_[0] || reachable < config_.min_insync)
        return Unavailable{reachable};

    Appended out;
    out.offset = records_.size();
    Slot slot{std::move(record), 1, std::vector<bool>(config_.factor, false)};
    slot.holders[0] = true;
    records_.push_back(std::move(slot));
    for (std::uint32_t b = 1; b < config_.factor; ++b)
        if (reachable_[b])
            out.followers.push_back(b);
    out.committed = advance();
    return out;
}

std::vector<std::uint64_t> ReplicatedLog::acknowledge(std::uint64_t offset, std::uint32_t broker)
{
    if (offset >= records_.size())
        throw std::logic_error("acknowledge: offset " + std::to_string(offset) + " not in log");
    if (broker == 0 || broker >= config_.factor)
        throw std::logic_error("acknowledge: broker " + std::to_string(broker) +
                               " is not a follower replica");
    Slot& s = records_[offset];
    if (s.holders[broker])
        return {};
    s.holders[broker] = true;
    ++s.copies;
    return advance();
}

void ReplicatedLog::set_reachable(std::uint32_t broker, bool reachable)
{
    reachable_.at(broker) = reachable;
}

std::uint32_t ReplicatedLog::copies(std::uint64_t offset) const
{
    return records_.at(offset).copies;
}

const EnvelopeRef& ReplicatedLog::record(std::uint64_t offset) const
{
    return records_.at(offset).envelope;
}

std::vector<std::uint64_t> ReplicatedLog::advance()
{
    std::vector<std::uint64_t> out;
    while (high_watermark_ < records_.size() &&
           records_[high_watermark_].copies >= config_.min_insync)
        out.push_back(high_watermark_++);
    return out;
}

BroadcastOutcome BroadcastAdmission::offer()
{
    ++counters_.attempts;
    if (in_queue_ >= capacity_)
    {
        ++counters_.refusals;
        return BroadcastOutcome::Refused;
    }
    ++in_queue_;
    return BroadcastOutcome::Accepted;
}

void BroadcastAdmission::on_committed()
{
    if (in_queue_ == 0)
        throw std::logic_error("on_committed: nothing queued");
    --in_queue_;
    ++counters_.successes;
}

} // namespace eovsim
