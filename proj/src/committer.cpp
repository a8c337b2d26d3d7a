#include "eovsim/committer.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace eovsim {

std::vector<ValidationResult> validate_block(const Block& block,
    const EndorsementPolicy& policy, const WorldState& state)
{
    std::vector<ValidationResult> out;
    out.reserve(block.txns.size());
    // Versions written by earlier valid transactions of this block.
    std::unordered_map<std::string_view, Version> overlay;

    for (std::uint32_t i = 0; i < block.txns.size(); ++i)
    {
        const Envelope& env = *block.txns[i];
        ValidationResult r;
        r.txn_id = env.txn_id;

        const bool ids_match = std::all_of(env.endorsements.begin(), env.endorsements.end(),
            [&](const EndorsementRef& e) { return e && e->txn_id == env.txn_id; });
        if (env.endorsements.empty() || !ids_match ||
            !policy_satisfied(policy, env.endorsements).satisfied)
        {
            r.flag = TxnFlag::PolicyViolation;
            out.push_back(std::move(r));
            continue;
        }

        bool conflict = false;
        for (const ReadEntry& read : env.reads())
        {
            std::optional<Version> found;
            if (auto it = overlay.find(read.key); it != overlay.end())
                found = it->second;
            else if (auto e = state.read(read.key))
                found = e->version;
            if (found != read.version)
                conflict = true;
            r.checked_versions.push_back(CheckedVersion{read.key, read.version, found});
        }
        if (conflict)
        {
            r.flag = TxnFlag::MVCCConflict;
        }
        else
        {
            for (const WriteEntry& w : env.writes())
                overlay[w.key] = Version{block.height, i};
        }
        out.push_back(std::move(r));
    }
    return out;
}

void FlagCounts::add(TxnFlag f)
{
    switch (f)
    {
    case TxnFlag::Valid: ++valid; break;
    case TxnFlag::PolicyViolation: ++policy_violation; break;
    case TxnFlag::MVCCConflict: ++mvcc_conflict; break;
    }
}

FlagCounts& FlagCounts::operator+=(const FlagCounts& o)
{
    valid += o.valid;
    policy_violation += o.policy_violation;
    mvcc_conflict += o.mvcc_conflict;
    return *this;
}

CommitOutcome commit_block(BlockRef block, const std::vector<ValidationResult>& results,
    Ledger& ledger, WorldState& state)
{
    if (!block || results.size() != block->txns.size())
        throw ChainIntegrityError("commit_block: results do not match the block");

    CommitOutcome out;
    std::vector<TxnFlag> flags;
    flags.reserve(results.size());
    for (const auto& r : results)
    {
        flags.push_back(r.flag);
        out.counts.add(r.flag);
    }

    out.height = ledger.append_block(block, flags);
    for (std::uint32_t i = 0; i < results.size(); ++i)
        if (results[i].flag == TxnFlag::Valid)
            state.apply_write_set(block->txns[i]->writes(), Version{out.height, i});
    out.state_digest = state.digest();
    return out;
}

std::vector<BlockRef> InOrderBuffer::offer(BlockRef block)
{
    std::vector<BlockRef> ready;
    if (!block)
        return ready;
    const std::uint64_t h = block->height;
    if (h < next_ || held_.count(h) != 0)
    {
        ++duplicates_;
        return ready;
    }
    held_.emplace(h, std::move(block));
    for (auto it = held_.begin(); it != held_.end() && it->first == next_; it = held_.erase(it))
    {
        ready.push_back(std::move(it->second));
        ++next_;
    }
    return ready;
}

std::vector<std::uint32_t> gossip_anchors(std::uint32_t index, std::uint32_t n_endorsing,
    std::uint32_t fanout)
{
    std::vector<std::uint32_t> out;
    if (n_endorsing == 0)
        return out;
    const std::uint32_t k = std::min(fanout, n_endorsing);
    for (std::uint32_t i = 0; i < k; ++i)
        out.push_back((index + i) % n_endorsing);
    return out;
}

std::vector<std::uint32_t> gossip_targets(std::uint32_t anchor, std::uint32_t n_endorsing,
    std::uint32_t n_non_endorsing, std::uint32_t fanout)
{
    std::vector<std::uint32_t> out;
    for (std::uint32_t j = 0; j < n_non_endorsing; ++j)
    {
        const auto anchors = gossip_anchors(j, n_endorsing, fanout);
        if (std::find(anchors.begin(), anchors.end(), anchor) != anchors.end())
            out.push_back(j);
    }
    return out;
}

} // namespace eovsim
