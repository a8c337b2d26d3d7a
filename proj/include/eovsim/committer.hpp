#pragma once

#include "eovsim/endorser.hpp"
#include "eovsim/ledger.hpp"
#include "eovsim/ordering.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eovsim {

struct CheckedVersion
{
    std::string key;
    std::optional<Version> expected;
    std::optional<Version> found;
};

struct ValidationResult
{
    std::string txn_id;
    TxnFlag flag = TxnFlag::Valid;
    std::vector<CheckedVersion> checked_versions;
};

// Validates in block order. The version check for txn i sees the writes of
// the valid transactions 0..i-1 of the same block.
std::vector<ValidationResult> validate_block(const Block& block,
    const EndorsementPolicy& policy, const WorldState& state);

struct FlagCounts
{
    std::uint64_t valid = 0;
    std::uint64_t policy_violation = 0;
    std::uint64_t mvcc_conflict = 0;

    void add(TxnFlag f);
    std::uint64_t total() const noexcept { return valid + policy_violation + mvcc_conflict; }
    FlagCounts& operator+=(const FlagCounts& o);
};

struct CommitOutcome
{
    std::uint64_t height = 0;
    Digest state_digest;
    FlagCounts counts;
};

// Applies only valid write sets, versioned (height, index), then appends
// the block with its flags.
CommitOutcome commit_block(BlockRef block, const std::vector<ValidationResult>& results,
    Ledger& ledger, WorldState& state);

// Hands blocks over strictly in height order: buffers gaps, drops
// duplicates and anything already passed.
class InOrderBuffer
{
public:
    explicit InOrderBuffer(std::uint64_t next_height) : next_(next_height) {}

    std::vector<BlockRef> offer(BlockRef block);

    std::uint64_t next_height() const noexcept { return next_; }
    std::size_t buffered() const noexcept { return held_.size(); }
    std::uint64_t duplicates() const noexcept { return duplicates_; }

private:
    std::uint64_t next_;
    std::map<std::uint64_t, BlockRef> held_;
    std::uint64_t duplicates_ = 0;
};

// Endorsing peers that push blocks to non-endorsing peer `index`:
// round-robin anchors, `fanout` of them.
std::vector<std::uint32_t> gossip_anchors(std::uint32_t index, std::uint32_t n_endorsing,
    std::uint32_t fanout);

// Non-endorsing peers fed by endorsing peer `anchor`.
std::vector<std::uint32_t> gossip_targets(std::uint32_t anchor, std::uint32_t n_endorsing,
    std::uint32_t n_non_endorsing, std::uint32_t fanout);

} // namespace eovsim
