#include "eovsim/ledger.hpp"

#include "eovsim/ordering.hpp"

#include <nlohmann/json.hpp>

namespace eovsim {

std::string_view to_string(CutReason reason)
{
    switch (reason)
    {
    case CutReason::Genesis: return "Genesis";
    case CutReason::CountThreshold: return "CountThreshold";
    case CutReason::Timeout: return "Timeout";
    case CutReason::SizeThreshold: return "SizeThreshold";
    }
    return "?";
}

std::string_view to_string(TxnFlag flag)
{
    switch (flag)
    {
    case TxnFlag::Valid: return "Valid";
    case TxnFlag::PolicyViolation: return "PolicyViolation";
    case TxnFlag::MVCCConflict: return "MVCCConflict";
    }
    return "?";
}

Digest hash_block(const Block& block)
{
    Fnv1a64 h;
    h.update_u64(block.height);
    h.update_u64(block.prev_hash.value);
    h.update_u32(static_cast<std::uint32_t>(block.txns.size()));
    for (const auto& env : block.txns)
        h.update_string(env->txn_id);
    h.update_byte(static_cast<std::uint8_t>(block.cut_reason));
    return Digest{h.value()};
}

std::uint64_t Ledger::append_block(BlockRef block, std::vector<TxnFlag> flags)
{
    if (!block)
        throw ChainIntegrityError("append_block: null block");
    if (block->height != next_height())
        throw ChainIntegrityError("append_block: expected height " + std::to_string(next_height()) +
                                  ", got " + std::to_string(block->height));
    const Digest expected_prev = blocks_.empty() ? kGenesisPrevHash : blocks_.back().hash;
    if (block->prev_hash != expected_prev)
        throw ChainIntegrityError("append_block: prev_hash mismatch at height " +
                                  std::to_string(block->height));
    if (block->txns.empty())
        throw ChainIntegrityError("append_block: empty block");
    if (!flags.empty() && flags.size() != block->txns.size())
        throw ChainIntegrityError("append_block: flag count does not match txn count");

    const Digest hash = hash_block(*block);
    blocks_.push_back(Stored{std::move(block), hash, std::move(flags)});
    return blocks_.size() - 1;
}

std::optional<std::uint64_t> Ledger::tip_height() const noexcept
{
    if (blocks_.empty())
        return std::nullopt;
    return blocks_.size() - 1;
}

Digest Ledger::tip_hash() const noexcept
{
    return blocks_.empty() ? kGenesisPrevHash : blocks_.back().hash;
}

std::optional<WorldState::Entry> WorldState::read(std::string_view key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end())
        return std::nullopt;
    return it->second;
}

std::uint64_t WorldState::entry_hash(std::string_view key, const Entry& e)
{
    Fnv1a64 h;
    h.update_string(key);
    h.update_u64(static_cast<std::uint64_t>(e.value));
    h.update_u64(e.version.block);
    h.update_u32(e.version.txn);
    return h.value();
}

Digest WorldState::apply_write_set(const WriteSet& writes, Version at)
{
    for (const auto& w : writes)
    {
        auto [it, inserted] = entries_.try_emplace(w.key, Entry{w.value, at});
        if (!inserted)
        {
            if (at < it->second.version)
                throw std::logic_error("apply_write_set: version would decrease for " + w.key);
            digest_ -= entry_hash(it->first, it->second);
            it->second = Entry{w.value, at};
        }
        digest_ += entry_hash(it->first, it->second);
    }
    return Digest{digest_};
}

std::string block_trace_line(const Block& block, const std::vector<TxnFlag>& flags)
{
    nlohmann::json j;
    j["height"] = block.height;
    j["cut_reason"] = std::string(to_string(block.cut_reason));
    j["hash"] = hash_block(block).hex();
    j["created_us"] = block.created_at.count();
    j["oldest_pending_us"] = block.oldest_pending_at.count();
    auto ids = nlohmann::json::array();
    for (const auto& env : block.txns)
        ids.push_back(env->txn_id);
    j["txns"] = std::move(ids);
    auto fl = nlohmann::json::array();
    for (TxnFlag f : flags)
        fl.push_back(std::string(to_string(f)));
    j["flags"] = std::move(fl);
    return j.dump();
}

} // namespace eovsim
