#pragma once

#include "eovsim/hash.hpp"
#include "eovsim/messages.hpp"
#include "eovsim/sim_net.hpp"

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eovsim {

struct Digest
{
    std::uint64_t value = 0;

    auto operator<=>(const Digest&) const = default;
    std::string hex() const { return to_hex(value); }
};

inline constexpr Digest kGenesisPrevHash{0};

// Position of the write that produced a value: (block height, index in block).
// Ordered lexicographically.
struct Version
{
    std::uint64_t block = 0;
    std::uint32_t txn = 0;

    auto operator<=>(const Version&) const = default;
};

struct ReadEntry
{
    std::string key;
    std::optional<Version> version; // nullopt: key was absent when read

    bool operator==(const ReadEntry&) const = default;
};

struct WriteEntry
{
    std::string key;
    std::int64_t value = 0;

    bool operator==(const WriteEntry&) const = default;
};

using ReadSet = std::vector<ReadEntry>;
using WriteSet = std::vector<WriteEntry>;

enum class CutReason : std::uint8_t { Genesis, CountThreshold, Timeout, SizeThreshold };

std::string_view to_string(CutReason reason);
std::string_view to_string(TxnFlag flag);

using EnvelopeRef = std::shared_ptr<const Envelope>;

struct Block
{
    std::uint64_t height = 0;
    Digest prev_hash = kGenesisPrevHash;
    std::vector<EnvelopeRef> txns;
    CutReason cut_reason = CutReason::CountThreshold;
    SimTime created_at{0};
    // When the oldest transaction in the block reached the block cutter.
    SimTime oldest_pending_at{0};
    std::uint64_t payload_bytes = 0;
};

using BlockRef = std::shared_ptr<const Block>;

// Canonical encoding: height, prev_hash, txn count, each txn id
// (length-prefixed), cut reason.
Digest hash_block(const Block& block);

class ChainIntegrityError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

class Ledger
{
public:
    struct Stored
    {
        BlockRef block;
        Digest hash;
        std::vector<TxnFlag> flags;
    };

    // Returns the height of the appended block.
    std::uint64_t append_block(BlockRef block, std::vector<TxnFlag> flags = {});

    bool empty() const noexcept { return blocks_.empty(); }
    std::uint64_t next_height() const noexcept { return blocks_.size(); }
    std::optional<std::uint64_t> tip_height() const noexcept;
    Digest tip_hash() const noexcept;

    const std::vector<Stored>& blocks() const noexcept { return blocks_; }

private:
    std::vector<Stored> blocks_;
};

// Versioned key/value store. The digest is an order-independent sum of
// per-entry hashes, maintained incrementally on every write.
class WorldState
{
public:
    struct Entry
    {
        std::int64_t value = 0;
        Version version;
        bool operator==(const Entry&) const = default;
    };

    std::optional<Entry> read(std::string_view key) const;

    // Caller has validated the transaction. Versions never move backwards.
    Digest apply_write_set(const WriteSet& writes, Version at);

    Digest digest() const noexcept { return Digest{digest_}; }
    std::size_t size() const noexcept { return entries_.size(); }

    static std::uint64_t entry_hash(std::string_view key, const Entry& e);

    template <class F>
    void for_each(F&& f) const
    {
        for (const auto& [k, e] : entries_)
            f(k, e);
    }

private:
    struct KeyHash
    {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept
        {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::unordered_map<std::string, Entry, KeyHash, std::equal_to<>> entries_;
    std::uint64_t digest_ = 0;
};

// One JSON object per line: height, cut_reason, hash, timestamps, txn ids and
// validity flags.
std::string block_trace_line(const Block& block, const std::vector<TxnFlag>& flags);

} // namespace eovsim
