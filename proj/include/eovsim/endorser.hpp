#pragma once

#include "eovsim/smallbank.hpp"

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eovsim {

// Stand-in for a signed identity: role plus index. Ordered by (role, index).
struct Identity
{
    NodeClass role = NodeClass::Peer;
    std::uint32_t index = 0;

    auto operator<=>(const Identity&) const = default;
    std::string str() const;
};

struct Endorsement
{
    std::string txn_id;
    Identity peer;
    ReadSet reads;
    WriteSet writes;
    std::optional<std::int64_t> response;
    SimTime issued_at{0};

    bool same_rw_sets(const Endorsement& other) const
    {
        return reads == other.reads && writes == other.writes;
    }
};

using EndorsementRef = std::shared_ptr<const Endorsement>;

struct EndorsementPolicy
{
    std::vector<Identity> required; // sorted, distinct
    std::uint32_t threshold = 1;

    // All n endorsing peers required, threshold n.
    static EndorsementPolicy all_of(std::uint32_t n_peers);
    static EndorsementPolicy k_of(std::uint32_t n_peers, std::uint32_t threshold);

    bool requires_peer(const Identity& id) const;
    void validate() const;
};

struct PolicyCheck
{
    bool satisfied = false;
    // Indices into the input span, sorted by peer identity.
    std::vector<std::size_t> witness;
};

// True iff at least `threshold` distinct required peers produced pairwise
// equal read/write sets. Among qualifying subsets the one whose sorted
// identities compare lexicographically smallest is the witness.
// Throws std::logic_error if endorsements name different transactions.
PolicyCheck policy_satisfied(const EndorsementPolicy& policy,
    std::span<const EndorsementRef> endorsements);

class Endorser
{
public:
    Endorser(Identity self, std::vector<bool> authorized_clients);

    // nullopt is a refusal: the client is not authorized.
    std::optional<Endorsement> endorse(const Proposal& proposal, const WorldState& committed,
        SimTime now) const;

    bool authorized(std::uint32_t client) const;
    const Identity& identity() const noexcept { return self_; }

private:
    Identity self_;
    std::vector<bool> authorized_;
};

} // namespace eovsim
