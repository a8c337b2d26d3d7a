#include "eovsim/endorser.hpp"

#include <algorithm>
#include <stdexcept>

namespace eovsim {

std::string Identity::str() const
{
    return std::string(to_string(role)) + std::to_string(index);
}

EndorsementPolicy EndorsementPolicy::all_of(std::uint32_t n_peers)
{
    return k_of(n_peers, n_peers);
}

EndorsementPolicy EndorsementPolicy::k_of(std::uint32_t n_peers, std::uint32_t threshold)
{
    EndorsementPolicy p;
    p.required.reserve(n_peers);
    for (std::uint32_t i = 0; i < n_peers; ++i)
        p.required.push_back(Identity{NodeClass::Peer, i});
    p.threshold = threshold;
    p.validate();
    return p;
}

bool EndorsementPolicy::requires_peer(const Identity& id) const
{
    return std::binary_search(required.begin(), required.end(), id);
}

void EndorsementPolicy::validate() const
{
    if (!std::is_sorted(required.begin(), required.end()) ||
        std::adjacent_find(required.begin(), required.end()) != required.end())
        throw ConfigError("policy.required", "identities must be sorted and distinct");
    if (threshold < 1 || threshold > required.size())
        throw ConfigError("policy.threshold", "must lie in [1, " +
                                                  std::to_string(required.size()) + "]");
}

PolicyCheck policy_satisfied(const EndorsementPolicy& policy,
    std::span<const EndorsementRef> endorsements)
{
    PolicyCheck out;
    if (endorsements.empty())
        return out;
    for (const auto& e : endorsements)
        if (!e || e->txn_id != endorsements.front()->txn_id)
            throw std::logic_error("policy_satisfied: endorsements for different transactions");

    // Partition eligible endorsements into classes of equal read/write sets,
    // keeping the first endorsement seen from each peer within a class.
    struct Class
    {
        std::size_t representative;
        std::vector<std::pair<Identity, std::size_t>> members;
    };
    std::vector<Class> classes;
    for (std::size_t i = 0; i < endorsements.size(); ++i)
    {
        const auto& e = *endorsements[i];
        if (!policy.requires_peer(e.peer))
            continue;
        auto it = std::find_if(classes.begin(), classes.end(), [&](const Class& c) {
            return endorsements[c.representative]->same_rw_sets(e);
        });
        if (it == classes.end())
        {
            classes.push_back(Class{i, {}});
            it = std::prev(classes.end());
        }
        const bool seen = std::any_of(it->members.begin(), it->members.end(),
            [&](const auto& m) { return m.first == e.peer; });
        if (!seen)
            it->members.emplace_back(e.peer, i);
    }

    std::optional<std::vector<std::pair<Identity, std::size_t>>> best;
    for (auto& c : classes)
    {
        if (c.members.size() < policy.threshold)
            continue;
        std::sort(c.members.begin(), c.members.end());
        c.members.resize(policy.threshold);
        const auto less = [](const auto& a, const auto& b) { return a.first < b.first; };
        if (!best || std::lexicographical_compare(c.members.begin(), c.members.end(),
                         best->begin(), best->end(), less))
            best = c.members;
    }
    if (!best)
        return out;
    out.satisfied = true;
    for (const auto& m : *best)
        out.witness.push_back(m.second);
    return out;
}

Endorser::Endorser(Identity self, std::vector<bool> authorized_clients)
    : self_(self), authorized_(std::move(authorized_clients))
{
}

bool Endorser::authorized(std::uint32_t client) const
{
    return client < authorized_.size() && authorized_[client];
}

std::optional<Endorsement> Endorser::endorse(const Proposal& proposal,
    const WorldState& committed, SimTime now) const
{
    if (!authorized(proposal.client))
        return std::nullopt;
    ExecResult r = execute(proposal.op, committed);
    return Endorsement{proposal.txn_id, self_, std::move(r.reads), std::move(r.writes), r.response,
        now};
}

} // namespace eovsim
