#include "eovsim/driver.hpp"

#include <algorithm>
#include <cmath>

namespace eovsim {

void ClientConfig::validate() const
{
    if (!(rate_tps > 0.0) || !std::isfinite(rate_tps))
        throw ConfigError("rate", "client rate must be positive");
    if (duration.count() <= 0)
        throw ConfigError("duration_s", "must be positive");
    if (endorse_timeout.count() <= 0)
        throw ConfigError("timeouts_ms.endorse", "must be positive");
    if (broadcast_timeout.count() <= 0)
        throw ConfigError("timeouts_ms.broadcast", "must be positive");
}

SimTime submission_time(double rate_tps, std::uint64_t index)
{
    return SimTime{std::llround(static_cast<double>(index) * 1e6 / rate_tps)};
}

std::uint64_t planned_submissions(double rate_tps, Duration duration)
{
    if (!(rate_tps > 0.0) || duration.count() <= 0)
        return 0;
    auto n = static_cast<std::uint64_t>(
        std::floor(static_cast<double>(duration.count()) * rate_tps / 1e6));
    while (submission_time(rate_tps, n) < duration)
        ++n;
    while (n > 0 && submission_time(rate_tps, n - 1) >= duration)
        --n;
    return n;
}

std::string_view to_string(JourneyStatus s)
{
    switch (s)
    {
    case JourneyStatus::InFlight: return "InFlight";
    case JourneyStatus::Committed: return "Committed";
    case JourneyStatus::InvalidCommitted: return "InvalidCommitted";
    case JourneyStatus::DroppedEndorsement: return "DroppedEndorsement";
    case JourneyStatus::DroppedBroadcast: return "DroppedBroadcast";
    }
    return "?";
}

EndorsementCollector::EndorsementCollector(const EndorsementPolicy& policy,
    std::uint32_t expected_responses)
    : policy_(&policy), expected_(expected_responses)
{
}

EndorsementCollector::State EndorsementCollector::add(EndorsementRef endorsement)
{
    if (state_ != State::Collecting)
        return state_;
    ++responses_;
    const Endorsement& e = *endorsement;
    received_.push_back(std::move(endorsement));
    if (policy_->requires_peer(e.peer))
    {
        auto it = std::find_if(classes_.begin(), classes_.end(),
            [&](const auto& c) { return received_[c.first]->same_rw_sets(e); });
        if (it == classes_.end())
        {
            classes_.emplace_back(received_.size() - 1, std::vector<Identity>{});
            it = std::prev(classes_.end());
        }
        if (std::find(it->second.begin(), it->second.end(), e.peer) == it->second.end())
        {
            it->second.push_back(e.peer);
            largest_ = std::max(largest_, it->second.size());
        }
    }
    return evaluate();
}

EndorsementCollector::State EndorsementCollector::add_refusal(const Identity&)
{
    if (state_ != State::Collecting)
        return state_;
    ++responses_;
    return evaluate();
}

EndorsementCollector::State EndorsementCollector::evaluate()
{
    if (largest_ >= policy_->threshold)
    {
        const PolicyCheck check = policy_satisfied(*policy_, received_);
        for (std::size_t i : check.witness)
            witness_.push_back(received_[i]);
        state_ = State::Satisfied;
        return state_;
    }
    const std::uint32_t outstanding = expected_ > responses_ ? expected_ - responses_ : 0;
    if (largest_ + outstanding < policy_->threshold)
        state_ = State::Failed;
    return state_;
}

} // namespace eovsim
