#pragma once

#include "eovsim/endorser.hpp"
#include "eovsim/smallbank.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eovsim {

struct ClientConfig
{
    double rate_tps = 30.0;
    // Submissions are scheduled in [0, duration).
    Duration duration = std::chrono::seconds{10};
    Duration endorse_timeout = std::chrono::seconds{1};
    Duration broadcast_timeout = std::chrono::seconds{2};

    void validate() const;
};

// Open loop: submission i happens at round(i / rate) seconds, independent of
// any response.
SimTime submission_time(double rate_tps, std::uint64_t index);
std::uint64_t planned_submissions(double rate_tps, Duration duration);

enum class JourneyStatus : std::uint8_t {
    InFlight,
    Committed,
    InvalidCommitted,
    DroppedEndorsement,
    DroppedBroadcast,
};

std::string_view to_string(JourneyStatus s);

struct TxnJourney
{
    std::string txn_id;
    std::uint32_t client = 0;
    SmallbankVariant op = SmallbankVariant::Query;
    SimTime submit_time{0};
    std::optional<SimTime> endorsed_time;
    std::optional<SimTime> broadcast_ack_time;
    std::optional<SimTime> commit_time;
    JourneyStatus status = JourneyStatus::InFlight;
};

// Accumulates endorsement responses for one proposal. Satisfied as soon as
// the policy holds; Failed once no pending response could make it hold.
class EndorsementCollector
{
public:
    enum class State : std::uint8_t { Collecting, Satisfied, Failed };

    EndorsementCollector(const EndorsementPolicy& policy, std::uint32_t expected_responses);

    State add(EndorsementRef endorsement);
    State add_refusal(const Identity& peer);

    State state() const noexcept { return state_; }
    // Valid once Satisfied.
    const std::vector<EndorsementRef>& witness() const noexcept { return witness_; }
    std::uint32_t responses() const noexcept { return responses_; }

private:
    State evaluate();

    const EndorsementPolicy* policy_;
    std::uint32_t expected_;
    std::uint32_t responses_ = 0;
    std::vector<EndorsementRef> received_;
    std::vector<EndorsementRef> witness_;
    // Agreeing groups: first member's index in received_, distinct required peers.
    std::vector<std::pair<std::size_t, std::vector<Identity>>> classes_;
    std::size_t largest_ = 0;
    State state_ = State::Collecting;
};

} // namespace eovsim
