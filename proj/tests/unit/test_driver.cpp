#include "eovsim/driver.hpp"

#include "../support/fixtures.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

using namespace eovsim;
using namespace std::chrono_literals;

TEST_CASE("T=30 for 10 s schedules 300 submissions at i/30 s", "[driver]")
{
    CHECK(planned_submissions(30.0, 10s) == 300);
    CHECK(submission_time(30.0, 0) == SimTime{0});
    CHECK(submission_time(30.0, 1) == SimTime{33333us});
    CHECK(submission_time(30.0, 2) == SimTime{66667us});
    CHECK(submission_time(30.0, 299) == SimTime{9966667us});
    CHECK(submission_time(30.0, 300) == SimTime{10s});
}

TEST_CASE("T=1 for 5 s schedules exactly five", "[driver]")
{
    CHECK(planned_submissions(1.0, 5s) == 5);
    CHECK(submission_time(1.0, 4) == SimTime{4s});
}

TEST_CASE("the schedule covers [0, duration) for arbitrary rates", "[driver][property]")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 500; ++trial)
    {
        const double rate = 0.1 + static_cast<double>(rng() % 100000) / 97.0;
        const Duration d{static_cast<std::int64_t>(1 + rng() % 60'000'000)};
        const auto n = planned_submissions(rate, d);
        if (n > 0)
            REQUIRE(submission_time(rate, n - 1) < d);
        REQUIRE(submission_time(rate, n) >= d);
        for (std::uint64_t i = 1; i < std::min<std::uint64_t>(n, 50); ++i)
            REQUIRE(submission_time(rate, i - 1) < submission_time(rate, i));
    }
    CHECK(planned_submissions(0.0, 10s) == 0);
}

TEST_CASE("invalid client configs name the field", "[driver]")
{
    ClientConfig c;
    c.rate_tps = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ClientConfig{};
    c.endorse_timeout = Duration{0};
    try
    {
        c.validate();
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.field() == "timeouts_ms.endorse");
    }
}

TEST_CASE("the collector is satisfied on the last matching endorsement", "[driver][collector]")
{
    const auto policy = EndorsementPolicy::all_of(3);
    EndorsementCollector col(policy, 3);
    const WriteSet w{{"a", 1}};
    CHECK(col.add(test::endorsement("t", 2, {}, w)) == EndorsementCollector::State::Collecting);
    CHECK(col.add(test::endorsement("t", 0, {}, w)) == EndorsementCollector::State::Collecting);
    CHECK(col.add(test::endorsement("t", 1, {}, w)) == EndorsementCollector::State::Satisfied);
    REQUIRE(col.witness().size() == 3);
    CHECK(col.witness()[0]->peer.index == 0);
    CHECK(col.witness()[2]->peer.index == 2);
    // Later responses change nothing.
    CHECK(col.add_refusal(Identity{NodeClass::Peer, 1}) == EndorsementCollector::State::Satisfied);
}

TEST_CASE("threshold N-1 completes without the straggler", "[driver][collector]")
{
    const auto policy = EndorsementPolicy::k_of(4, 3);
    EndorsementCollector col(policy, 4);
    const WriteSet w{{"a", 1}};
    col.add(test::endorsement("t", 0, {}, w));
    col.add(test::endorsement("t", 1, {}, w));
    CHECK(col.add(test::endorsement("t", 3, {}, w)) == EndorsementCollector::State::Satisfied);
    CHECK(col.responses() == 3);
}

TEST_CASE("the collector fails as soon as the policy is out of reach", "[driver][collector]")
{
    const auto policy = EndorsementPolicy::all_of(3);
    SECTION("a refusal under all-of")
    {
        EndorsementCollector col(policy, 3);
        CHECK(col.add_refusal(Identity{NodeClass::Peer, 0}) == EndorsementCollector::State::Failed);
    }
    SECTION("a divergent endorsement under all-of")
    {
        EndorsementCollector col(policy, 3);
        col.add(test::endorsement("t", 0, {}, WriteSet{{"a", 1}}));
        CHECK(col.add(test::endorsement("t", 1, {}, WriteSet{{"a", 2}})) ==
              EndorsementCollector::State::Failed);
    }
    SECTION("k-of tolerates one divergence")
    {
        const auto two_of_three = EndorsementPolicy::k_of(3, 2);
        EndorsementCollector col(two_of_three, 3);
        col.add(test::endorsement("t", 0, {}, WriteSet{{"a", 1}}));
        CHECK(col.add(test::endorsement("t", 1, {}, WriteSet{{"a", 2}})) ==
              EndorsementCollector::State::Collecting);
        CHECK(col.add(test::endorsement("t", 2, {}, WriteSet{{"a", 2}})) ==
              EndorsementCollector::State::Satisfied);
        CHECK(col.witness()[0]->peer.index == 1);
    }
}

TEST_CASE("the collector agrees with policy_satisfied on every prefix", "[driver][collector][property]")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 2000; ++trial)
    {
        const auto n = static_cast<std::uint32_t>(1 + rng() % 6);
        const auto policy = EndorsementPolicy::k_of(n, static_cast<std::uint32_t>(1 + rng() % n));
        EndorsementCollector col(policy, n);
        std::vector<EndorsementRef> got;
        std::vector<std::uint32_t> order(n);
        for (std::uint32_t i = 0; i < n; ++i)
            order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::uint32_t peer : order)
        {
            auto state = EndorsementCollector::State::Collecting;
            if (rng() % 5 == 0)
            {
                state = col.add_refusal(Identity{NodeClass::Peer, peer});
            }
            else
            {
                auto e = test::endorsement("t", peer, {}, WriteSet{{"a", static_cast<std::int64_t>(rng() % 2)}});
                got.push_back(e);
                state = col.add(e);
            }
            const bool satisfied = policy_satisfied(policy, got).satisfied;
            if (satisfied)
            {
                REQUIRE(state == EndorsementCollector::State::Satisfied);
                break;
            }
            REQUIRE(state != EndorsementCollector::State::Satisfied);
            if (state == EndorsementCollector::State::Failed)
                break;
        }
        // Failed only when the final outcome could not have satisfied the policy.
        if (col.state() == EndorsementCollector::State::Failed)
            REQUIRE_FALSE(policy_satisfied(policy, got).satisfied);
    }
}

TEST_CASE("journey status names", "[driver]")
{
    CHECK(to_string(JourneyStatus::DroppedEndorsement) == "DroppedEndorsement");
    CHECK(to_string(JourneyStatus::InFlight) == "InFlight");
}
