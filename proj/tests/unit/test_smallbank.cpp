#include "eovsim/smallbank.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace eovsim;

namespace {

WorldState bank(std::uint32_t n, std::int64_t checking, std::int64_t savings)
{
    WorkloadConfig cfg;
    cfg.n_accounts = n;
    cfg.initial_checking = checking;
    cfg.initial_savings = savings;
    WorldState s;
    s.apply_write_set(genesis_write_set(cfg), Version{0, 0});
    return s;
}

SmallbankOp op(SmallbankVariant v, std::uint32_t a, std::optional<std::uint32_t> other = {},
    std::int64_t amount = 0)
{
    return SmallbankOp{v, a, other, amount};
}

std::int64_t total(const WorldState& s)
{
    std::int64_t sum = 0;
    s.for_each([&](const std::string&, const WorldState::Entry& e) { sum += e.value; });
    return sum;
}

// Applies a result's writes the way a committer would, one txn per version.
void apply(WorldState& s, const ExecResult& r, std::uint64_t& clock)
{
    if (!r.rejected())
        s.apply_write_set(r.writes, Version{1, static_cast<std::uint32_t>(clock++)});
}

} // namespace

TEST_CASE("DepositChecking reads then writes the new balance", "[smallbank]")
{
    WorldState s = bank(2, 100, 0);
    const auto r = execute(op(SmallbankVariant::DepositChecking, 1, {}, 10), s);
    REQUIRE_FALSE(r.rejected());
    CHECK(r.reads == ReadSet{{checking_key(1), Version{0, 0}}});
    CHECK(r.writes == WriteSet{{checking_key(1), 110}});
    CHECK(*r.response == 110);
}

TEST_CASE("SendPayment with insufficient funds is rejected", "[smallbank]")
{
    WorldState s = bank(3, 30, 0);
    const auto r = execute(op(SmallbankVariant::SendPayment, 1, 2, 50), s);
    CHECK(r.rejected());
    CHECK(r.writes.empty());
}

TEST_CASE("SendPayment moves the amount between checking accounts", "[smallbank]")
{
    WorldState s = bank(3, 100, 0);
    const auto r = execute(op(SmallbankVariant::SendPayment, 1, 2, 40), s);
    REQUIRE_FALSE(r.rejected());
    CHECK(r.writes == WriteSet{{checking_key(1), 60}, {checking_key(2), 140}});
}

TEST_CASE("Amalgamate empties the source into the destination", "[smallbank]")
{
    WorldState s = bank(3, 100, 50);
    const auto r = execute(op(SmallbankVariant::Amalgamate, 1, 2), s);
    REQUIRE_FALSE(r.rejected());
    CHECK(r.writes ==
          WriteSet{{checking_key(1), 0}, {savings_key(1), 0}, {checking_key(2), 100 + 100 + 50}});
}

TEST_CASE("Query reads both balances and writes nothing", "[smallbank]")
{
    WorldState s = bank(2, 7, 5);
    const auto r = execute(op(SmallbankVariant::Query, 0), s);
    CHECK(r.writes.empty());
    CHECK(r.reads.size() == 2);
    CHECK(*r.response == 12);
}

TEST_CASE("TransactSavings and WriteCheck", "[smallbank]")
{
    WorldState s = bank(2, 10, 5);
    CHECK(execute(op(SmallbankVariant::TransactSavings, 0, {}, 3), s).writes ==
          WriteSet{{savings_key(0), 8}});
    // Total 15 covers 12: plain debit.
    CHECK(execute(op(SmallbankVariant::WriteCheck, 0, {}, 12), s).writes ==
          WriteSet{{checking_key(0), -2}});
    // Total 15 does not cover 20: debit plus a penalty of 1.
    CHECK(execute(op(SmallbankVariant::WriteCheck, 0, {}, 20), s).writes ==
          WriteSet{{checking_key(0), -11}});
}

TEST_CASE("unknown accounts and self-transfers are rejected", "[smallbank]")
{
    WorldState s = bank(2, 100, 100);
    CHECK(execute(op(SmallbankVariant::DepositChecking, 9, {}, 1), s).rejected());
    CHECK(execute(op(SmallbankVariant::SendPayment, 0, 0, 1), s).rejected());
    CHECK(execute(op(SmallbankVariant::Amalgamate, 0, std::nullopt), s).rejected());
    const auto r = execute(op(SmallbankVariant::Query, 5), s);
    CHECK(r.rejected());
    CHECK(r.reads.size() == 2);
    CHECK_FALSE(r.reads[0].version);
}

TEST_CASE("execution is pure and writes follow reads", "[smallbank][property]")
{
    std::mt19937_64 rng(11);
    WorkloadConfig cfg;
    cfg.n_accounts = 20;
    WorldState s = bank(20, 1000, 1000);
    const auto proposals = generate(cfg, 3000);
    std::uint64_t clock = 0;
    for (const Proposal& p : proposals)
    {
        const Digest before = s.digest();
        const auto a = execute(p.op, s);
        const auto b = execute(p.op, s);
        REQUIRE(s.digest() == before);
        REQUIRE(a.reads == b.reads);
        REQUIRE(a.writes == b.writes);
        REQUIRE(a.response == b.response);
        std::set<std::string> read_keys;
        for (const auto& r : a.reads)
        {
            read_keys.insert(r.key);
            REQUIRE(r.version == (s.read(r.key) ? std::optional{s.read(r.key)->version} : std::nullopt));
        }
        for (const auto& w : a.writes)
            REQUIRE(read_keys.count(w.key) == 1);
        if (a.rejected())
            REQUIRE(a.writes.empty());
        if (rng() % 2 == 0)
            apply(s, a, clock);
    }
}

TEST_CASE("SendPayment and Amalgamate conserve the total balance", "[smallbank][property]")
{
    WorkloadConfig cfg;
    cfg.n_accounts = 30;
    cfg.op_mix = {0, 0, 0.5, 0, 0.5, 0};
    cfg.max_amount = 5000;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
        cfg.seed = seed;
        WorldState s = bank(30, 10000, 10000);
        const std::int64_t start = total(s);
        std::uint64_t clock = 0;
        for (const Proposal& p : generate(cfg, 2000))
        {
            apply(s, execute(p.op, s), clock);
            REQUIRE(total(s) == start);
        }
    }
}

TEST_CASE("generate examples", "[smallbank]")
{
    WorkloadConfig cfg;
    CHECK(generate(cfg, 0).empty());

    cfg.op_mix = {0, 1, 0, 0, 0, 0};
    const auto deposits = generate(cfg, 1000);
    REQUIRE(deposits.size() == 1000);
    for (const auto& p : deposits)
        CHECK(p.op.variant == SmallbankVariant::DepositChecking);
}

TEST_CASE("generate is deterministic per seed and client", "[smallbank]")
{
    WorkloadConfig cfg;
    const auto a = generate(cfg, 200, 3);
    const auto b = generate(cfg, 200, 3);
    const auto c = generate(cfg, 200, 4);
    REQUIRE(a.size() == b.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        CHECK(a[i].txn_id == b[i].txn_id);
        CHECK(a[i].op.account == b[i].op.account);
        CHECK(a[i].op.variant == b[i].op.variant);
        CHECK(a[i].op.amount == b[i].op.amount);
        differs = differs || a[i].op.account != c[i].op.account;
    }
    CHECK(differs);
    CHECK(a[5].txn_id == "c3-5");
    CHECK(a[5].seq == 5);
}

TEST_CASE("generated ops respect the operation invariants", "[smallbank][property]")
{
    WorkloadConfig cfg;
    cfg.n_accounts = 5;
    for (const auto& p : generate(cfg, 5000))
    {
        REQUIRE(p.op.account < 5);
        REQUIRE(p.op.amount >= 0);
        const bool two = p.op.variant == SmallbankVariant::SendPayment ||
                         p.op.variant == SmallbankVariant::Amalgamate;
        REQUIRE(p.op.other.has_value() == two);
        if (two)
            REQUIRE(*p.op.other != p.op.account);
        if (p.op.variant == SmallbankVariant::Query || p.op.variant == SmallbankVariant::Amalgamate)
            REQUIRE(p.op.amount == 0);
    }
}

TEST_CASE("uniform access hits every account within 4 sigma", "[smallbank][statistics]")
{
    WorkloadConfig cfg;
    cfg.n_accounts = 100;
    cfg.op_mix = {0, 0, 0, 0, 0, 1};
    const auto proposals = generate(cfg, 100000);
    std::vector<int> hits(100, 0);
    for (const auto& p : proposals)
        ++hits[p.op.account];
    // Binomial(1e5, 0.01): mean 1000, sigma sqrt(1e5 * 0.01 * 0.99).
    const double sigma = std::sqrt(100000 * 0.01 * 0.99);
    for (int h : hits)
        CHECK(std::abs(h - 1000.0) <= 4 * sigma);
}

TEST_CASE("op frequencies converge to the mix", "[smallbank][statistics]")
{
    WorkloadConfig cfg;
    cfg.op_mix = {0.1, 0.2, 0.3, 0.15, 0.05, 0.2};
    const auto proposals = generate(cfg, 100000);
    std::array<int, kSmallbankVariantCount> counts{};
    for (const auto& p : proposals)
        ++counts[static_cast<std::size_t>(p.op.variant)];
    for (std::size_t v = 0; v < counts.size(); ++v)
    {
        const double p = cfg.op_mix[v];
        const double sigma = std::sqrt(100000 * p * (1 - p));
        CHECK(std::abs(counts[v] - 100000 * p) <= 4 * sigma);
    }
}

TEST_CASE("hotspot access concentrates on the hot set", "[smallbank][statistics]")
{
    WorkloadConfig cfg;
    cfg.n_accounts = 1000;
    cfg.op_mix = {0, 0, 0, 0, 0, 1};
    cfg.access = Hotspot{0.01, 0.9};
    const auto proposals = generate(cfg, 20000);
    int hot = 0;
    for (const auto& p : proposals)
        hot += p.op.account < 10;
    const double sigma = std::sqrt(20000 * 0.9 * 0.1);
    CHECK(std::abs(hot - 18000.0) <= 4 * sigma);
}

TEST_CASE("invalid workload configs name the field", "[smallbank]")
{
    WorkloadConfig cfg;
    cfg.op_mix = {0.5, 0.5, 0.5, 0, 0, 0};
    try
    {
        cfg.validate();
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.field() == "workload.mix");
    }
    cfg = WorkloadConfig{};
    cfg.op_mix[2] = -0.1;
    cfg.op_mix[3] += 0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = WorkloadConfig{};
    cfg.n_accounts = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(smallbank_variant_from_string("Amalgamate") == SmallbankVariant::Amalgamate);
    CHECK_FALSE(smallbank_variant_from_string("Nope"));
}
