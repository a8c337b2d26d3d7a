#include "eovsim/ledger.hpp"

#include "../support/fixtures.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <map>
#include <random>

using namespace eovsim;

// Golden values below were computed with a separate Python FNV-1a over the
// documented little-endian encoding, not with this library.
TEST_CASE("block hashes match the reference encoding", "[ledger]")
{
    const BlockRef g = test::genesis_block({});
    CHECK(hash_block(*g).value == 0x81d3272cf02787b1ULL);

    const BlockRef b1 = test::block_of(1, hash_block(*g),
        {test::envelope("c0-0", {}), test::envelope("c1-0", {})}, CutReason::CountThreshold);
    CHECK(hash_block(*b1).value == 0x572d40795f3af6f6ULL);
    CHECK(hash_block(*b1).hex() == "572d40795f3af6f6");
}

TEST_CASE("entry hashes match the reference encoding", "[ledger]")
{
    const WorldState::Entry e{10000, Version{0, 0}};
    CHECK(WorldState::entry_hash("cust/0/checking", e) == 0xf334a7169d6448a6ULL);
}

TEST_CASE("hash depends on every encoded field", "[ledger]")
{
    const BlockRef base = test::block_of(3, Digest{42}, {test::envelope("a", {})});
    const Digest h = hash_block(*base);
    CHECK(hash_block(*test::block_of(4, Digest{42}, {test::envelope("a", {})})) != h);
    CHECK(hash_block(*test::block_of(3, Digest{43}, {test::envelope("a", {})})) != h);
    CHECK(hash_block(*test::block_of(3, Digest{42}, {test::envelope("b", {})})) != h);
    CHECK(hash_block(*test::block_of(3, Digest{42}, {test::envelope("a", {})}, CutReason::Timeout)) !=
          h);
    // Length prefixes separate ("ab","c") from ("a","bc").
    CHECK(hash_block(*test::block_of(1, Digest{0}, {test::envelope("ab", {}), test::envelope("c", {})})) !=
          hash_block(*test::block_of(1, Digest{0}, {test::envelope("a", {}), test::envelope("bc", {})})));
    // Identical blocks built separately hash identically.
    CHECK(hash_block(*test::block_of(3, Digest{42}, {test::envelope("a", {})})) == h);
}

TEST_CASE("append enforces height, linkage and non-emptiness", "[ledger]")
{
    Ledger ledger;
    CHECK(ledger.empty());
    CHECK_FALSE(ledger.tip_height());

    const BlockRef g = test::genesis_block({});
    CHECK(ledger.append_block(g) == 0);
    CHECK(ledger.tip_height() == 0u);
    CHECK(ledger.tip_hash() == hash_block(*g));

    SECTION("wrong height")
    {
        CHECK_THROWS_AS(
            ledger.append_block(test::block_of(2, ledger.tip_hash(), {test::envelope("x", {})})),
            ChainIntegrityError);
    }
    SECTION("wrong prev_hash")
    {
        CHECK_THROWS_AS(ledger.append_block(test::block_of(1, Digest{1}, {test::envelope("x", {})})),
            ChainIntegrityError);
    }
    SECTION("empty block")
    {
        CHECK_THROWS_AS(ledger.append_block(test::block_of(1, ledger.tip_hash(), {})),
            ChainIntegrityError);
    }
    SECTION("flag count mismatch")
    {
        CHECK_THROWS_AS(ledger.append_block(test::block_of(1, ledger.tip_hash(),
                                                {test::envelope("x", {})}),
                            {TxnFlag::Valid, TxnFlag::Valid}),
            ChainIntegrityError);
    }
    SECTION("a linked block appends")
    {
        CHECK(ledger.append_block(test::block_of(1, ledger.tip_hash(), {test::envelope("x", {})}),
                  {TxnFlag::MVCCConflict}) == 1);
        CHECK(ledger.blocks().back().flags == std::vector<TxnFlag>{TxnFlag::MVCCConflict});
        CHECK(ledger.next_height() == 2);
    }
}

TEST_CASE("world state reads and versioned writes", "[ledger]")
{
    WorldState s;
    CHECK_FALSE(s.read("k"));
    CHECK(s.digest() == Digest{0});

    s.apply_write_set({{"k", 5}}, Version{1, 0});
    REQUIRE(s.read("k"));
    CHECK(s.read("k")->value == 5);
    CHECK(s.read("k")->version == Version{1, 0});

    s.apply_write_set({{"k", 7}}, Version{1, 3});
    CHECK(s.read("k")->value == 7);
    CHECK(s.read("k")->version == Version{1, 3});

    CHECK_THROWS_AS(s.apply_write_set({{"k", 9}}, Version{1, 2}), std::logic_error);
    CHECK(Version{1, 9} < Version{2, 0});
}

TEST_CASE("state digest is order independent and reversible", "[ledger]")
{
    WorldState a;
    WorldState b;
    a.apply_write_set({{"x", 1}, {"y", 2}}, Version{1, 0});
    b.apply_write_set({{"y", 2}}, Version{1, 0});
    b.apply_write_set({{"x", 1}}, Version{1, 0});
    CHECK(a.digest() == b.digest());

    WorldState c;
    c.apply_write_set({{"x", 1}, {"y", 3}}, Version{1, 0});
    CHECK(c.digest() != a.digest());
}

TEST_CASE("incremental digest equals a from-scratch recomputation", "[ledger][property]")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial)
    {
        WorldState s;
        std::map<std::string, WorldState::Entry> oracle;
        for (std::uint64_t h = 1; h <= 10; ++h)
        {
            const auto n_txn = 1 + rng() % 8;
            for (std::uint32_t i = 0; i < n_txn; ++i)
            {
                WriteSet ws;
                for (auto k = rng() % 4; k > 0; --k)
                    ws.push_back({"k" + std::to_string(rng() % 12),
                        static_cast<std::int64_t>(rng() % 1000) - 500});
                s.apply_write_set(ws, Version{h, i});
                for (const auto& w : ws)
                    oracle[w.key] = WorldState::Entry{w.value, Version{h, i}};
            }
        }
        std::uint64_t expected = 0;
        for (const auto& [k, e] : oracle)
            expected += WorldState::entry_hash(k, e);
        REQUIRE(s.digest().value == expected);
        REQUIRE(s.size() == oracle.size());
        for (const auto& [k, e] : oracle)
            REQUIRE(s.read(k) == e);
    }
}

TEST_CASE("block trace line carries height, reason and flags", "[ledger]")
{
    auto b = test::block_of(4, Digest{1}, {test::envelope("t1", {}), test::envelope("t2", {})},
        CutReason::Timeout);
    const std::string line = block_trace_line(*b, {TxnFlag::Valid, TxnFlag::MVCCConflict});
    const auto j = nlohmann::json::parse(line);
    CHECK(j["height"] == 4);
    CHECK(j["cut_reason"] == "Timeout");
    CHECK(j["txns"] == nlohmann::json::array({"t1", "t2"}));
    CHECK(j["flags"] == nlohmann::json::array({"Valid", "MVCCConflict"}));
    CHECK(line.find('\n') == std::string::npos);
}
