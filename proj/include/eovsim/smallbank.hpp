#pragma once

#include "eovsim/ledger.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace eovsim {

enum class SmallbankVariant : std::uint8_t {
    TransactSavings,
    DepositChecking,
    SendPayment,
    WriteCheck,
    Amalgamate,
    Query,
};
inline constexpr std::size_t kSmallbankVariantCount = 6;

std::string_view to_string(SmallbankVariant v);
std::optional<SmallbankVariant> smallbank_variant_from_string(std::string_view name);

struct SmallbankOp
{
    SmallbankVariant variant = SmallbankVariant::Query;
    std::uint32_t account = 0;
    // Second customer for SendPayment (payee) and Amalgamate (destination).
    std::optional<std::uint32_t> other;
    std::int64_t amount = 0;
};

struct Proposal
{
    std::string txn_id;
    std::uint32_t client = 0;
    std::uint64_t seq = 0; // index within the client's stream
    SmallbankOp op;
    SimTime submitted_at{0};
};

std::string checking_key(std::uint32_t customer);
std::string savings_key(std::uint32_t customer);

struct ExecResult
{
    ReadSet reads;
    WriteSet writes;
    std::optional<std::int64_t> response; // nullopt: rejected by the contract

    bool rejected() const noexcept { return !response.has_value(); }
};

// Runs one Smallbank operation against a committed snapshot. Pure: reads go
// through the snapshot only and the result depends on nothing else.
//
// Semantics (balances are integers, one checking and one savings account
// per customer):
//   Query(c)               reads both balances, responds with their sum.
//   TransactSavings(c, a)  savings += a.
//   DepositChecking(c, a)  checking += a.
//   SendPayment(c, d, a)   rejected if checking(c) < a; else moves a from
//                          checking(c) to checking(d).
//   WriteCheck(c, a)       checking -= a, plus a penalty of 1 when the
//                          customer's total balance is below a.
//   Amalgamate(c, d)       checking(d) += checking(c) + savings(c); both
//                          of c's balances become 0.
// Any missing account rejects the operation with an empty write set.
ExecResult execute(const SmallbankOp& op, const WorldState& snapshot);

struct Hotspot
{
    double fraction_hot = 0.01;
    double prob_hot = 0.9;
};

struct WorkloadConfig
{
    std::uint32_t n_accounts = 10000;
    std::array<double, kSmallbankVariantCount> op_mix{
        1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
    std::variant<std::monostate, Hotspot> access; // monostate: uniform
    std::uint64_t seed = 1;
    std::int64_t max_amount = 100;
    std::int64_t initial_checking = 10000;
    std::int64_t initial_savings = 10000;

    void validate() const;
};

std::vector<Proposal> generate(const WorkloadConfig& config, std::size_t count,
    std::uint32_t client = 0);

// Write set loaded by the genesis block.
WriteSet genesis_write_set(const WorkloadConfig& config);

} // namespace eovsim
