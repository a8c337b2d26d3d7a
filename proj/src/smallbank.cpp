#include "eovsim/smallbank.hpp"

#include "rng.hpp"

#include <cmath>
#include <numeric>

namespace eovsim {

namespace {

constexpr std::array<std::string_view, kSmallbankVariantCount> kVariantNames{
    "TransactSavings", "DepositChecking", "SendPayment", "WriteCheck", "Amalgamate", "Query"};

struct Reader
{
    const WorldState& state;
    ReadSet& reads;

    std::optional<std::int64_t> get(const std::string& key)
    {
        auto e = state.read(key);
        reads.push_back(ReadEntry{key, e ? std::optional<Version>{e->version} : std::nullopt});
        if (!e)
            return std::nullopt;
        return e->value;
    }
};

ExecResult reject(ReadSet reads)
{
    return ExecResult{std::move(reads), {}, std::nullopt};
}

} // namespace

std::string_view to_string(SmallbankVariant v)
{
    return kVariantNames[static_cast<std::size_t>(v)];
}

std::optional<SmallbankVariant> smallbank_variant_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kVariantNames.size(); ++i)
        if (kVariantNames[i] == name)
            return static_cast<SmallbankVariant>(i);
    return std::nullopt;
}

std::string checking_key(std::uint32_t customer)
{
    return "cust/" + std::to_string(customer) + "/checking";
}

std::string savings_key(std::uint32_t customer)
{
    return "cust/" + std::to_string(customer) + "/savings";
}

ExecResult execute(const SmallbankOp& op, const WorldState& snapshot)
{
    ReadSet reads;
    Reader r{snapshot, reads};
    const std::uint32_t c = op.account;

    switch (op.variant)
    {
    case SmallbankVariant::Query: {
        auto chk = r.get(checking_key(c));
        auto sav = r.get(savings_key(c));
        if (!chk || !sav)
            return reject(std::move(reads));
        return ExecResult{std::move(reads), {}, *chk + *sav};
    }
    case SmallbankVariant::TransactSavings: {
        const std::string key = savings_key(c);
        auto sav = r.get(key);
        if (!sav)
            return reject(std::move(reads));
        return ExecResult{std::move(reads), {{key, *sav + op.amount}}, *sav + op.amount};
    }
    case SmallbankVariant::DepositChecking: {
        const std::string key = checking_key(c);
        auto chk = r.get(key);
        if (!chk)
            return reject(std::move(reads));
        return ExecResult{std::move(reads), {{key, *chk + op.amount}}, *chk + op.amount};
    }
    case SmallbankVariant::SendPayment: {
        if (!op.other || *op.other == c)
            return reject(std::move(reads));
        const std::string from = checking_key(c);
        const std::string to = checking_key(*op.other);
        auto src = r.get(from);
        auto dst = r.get(to);
        if (!src || !dst || *src < op.amount)
            return reject(std::move(reads));
        return ExecResult{
            std::move(reads), {{from, *src - op.amount}, {to, *dst + op.amount}}, *src - op.amount};
    }
    case SmallbankVariant::WriteCheck: {
        const std::string key = checking_key(c);
        auto chk = r.get(key);
        auto sav = r.get(savings_key(c));
        if (!chk || !sav)
            return reject(std::move(reads));
        const std::int64_t debit = (*chk + *sav < op.amount) ? op.amount + 1 : op.amount;
        return ExecResult{std::move(reads), {{key, *chk - debit}}, *chk - debit};
    }
    case SmallbankVariant::Amalgamate: {
        if (!op.other || *op.other == c)
            return reject(std::move(reads));
        const std::string chk_key = checking_key(c);
        const std::string sav_key = savings_key(c);
        const std::string dst_key = checking_key(*op.other);
        auto chk = r.get(chk_key);
        auto sav = r.get(sav_key);
        auto dst = r.get(dst_key);
        if (!chk || !sav || !dst)
            return reject(std::move(reads));
        const std::int64_t moved = *chk + *sav;
        return ExecResult{std::move(reads), {{chk_key, 0}, {sav_key, 0}, {dst_key, *dst + moved}},
            *dst + moved};
    }
    }
    return reject(std::move(reads));
}

void WorkloadConfig::validate() const
{
    if (n_accounts < 2)
        throw ConfigError("workload.accounts", "need at least 2 accounts");
    double sum = 0.0;
    for (std::size_t i = 0; i < op_mix.size(); ++i)
    {
        if (!(op_mix[i] >= 0.0 && op_mix[i] <= 1.0))
            throw ConfigError("workload.mix." + std::string(kVariantNames[i]),
                "probability must lie in [0, 1]");
        sum += op_mix[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("workload.mix", "probabilities must sum to 1");
    if (max_amount < 0)
        throw ConfigError("workload.max_amount", "must be non-negative");
    if (const auto* hot = std::get_if<Hotspot>(&access))
    {
        if (!(hot->fraction_hot > 0.0 && hot->fraction_hot <= 1.0))
            throw ConfigError("workload.access.fraction_hot", "must lie in (0, 1]");
        if (!(hot->prob_hot >= 0.0 && hot->prob_hot <= 1.0))
            throw ConfigError("workload.access.prob_hot", "must lie in [0, 1]");
    }
}

std::vector<Proposal> generate(const WorkloadConfig& config, std::size_t count, std::uint32_t client)
{
    config.validate();
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
        static_cast<std::uint32_t>(config.seed >> 32), client};
    std::mt19937_64 rng(seq);

    std::array<double, kSmallbankVariantCount> cumulative{};
    std::partial_sum(config.op_mix.begin(), config.op_mix.end(), cumulative.begin());

    const std::uint32_t n = config.n_accounts;
    auto pick_account = [&]() -> std::uint32_t {
        if (const auto* hot = std::get_if<Hotspot>(&config.access))
        {
            const auto hot_n = std::max<std::uint32_t>(
                1, static_cast<std::uint32_t>(std::ceil(hot->fraction_hot * n)));
            if (hot_n >= n || detail::unit(rng) < hot->prob_hot)
                return static_cast<std::uint32_t>(detail::below(rng, hot_n));
            return hot_n + static_cast<std::uint32_t>(detail::below(rng, n - hot_n));
        }
        return static_cast<std::uint32_t>(detail::below(rng, n));
    };

    std::vector<Proposal> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
    {
        const double u = detail::unit(rng) * cumulative.back();
        std::size_t v = 0;
        while (v + 1 < cumulative.size() && u >= cumulative[v])
            ++v;
        // Skip trailing zero-probability variants that rounding could land on.
        while (config.op_mix[v] == 0.0 && v > 0)
            --v;

        SmallbankOp op;
        op.variant = static_cast<SmallbankVariant>(v);
        op.account = pick_account();
        if (op.variant == SmallbankVariant::SendPayment || op.variant == SmallbankVariant::Amalgamate)
        {
            std::uint32_t other = pick_account();
            while (other == op.account)
                other = pick_account();
            op.other = other;
        }
        if (op.variant != SmallbankVariant::Query && op.variant != SmallbankVariant::Amalgamate &&
            config.max_amount > 0)
            op.amount = 1 + static_cast<std::int64_t>(
                                detail::below(rng, static_cast<std::uint64_t>(config.max_amount)));

        Proposal p;
        p.txn_id = "c" + std::to_string(client) + "-" + std::to_string(i);
        p.client = client;
        p.seq = i;
        p.op = op;
        out.push_back(std::move(p));
    }
    return out;
}

WriteSet genesis_write_set(const WorkloadConfig& config)
{
    WriteSet ws;
    ws.reserve(2 * std::size_t{config.n_accounts});
    for (std::uint32_t c = 0; c < config.n_accounts; ++c)
    {
        ws.push_back({checking_key(c), config.initial_checking});
        ws.push_back({savings_key(c), config.initial_savings});
    }
    return ws;
}

} // namespace eovsim
