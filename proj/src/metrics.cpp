#include "eovsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eovsim {

namespace {

void count(StatusCounts& c, JourneyStatus s)
{
    ++c.submitted;
    switch (s)
    {
    case JourneyStatus::InFlight: ++c.in_flight; break;
    case JourneyStatus::Committed: ++c.committed; break;
    case JourneyStatus::InvalidCommitted: ++c.invalid_committed; break;
    case JourneyStatus::DroppedEndorsement: ++c.dropped_endorse; break;
    case JourneyStatus::DroppedBroadcast: ++c.dropped_broadcast; break;
    }
}

// Nearest-rank percentile over sorted values.
double percentile(const std::vector<double>& sorted, double p)
{
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

nlohmann::json optional_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json to_json(const StatusCounts& c)
{
    return {{"submitted", c.submitted}, {"committed", c.committed},
        {"invalid_committed", c.invalid_committed}, {"dropped_endorse", c.dropped_endorse},
        {"dropped_broadcast", c.dropped_broadcast}, {"in_flight", c.in_flight}};
}

nlohmann::json to_json(const OrdererCounters& c)
{
    return {{"attempts", c.attempts}, {"successes", c.successes}, {"refusals", c.refusals}};
}

} // namespace

std::optional<double> ratio(const OrdererCounters& c)
{
    if (c.successes == 0)
        return std::nullopt;
    return static_cast<double>(c.attempts) / static_cast<double>(c.successes);
}

RunReport aggregate(std::span<const TxnJourney> journeys, const NodeCounters& counters,
    Window window)
{
    RunReport r;
    r.window = window;
    r.counters = counters;

    std::vector<double> latencies;
    for (const TxnJourney& j : journeys)
    {
        count(r.totals, j.status);
        if (window.contains(j.submit_time))
            count(r.in_window, j.status);
        if (j.status == JourneyStatus::Committed && j.commit_time && window.contains(*j.commit_time))
            latencies.push_back(static_cast<double>((*j.commit_time - j.submit_time).count()) / 1e6);
    }

    if (window.seconds() > 0.0)
        r.throughput_tps = static_cast<double>(latencies.size()) / window.seconds();
    if (!latencies.empty())
    {
        r.avg_latency_s = std::accumulate(latencies.begin(), latencies.end(), 0.0) /
                          static_cast<double>(latencies.size());
        std::sort(latencies.begin(), latencies.end());
        r.p50_latency_s = percentile(latencies, 0.50);
        r.p95_latency_s = percentile(latencies, 0.95);
    }
    r.r_ratio = ratio(counters.orderers_at_window_end);
    r.r_final = ratio(counters.orderers_final);
    return r;
}

nlohmann::json to_json(const RunReport& report)
{
    nlohmann::json j;
    j["config"] = report.config;
    j["seed"] = report.seed;
    j["window"] = {{"begin_us", report.window.begin.count()}, {"end_us", report.window.end.count()}};
    j["throughput_tps"] = report.throughput_tps;
    j["avg_latency_s"] = optional_json(report.avg_latency_s);
    j["p50_latency_s"] = optional_json(report.p50_latency_s);
    j["p95_latency_s"] = optional_json(report.p95_latency_s);
    j["totals"] = to_json(report.totals);
    j["in_window"] = to_json(report.in_window);
    j["r_ratio"] = optional_json(report.r_ratio);
    j["r_final"] = optional_json(report.r_final);

    const NodeCounters& c = report.counters;
    j["orderers"] = {{"at_window_end", to_json(c.orderers_at_window_end)},
        {"final", to_json(c.orderers_final)}};

    const BlockStats& b = c.blocks;
    nlohmann::json reasons = nlohmann::json::object();
    for (std::size_t i = 0; i < b.cut_reasons.size(); ++i)
        reasons[std::string(to_string(static_cast<CutReason>(i)))] = b.cut_reasons[i];
    j["blocks"] = {{"count", b.blocks}, {"txns", b.txns}, {"capacity", b.capacity},
        {"mean_fill", b.mean_fill()}, {"cut_reasons", reasons},
        {"flags", {{"valid", b.flags.valid}, {"policy_violation", b.flags.policy_violation},
                      {"mvcc_conflict", b.flags.mvcc_conflict}}}};
    j["endorse_refusals"] = c.endorse_refusals;

    auto traffic = nlohmann::json::array();
    for (const NodeTrafficRow& row : c.traffic)
        traffic.push_back({{"node", row.node}, {"class", std::string(to_string(row.cls))},
            {"msgs_sent", row.traffic.msgs_sent}, {"bytes_sent", row.traffic.bytes_sent},
            {"msgs_received", row.traffic.msgs_received},
            {"bytes_received", row.traffic.bytes_received}, {"busy_us", row.busy.count()}});
    j["traffic"] = std::move(traffic);
    j["extra"] = report.extra.is_null() ? nlohmann::json::object() : report.extra;
    return j;
}

} // namespace eovsim
