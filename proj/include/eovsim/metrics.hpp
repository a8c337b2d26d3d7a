#pragma once

#include "eovsim/committer.hpp"
#include "eovsim/driver.hpp"
#include "eovsim/ordering.hpp"
#include "eovsim/sim_net.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eovsim {

struct Window
{
    SimTime begin{0};
    SimTime end{0};

    double seconds() const noexcept { return static_cast<double>((end - begin).count()) / 1e6; }
    bool contains(SimTime t) const noexcept { return t >= begin && t < end; }
};

struct NodeTrafficRow
{
    std::string node;
    NodeClass cls = NodeClass::Peer;
    NodeTraffic traffic;
    Duration busy{0};
};

struct BlockStats
{
    std::uint64_t blocks = 0; // excludes genesis
    std::uint64_t txns = 0;
    std::uint32_t capacity = 100;
    std::array<std::uint64_t, 4> cut_reasons{}; // indexed by CutReason
    FlagCounts flags;

    double mean_fill() const noexcept
    {
        return blocks == 0 ? 0.0
                           : static_cast<double>(txns) / (static_cast<double>(blocks) * capacity);
    }
};

struct NodeCounters
{
    OrdererCounters orderers_at_window_end;
    OrdererCounters orderers_final;
    std::vector<NodeTrafficRow> traffic;
    BlockStats blocks;
    std::uint64_t endorse_refusals = 0;
};

struct StatusCounts
{
    std::uint64_t submitted = 0;
    std::uint64_t committed = 0;
    std::uint64_t invalid_committed = 0;
    std::uint64_t dropped_endorse = 0;
    std::uint64_t dropped_broadcast = 0;
    std::uint64_t in_flight = 0;

    std::uint64_t accounted() const noexcept
    {
        return committed + invalid_committed + dropped_endorse + dropped_broadcast + in_flight;
    }
};

struct RunReport
{
    nlohmann::json config; // resolved configuration echo
    std::uint64_t seed = 0;
    Window window;

    double throughput_tps = 0.0;
    std::optional<double> avg_latency_s; // undefined when nothing committed
    std::optional<double> p50_latency_s;
    std::optional<double> p95_latency_s;

    StatusCounts totals;    // whole run
    StatusCounts in_window; // journeys submitted inside the window

    std::optional<double> r_ratio; // at window end
    std::optional<double> r_final; // after drain
    NodeCounters counters;
    nlohmann::json extra; // trace summary, agreement, ...
};

std::optional<double> ratio(const OrdererCounters& c);

// Throughput counts Committed journeys whose commit time falls inside the
// window; latency averages commit - submit over the same journeys.
RunReport aggregate(std::span<const TxnJourney> journeys, const NodeCounters& counters,
    Window window);

nlohmann::json to_json(const RunReport& report);

} // namespace eovsim
