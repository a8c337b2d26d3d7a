#pragma once

#include "eovsim/config.hpp"
#include "eovsim/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eovsim {

struct PeerSummary
{
    std::uint32_t index = 0;
    bool endorsing = true;
    std::uint64_t height = 0;
    Digest tip_hash;
    Digest state_digest;
};

struct RunArtifacts
{
    RunReport report;
    std::vector<TxnJourney> journeys;
    std::vector<PeerSummary> peers;
    std::vector<std::string> block_trace; // one JSON line per block, first endorsing peer
    TraceSummary trace;
    // Every peer agreed on block hashes and state digests at every height
    // they share.
    bool ledgers_agree = true;
    // Sum of every checking and savings balance on the first peer.
    std::int64_t total_balance = 0;
};

RunArtifacts simulate(const ExperimentConfig& config);

std::string journeys_csv(const std::vector<TxnJourney>& journeys);
std::string report_json(const RunReport& report);

// Writes report.json and journeys.csv (and blocks.jsonl when tracing).
void write_run_outputs(const RunArtifacts& run, const std::filesystem::path& out_dir);

struct SweepSpec
{
    nlohmann::json base;
    std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;
    bool paired = false;
    std::uint32_t seeds = 1;
};

SweepSpec parse_sweep(const nlohmann::json& input, const std::filesystem::path& base_dir);

struct CellResult
{
    std::size_t index = 0;
    nlohmann::json params; // axis path -> value
    std::uint64_t seed = 0;
    std::optional<RunReport> report;
    std::string error;
};

// Cell i runs with seed base_seed + i. Failing cells record their error.
std::vector<CellResult> sweep(const SweepSpec& spec,
    const std::optional<std::filesystem::path>& out_dir, unsigned workers);

std::string cells_csv(const SweepSpec& spec, const std::vector<CellResult>& cells);

struct CsvTable
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const; // throws ConfigError if missing
};

CsvTable parse_csv(std::string_view text);

struct PlotPoint
{
    double x = 0.0;
    double y = 0.0;
    double stderr_y = 0.0;
    std::size_t n = 0;
};

struct PlotSeries
{
    std::string name;
    std::vector<PlotPoint> points;
};

struct PlotPreset
{
    std::string name;
    std::string description;
    std::string x_column;
    std::string y_column;
    std::vector<std::string> series_columns; // empty: one series
};

const std::vector<PlotPreset>& plot_presets();
const PlotPreset& find_preset(std::string_view name);

std::vector<PlotSeries> build_plot(const CsvTable& cells, const PlotPreset& preset);

// One "<preset>__<series>.dat" file per series: x, y, stderr, n.
std::vector<std::filesystem::path> write_plot_files(const std::vector<PlotSeries>& series,
    const PlotPreset& preset, const std::filesystem::path& out_dir);

} // namespace eovsim
