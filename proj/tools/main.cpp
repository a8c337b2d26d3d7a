#include "eovsim/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

struct Overrides
{
    std::optional<std::uint64_t> seed;
    std::optional<double> duration_s;
    std::vector<std::string> sets; // path=value, value parsed as JSON when possible
};

json parse_value(const std::string& text)
{
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error&)
    {
        return text;
    }
}

void apply(json& config, const Overrides& o)
{
    for (const std::string& s : o.sets)
    {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw eovsim::ConfigError("--set", "expected path=value, got \"" + s + "\"");
        const std::string path = s.substr(0, eq);
        if (!eovsim::config_scalar_paths().count(path))
            throw eovsim::ConfigError(path, "not a config parameter");
        eovsim::set_config_path(config, path, parse_value(s.substr(eq + 1)));
    }
    if (o.seed)
        config["seed"] = *o.seed;
    if (o.duration_s)
        config["duration_s"] = *o.duration_s;
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw eovsim::ConfigError(path, "cannot open file");
    try
    {
        return json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw eovsim::ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw eovsim::ConfigError(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& out, const Overrides& o)
{
    json cfg = config_path.empty() ? json::object() : eovsim::load_config_json(config_path);
    apply(cfg, o);
    const eovsim::ExperimentConfig config = eovsim::parse_config(cfg);
    const eovsim::RunArtifacts run = eovsim::simulate(config);
    if (!out.empty())
        eovsim::write_run_outputs(run, out);

    const eovsim::RunReport& r = run.report;
    json summary{{"throughput_tps", r.throughput_tps},
        {"avg_latency_s", r.avg_latency_s ? json(*r.avg_latency_s) : json(nullptr)},
        {"committed", r.totals.committed}, {"submitted", r.totals.submitted},
        {"dropped_endorse", r.totals.dropped_endorse},
        {"dropped_broadcast", r.totals.dropped_broadcast},
        {"r_ratio", r.r_ratio ? json(*r.r_ratio) : json(nullptr)},
        {"truncated", run.trace.truncated}, {"ledgers_agree", run.ledgers_agree}};
    std::cout << summary.dump() << "\n";
    return kOk;
}

int cmd_sweep(const std::string& spec_path, const std::string& out, unsigned workers,
    const Overrides& o)
{
    json input = read_json(spec_path);
    const std::filesystem::path base_dir = std::filesystem::path(spec_path).parent_path();
    eovsim::SweepSpec spec = eovsim::parse_sweep(input, base_dir);
    apply(spec.base, o);
    eovsim::parse_config(spec.base);

    std::optional<std::filesystem::path> out_dir;
    if (!out.empty())
        out_dir = out;
    const auto cells = eovsim::sweep(spec, out_dir, workers);
    const std::string csv = eovsim::cells_csv(spec, cells);
    if (out_dir)
    {
        std::filesystem::create_directories(*out_dir);
        std::ofstream(*out_dir / "cells.csv", std::ios::binary) << csv;
    }
    else
    {
        std::cout << csv;
    }
    std::size_t failed = 0;
    for (const auto& c : cells)
        if (!c.error.empty())
        {
            ++failed;
            std::cerr << "cell " << c.index << ": " << c.error << "\n";
        }
    std::cerr << cells.size() << " cells, " << failed << " failed\n";
    return kOk;
}

int cmd_report(const std::string& cells_path, const std::string& preset_name,
    const std::string& out)
{
    const eovsim::PlotPreset& preset = eovsim::find_preset(preset_name);
    const eovsim::CsvTable table = eovsim::parse_csv(read_text(cells_path));
    const auto series = eovsim::build_plot(table, preset);
    for (const auto& path : eovsim::write_plot_files(series, preset, out.empty() ? "." : out))
        std::cout << path.string() << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Discrete-event simulator of an execute-order-validate blockchain pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    Overrides overrides;
    unsigned workers = 1;
    std::string cells_path;
    std::string preset;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--seed", overrides.seed, "Override the seed");
        sub->add_option("--duration", overrides.duration_s, "Override duration_s (simulated seconds)");
        sub->add_option("--set", overrides.sets, "Override a parameter: path=value (repeatable)");
    };

    CLI::App* run = app.add_subcommand("run", "Run one simulation");
    run->add_option("--config", config_path, "Experiment config (JSON)");
    add_common(run);

    CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("--config", config_path, "Sweep spec (JSON)")->required();
    sweep->add_option("--workers", workers, "Parallel cells (0 = one per core)");
    add_common(sweep);

    CLI::App* report = app.add_subcommand("report", "Turn cells.csv into plot data");
    report->add_option("--cells", cells_path, "cells.csv from a sweep");
    report->add_option("--preset", preset, "Plot preset name");
    report->add_option("--out", out, "Output directory");
    bool list = false;
    report->add_flag("--list", list, "List the plot presets");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try
    {
        if (*run)
            return cmd_run(config_path, out, overrides);
        if (*sweep)
            return cmd_sweep(config_path, out, workers, overrides);
        if (list)
        {
            for (const auto& p : eovsim::plot_presets())
                std::cout << p.name << "\t" << p.description << "\n";
            return kOk;
        }
        if (cells_path.empty() || preset.empty())
            throw eovsim::ConfigError("report", "--cells and --preset are required");
        return cmd_report(cells_path, preset, out);
    }
    catch (const eovsim::ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}
