#include "eovsim/harness.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <tuple>

namespace py = pybind11;

namespace {

using nlohmann::json;

json parse_json(const std::string& text)
{
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw eovsim::ConfigError("<json>", e.what());
    }
}

py::dict run(const std::string& config_json, const std::string& base_dir)
{
    const json cfg = eovsim::resolve_profile(parse_json(config_json), base_dir);
    const eovsim::ExperimentConfig config = eovsim::parse_config(cfg);
    eovsim::RunArtifacts art;
    {
        py::gil_scoped_release release;
        art = eovsim::simulate(config);
    }
    py::dict out;
    out["report"] = eovsim::report_json(art.report);
    out["journeys_csv"] = eovsim::journeys_csv(art.journeys);
    out["ledgers_agree"] = art.ledgers_agree;
    out["total_balance"] = art.total_balance;
    out["trace_digest"] = eovsim::to_hex(art.trace.digest);
    out["truncated"] = art.trace.truncated;
    return out;
}

std::string sweep(const std::string& spec_json, const std::string& base_dir,
    const std::optional<std::string>& out_dir, unsigned workers)
{
    const eovsim::SweepSpec spec = eovsim::parse_sweep(parse_json(spec_json), base_dir);
    std::optional<std::filesystem::path> out;
    if (out_dir)
        out = *out_dir;
    std::vector<eovsim::CellResult> cells;
    {
        py::gil_scoped_release release;
        cells = eovsim::sweep(spec, out, workers);
    }
    return eovsim::cells_csv(spec, cells);
}

std::vector<std::pair<std::string, std::vector<std::tuple<double, double, double, std::size_t>>>>
plot(const std::string& cells_csv, const std::string& preset)
{
    const auto series =
        eovsim::build_plot(eovsim::parse_csv(cells_csv), eovsim::find_preset(preset));
    std::vector<std::pair<std::string, std::vector<std::tuple<double, double, double, std::size_t>>>>
        out;
    for (const auto& s : series)
    {
        std::vector<std::tuple<double, double, double, std::size_t>> pts;
        for (const auto& p : s.points)
            pts.emplace_back(p.x, p.y, p.stderr_y, p.n);
        out.emplace_back(s.name, std::move(pts));
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Execute-order-validate pipeline simulator";

    py::register_exception<eovsim::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("run", &run, py::arg("config_json"), py::arg("base_dir") = ".",
        "Run one simulation. Returns report JSON, journeys CSV and agreement checks.");
    m.def("sweep", &sweep, py::arg("spec_json"), py::arg("base_dir") = ".",
        py::arg("out_dir") = py::none(), py::arg("workers") = 1u,
        "Run a sweep spec and return the combined cells CSV.");
    m.def("plot", &plot, py::arg("cells_csv"), py::arg("preset"),
        "Aggregate a cells CSV into (series, [(x, y, stderr, n)]) for a preset.");
    m.def("presets", [] {
        std::vector<std::string> names;
        for (const auto& p : eovsim::plot_presets())
            names.push_back(p.name);
        return names;
    });
    m.def("resolve_config", [](const std::string& config_json, const std::string& base_dir) {
        const json cfg = eovsim::resolve_profile(parse_json(config_json), base_dir);
        return eovsim::parse_config(cfg).resolved.dump();
    }, py::arg("config_json"), py::arg("base_dir") = ".",
        "Fill every default and return the resolved config as JSON.");
}
