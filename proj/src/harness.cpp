#include "eovsim/harness.hpp"

#include "eovsim/nodes.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace eovsim {

namespace {

using nlohmann::json;

BlockRef make_genesis(const WorkloadConfig& workload, const MessageSizes& sizes)
{
    auto seed_writes = std::make_shared<Endorsement>();
    seed_writes->txn_id = "genesis";
    seed_writes->peer = Identity{NodeClass::Orderer, 0};
    seed_writes->writes = genesis_write_set(workload);

    auto env = std::make_shared<Envelope>();
    env->txn_id = "genesis";
    env->endorsements.push_back(seed_writes);
    env->size_bytes = envelope_size(sizes, {}, seed_writes->writes, 1);

    auto block = std::make_shared<Block>();
    block->height = 0;
    block->prev_hash = kGenesisPrevHash;
    block->txns.push_back(env);
    block->cut_reason = CutReason::Genesis;
    block->payload_bytes = env->size_bytes;
    return block;
}

std::vector<NodeId> id_range(std::uint32_t& next, std::uint32_t count)
{
    std::vector<NodeId> out;
    for (std::uint32_t i = 0; i < count; ++i)
        out.push_back(NodeId{next++});
    return out;
}

bool same_history(const PeerNode& a, const PeerNode& b)
{
    const auto& la = a.ledger().blocks();
    const auto& lb = b.ledger().blocks();
    if (la.size() != lb.size() || a.state_history() != b.state_history())
        return false;
    for (std::size_t h = 0; h < la.size(); ++h)
        if (la[h].hash != lb[h].hash || la[h].flags != lb[h].flags)
            return false;
    return true;
}

std::string format_double(double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : "NA";
}

std::string format_optional(const std::optional<double>& v)
{
    return v ? format_double(*v) : "NA";
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string json_cell(const json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string config_header(const json& config, std::uint64_t seed)
{
    return "# seed=" + std::to_string(seed) + "\n# config=" + config.dump() + "\n";
}

} // namespace

RunArtifacts simulate(const ExperimentConfig& config)
{
    const Topology& t = config.topology;

    Directory dir;
    std::uint32_t next = 0;
    dir.clients = id_range(next, t.clients);
    dir.endorsing_peers = id_range(next, t.endorsing_peers);
    dir.non_endorsing_peers = id_range(next, t.non_endorsing_peers);
    dir.orderers = id_range(next, t.orderers);
    dir.brokers = id_range(next, t.brokers);
    dir.policy = EndorsementPolicy::k_of(t.endorsing_peers, config.policy_threshold);
    dir.service = config.service;
    dir.sizes = config.sizes;

    const BlockRef genesis = make_genesis(config.workload, config.sizes);
    Engine engine(config.latency, config.seed);

    const ClientConfig client_cfg{
        config.per_client_tps(), config.duration, config.endorse_timeout, config.broadcast_timeout};
    const std::uint64_t planned = planned_submissions(client_cfg.rate_tps, client_cfg.duration);
    std::vector<ClientNode*> clients;
    for (std::uint32_t c = 0; c < t.clients; ++c)
        clients.push_back(&engine.emplace_node<ClientNode>(NodeClass::Client, dir, c, client_cfg,
            generate(config.workload, planned, c)));

    std::vector<bool> authorized(t.clients, true);
    for (std::uint32_t c : config.unauthorized_clients)
        authorized[c] = false;
    std::vector<PeerNode*> peers;
    for (std::uint32_t i = 0; i < t.endorsing_peers; ++i)
        peers.push_back(&engine.emplace_node<PeerNode>(
            NodeClass::Peer, dir, i, true, authorized, genesis, config.gossip_fanout));
    for (std::uint32_t j = 0; j < t.non_endorsing_peers; ++j)
        peers.push_back(&engine.emplace_node<PeerNode>(NodeClass::Peer, dir, j, false,
            std::vector<bool>{}, genesis, config.gossip_fanout));

    std::vector<OrdererNode*> orderers;
    for (std::uint32_t o = 0; o < t.orderers; ++o)
        orderers.push_back(&engine.emplace_node<OrdererNode>(NodeClass::Orderer, dir, o, o == 0,
            config.cutter, config.orderer_queue_capacity, hash_block(*genesis)));
    std::vector<BrokerNode*> brokers;
    for (std::uint32_t b = 0; b < t.brokers; ++b)
        brokers.push_back(
            &engine.emplace_node<BrokerNode>(NodeClass::Broker, dir, b, config.replication));

    for (ClientNode* c : clients)
        c->start();

    const Window window = config.measurement_window();
    NodeCounters counters;
    engine.run_until_quiescent(window.end);
    for (const OrdererNode* o : orderers)
        counters.orderers_at_window_end += o->counters();

    RunArtifacts run;
    run.trace = engine.run_until_quiescent(config.duration + config.drain_limit);
    for (const OrdererNode* o : orderers)
        counters.orderers_final += o->counters();

    std::uint64_t late_commits = 0;
    for (const ClientNode* c : clients)
    {
        run.journeys.insert(run.journeys.end(), c->journeys().begin(), c->journeys().end());
        late_commits += c->late_commits();
    }

    auto row = [&](std::string name, NodeId id, NodeClass cls, Duration busy) {
        counters.traffic.push_back(NodeTrafficRow{std::move(name), cls, engine.traffic(id), busy});
    };
    for (std::uint32_t c = 0; c < t.clients; ++c)
        row("client" + std::to_string(c), dir.clients[c], NodeClass::Client, Duration{0});
    for (std::uint32_t i = 0; i < t.endorsing_peers; ++i)
        row("peer" + std::to_string(i), dir.endorsing_peers[i], NodeClass::Peer,
            peers[i]->busy_time());
    for (std::uint32_t j = 0; j < t.non_endorsing_peers; ++j)
        row("observer" + std::to_string(j), dir.non_endorsing_peers[j], NodeClass::Peer,
            peers[t.endorsing_peers + j]->busy_time());
    for (std::uint32_t o = 0; o < t.orderers; ++o)
        row("orderer" + std::to_string(o), dir.orderers[o], NodeClass::Orderer,
            orderers[o]->busy_time());
    for (std::uint32_t b = 0; b < t.brokers; ++b)
        row("broker" + std::to_string(b), dir.brokers[b], NodeClass::Broker,
            brokers[b]->busy_time());

    const PeerNode& ref = *peers.front();
    BlockStats& bs = counters.blocks;
    bs.capacity = config.cutter.max_txn_count;
    for (const auto& stored : ref.ledger().blocks())
    {
        if (stored.block->cut_reason == CutReason::Genesis)
            continue;
        ++bs.blocks;
        bs.txns += stored.block->txns.size();
        ++bs.cut_reasons[static_cast<std::size_t>(stored.block->cut_reason)];
        for (TxnFlag f : stored.flags)
            bs.flags.add(f);
    }
    for (const PeerNode* p : peers)
        counters.endorse_refusals += p->refusals();

    for (std::uint32_t i = 0; i < peers.size(); ++i)
    {
        const PeerNode& p = *peers[i];
        const bool endorsing = i < t.endorsing_peers;
        run.peers.push_back(PeerSummary{endorsing ? i : i - t.endorsing_peers, endorsing,
            p.ledger().next_height() - 1, p.ledger().tip_hash(), p.state().digest()});
        run.ledgers_agree = run.ledgers_agree && same_history(ref, p);
    }
    ref.state().for_each([&](const std::string&, const WorldState::Entry& e) {
        run.total_balance += e.value;
    });
    if (config.trace_blocks)
        for (const auto& stored : ref.ledger().blocks())
            run.block_trace.push_back(block_trace_line(*stored.block, stored.flags));

    run.report = aggregate(run.journeys, counters, window);
    run.report.config = config.resolved;
    run.report.seed = config.seed;
    run.report.extra = {
        {"trace",
            {{"events_dispatched", run.trace.events_dispatched},
                {"final_time_us", run.trace.final_time.count()},
                {"digest", to_hex(run.trace.digest)}, {"truncated", run.trace.truncated}}},
        {"ledgers_agree", run.ledgers_agree},
        {"height", ref.ledger().next_height() - 1},
        {"tip_hash", ref.ledger().tip_hash().hex()},
        {"state_digest", ref.state().digest().hex()},
        {"total_balance", run.total_balance},
        {"late_commits", late_commits},
        {"blocks_cut", orderers.front()->cut_blocks().size()},
    };
    return run;
}

std::string journeys_csv(const std::vector<TxnJourney>& journeys)
{
    std::string out = "txn_id,client,op,submit_us,endorsed_us,bcast_ack_us,commit_us,status\n";
    auto opt = [](const std::optional<SimTime>& t) {
        return t ? std::to_string(t->count()) : std::string();
    };
    for (const TxnJourney& j : journeys)
    {
        out += csv_field(j.txn_id) + ',' + std::to_string(j.client) + ',' +
               std::string(to_string(j.op)) + ',' + std::to_string(j.submit_time.count()) + ',' +
               opt(j.endorsed_time) + ',' + opt(j.broadcast_ack_time) + ',' + opt(j.commit_time) +
               ',' + std::string(to_string(j.status)) + '\n';
    }
    return out;
}

std::string report_json(const RunReport& report)
{
    return to_json(report).dump(2) + "\n";
}

void write_run_outputs(const RunArtifacts& run, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "report.json", report_json(run.report));
    write_file(out_dir / "journeys.csv",
        config_header(run.report.config, run.report.seed) + journeys_csv(run.journeys));
    if (!run.block_trace.empty())
    {
        std::string lines;
        for (const std::string& l : run.block_trace)
            lines += l + '\n';
        write_file(out_dir / "blocks.jsonl", lines);
    }
}

SweepSpec parse_sweep(const json& input, const std::filesystem::path& base_dir)
{
    if (!input.is_object())
        throw ConfigError("<sweep>", "expected an object");
    for (const auto& [key, _] : input.items())
        if (key != "base" && key != "axes" && key != "mode" && key != "seeds")
            throw ConfigError(key, "unknown sweep field");

    SweepSpec spec;
    const json base = input.value("base", json::object());
    if (base.is_string())
    {
        std::filesystem::path p = base.get<std::string>();
        spec.base = load_config_json(p.is_relative() ? base_dir / p : p);
    }
    else if (base.is_object())
    {
        spec.base = resolve_profile(base, base_dir);
    }
    else
    {
        throw ConfigError("base", "expected a config object or file path");
    }

    auto add_axis = [&](const std::string& path, const json& values) {
        if (!config_scalar_paths().count(path))
            throw ConfigError(path, "not a config parameter");
        if (path == "seed")
            throw ConfigError(path, "seeds are assigned per cell; use \"seeds\"");
        if (!values.is_array() || values.empty())
            throw ConfigError(path, "axis needs a non-empty array of values");
        spec.axes.emplace_back(path, std::vector<json>(values.begin(), values.end()));
    };
    const json axes = input.value("axes", json::array());
    if (axes.is_object())
    {
        for (const auto& [path, values] : axes.items())
            add_axis(path, values);
    }
    else if (axes.is_array())
    {
        for (const json& a : axes)
        {
            if (!a.is_object() || !a.contains("param") || !a["param"].is_string())
                throw ConfigError("axes", "entries need a \"param\" path and \"values\"");
            add_axis(a["param"].get<std::string>(), a.value("values", json()));
        }
    }
    else
    {
        throw ConfigError("axes", "expected an array or object");
    }

    const std::string mode = input.value("mode", std::string("cross"));
    if (mode != "cross" && mode != "paired")
        throw ConfigError("mode", "expected \"cross\" or \"paired\"");
    spec.paired = mode == "paired";
    if (spec.paired)
        for (const auto& axis : spec.axes)
            if (axis.second.size() != spec.axes.front().second.size())
                throw ConfigError(axis.first, "paired axes must have equal lengths");

    const json seeds = input.value("seeds", json(1));
    if (!seeds.is_number_integer() || seeds.get<std::int64_t>() <= 0)
        throw ConfigError("seeds", "expected a positive integer");
    spec.seeds = seeds.get<std::uint32_t>();

    // Fail early on an invalid base rather than once per cell.
    parse_config(spec.base);
    return spec;
}

namespace {

std::vector<json> sweep_points(const SweepSpec& spec)
{
    std::vector<json> points;
    if (spec.axes.empty())
    {
        points.push_back(json::object());
    }
    else if (spec.paired)
    {
        for (std::size_t i = 0; i < spec.axes.front().second.size(); ++i)
        {
            json p = json::object();
            for (const auto& [path, values] : spec.axes)
                p[path] = values[i];
            points.push_back(std::move(p));
        }
    }
    else
    {
        std::vector<std::size_t> idx(spec.axes.size(), 0);
        for (;;)
        {
            json p = json::object();
            for (std::size_t a = 0; a < spec.axes.size(); ++a)
                p[spec.axes[a].first] = spec.axes[a].second[idx[a]];
            points.push_back(std::move(p));
            std::size_t a = spec.axes.size();
            while (a > 0 && ++idx[a - 1] == spec.axes[a - 1].second.size())
                idx[--a] = 0;
            if (a == 0)
                break;
        }
    }
    return points;
}

} // namespace

std::vector<CellResult> sweep(const SweepSpec& spec,
    const std::optional<std::filesystem::path>& out_dir, unsigned workers)
{
    const std::vector<json> points = sweep_points(spec);
    const std::uint64_t base_seed = parse_config(spec.base).seed;

    std::vector<CellResult> cells;
    for (const json& p : points)
        for (std::uint32_t s = 0; s < spec.seeds; ++s)
        {
            CellResult c;
            c.index = cells.size();
            c.params = p;
            c.seed = base_seed + c.index;
            cells.push_back(std::move(c));
        }

    auto run_cell = [&](CellResult& cell) {
        try
        {
            json cfg = spec.base;
            for (const auto& [path, value] : cell.params.items())
                set_config_path(cfg, path, value);
            cfg["seed"] = cell.seed;
            const RunArtifacts run = simulate(parse_config(cfg));
            if (out_dir)
            {
                char name[32];
                std::snprintf(name, sizeof name, "cell_%04zu", cell.index);
                write_run_outputs(run, *out_dir / name);
            }
            cell.report = run.report;
        }
        catch (const std::exception& e)
        {
            cell.error = e.what();
        }
    };

    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));
    if (workers <= 1)
    {
        for (CellResult& c : cells)
            run_cell(c);
        return cells;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < cells.size(); i = next++)
                run_cell(cells[i]);
        });
    for (std::thread& th : pool)
        th.join();
    return cells;
}

std::string cells_csv(const SweepSpec& spec, const std::vector<CellResult>& cells)
{
    std::string out = "# base=" + spec.base.dump() + "\n";
    std::vector<std::string> header;
    for (const auto& axis : spec.axes)
        header.push_back(axis.first);
    for (const char* col : {"seed", "throughput_tps", "avg_latency_s", "p50_s", "p95_s", "r_ratio",
             "dropped_endorse", "dropped_broadcast", "invalid_committed", "blocks",
             "mean_block_fill", "committed", "submitted", "in_flight", "r_final", "error"})
        header.emplace_back(col);
    for (std::size_t i = 0; i < header.size(); ++i)
        out += (i ? "," : "") + csv_field(header[i]);
    out += '\n';

    for (const CellResult& c : cells)
    {
        std::vector<std::string> row;
        for (const auto& axis : spec.axes)
            row.push_back(json_cell(c.params.at(axis.first)));
        row.push_back(std::to_string(c.seed));
        if (c.report)
        {
            const RunReport& r = *c.report;
            row.push_back(format_double(r.throughput_tps));
            row.push_back(format_optional(r.avg_latency_s));
            row.push_back(format_optional(r.p50_latency_s));
            row.push_back(format_optional(r.p95_latency_s));
            row.push_back(format_optional(r.r_ratio));
            row.push_back(std::to_string(r.totals.dropped_endorse));
            row.push_back(std::to_string(r.totals.dropped_broadcast));
            row.push_back(std::to_string(r.totals.invalid_committed));
            row.push_back(std::to_string(r.counters.blocks.blocks));
            row.push_back(format_double(r.counters.blocks.mean_fill()));
            row.push_back(std::to_string(r.totals.committed));
            row.push_back(std::to_string(r.totals.submitted));
            row.push_back(std::to_string(r.totals.in_flight));
            row.push_back(format_optional(r.r_final));
            row.emplace_back();
        }
        else
        {
            for (int i = 0; i < 14; ++i)
                row.emplace_back("NA");
            row.push_back(c.error);
        }
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + csv_field(row[i]);
        out += '\n';
    }
    return out;
}

std::size_t CsvTable::column(std::string_view name) const
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw ConfigError(std::string(name), "missing column in cells table");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text)
{
    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool at_line_start = true;
    bool skip_line = false;

    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        if (!(record.size() == 1 && record.front().empty()))
        {
            if (table.header.empty())
                table.header = std::move(record);
            else
                table.rows.push_back(std::move(record));
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i)
    {
        const char c = text[i];
        if (at_line_start)
        {
            at_line_start = false;
            skip_line = c == '#';
        }
        if (skip_line)
        {
            if (c == '\n')
            {
                skip_line = false;
                at_line_start = true;
            }
            continue;
        }
        if (quoted)
        {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"')
            {
                field += '"';
                ++i;
            }
            else if (c == '"')
            {
                quoted = false;
            }
            else
            {
                field += c;
            }
            continue;
        }
        if (c == '"')
            quoted = true;
        else if (c == ',')
        {
            record.push_back(std::move(field));
            field.clear();
        }
        else if (c == '\n')
        {
            end_record();
            at_line_start = true;
        }
        else if (c != '\r')
            field += c;
    }
    if (!field.empty() || !record.empty())
        end_record();
    return table;
}

const std::vector<PlotPreset>& plot_presets()
{
    static const std::vector<PlotPreset> presets{
        {"saturation-throughput", "throughput vs offered rate, N=C=K", "rate.total_tps",
            "throughput_tps", {}},
        {"saturation-latency", "average latency vs offered rate, N=C=K", "rate.total_tps",
            "avg_latency_s", {}},
        {"fixed-client-rate", "throughput vs client count at a fixed per-client rate",
            "topology.clients", "throughput_tps", {}},
        {"single-client", "throughput vs offered rate with one client", "rate.total_tps",
            "throughput_tps", {}},
        {"orderer-scaling", "throughput vs O", "topology.orderers", "throughput_tps", {}},
        {"peer-scaling-throughput", "throughput vs N", "topology.endorsing_peers",
            "throughput_tps", {}},
        {"peer-scaling-latency", "average latency vs N", "topology.endorsing_peers",
            "avg_latency_s", {}},
        {"replication-extremes", "throughput vs offered rate, max vs min replication",
            "rate.total_tps", "throughput_tps", {"replication.factor", "replication.min_insync"}},
        {"broker-scaling", "throughput vs K", "topology.brokers", "throughput_tps", {}},
    };
    return presets;
}

const PlotPreset& find_preset(std::string_view name)
{
    for (const PlotPreset& p : plot_presets())
        if (p.name == name)
            return p;
    throw ConfigError(std::string(name), "unknown plot preset");
}

std::vector<PlotSeries> build_plot(const CsvTable& cells, const PlotPreset& preset)
{
    const std::size_t x_col = cells.column(preset.x_column);
    const std::size_t y_col = cells.column(preset.y_column);
    std::vector<std::size_t> series_cols;
    for (const std::string& s : preset.series_columns)
        series_cols.push_back(cells.column(s));
    std::optional<std::size_t> error_col;
    if (std::find(cells.header.begin(), cells.header.end(), "error") != cells.header.end())
        error_col = cells.column("error");

    auto number = [](const std::string& s) -> std::optional<double> {
        double v = 0.0;
        auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || end != s.data() + s.size())
            return std::nullopt;
        return v;
    };

    // series name -> x -> samples
    std::map<std::string, std::map<double, std::vector<double>>> groups;
    for (const auto& row : cells.rows)
    {
        if (error_col && *error_col < row.size() && !row[*error_col].empty())
            continue;
        if (x_col >= row.size() || y_col >= row.size())
            continue;
        const auto x = number(row[x_col]);
        const auto y = number(row[y_col]);
        if (!x || !y)
            continue;
        std::string name;
        for (std::size_t i = 0; i < series_cols.size(); ++i)
            name += (i ? "," : "") + preset.series_columns[i] + "=" +
                    (series_cols[i] < row.size() ? row[series_cols[i]] : "");
        if (name.empty())
            name = preset.y_column;
        groups[name][*x].push_back(*y);
    }

    std::vector<PlotSeries> out;
    for (const auto& [name, points] : groups)
    {
        PlotSeries s{name, {}};
        for (const auto& [x, ys] : points)
        {
            const double n = static_cast<double>(ys.size());
            double mean = 0.0;
            for (double y : ys)
                mean += y;
            mean /= n;
            double var = 0.0;
            for (double y : ys)
                var += (y - mean) * (y - mean);
            const double se = ys.size() > 1 ? std::sqrt(var / (n - 1.0)) / std::sqrt(n) : 0.0;
            s.points.push_back(PlotPoint{x, mean, se, ys.size()});
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::filesystem::path> write_plot_files(const std::vector<PlotSeries>& series,
    const PlotPreset& preset, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> paths;
    for (const PlotSeries& s : series)
    {
        std::string safe;
        for (char c : s.name)
            safe += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
        const auto path = out_dir / (preset.name + "__" + safe + ".dat");
        std::string body = "# " + preset.description + "\n# series: " + s.name + "\n# " +
                           preset.x_column + " " + preset.y_column + " stderr n\n";
        for (const PlotPoint& p : s.points)
            body += format_double(p.x) + " " + format_double(p.y) + " " +
                    format_double(p.stderr_y) + " " + std::to_string(p.n) + "\n";
        write_file(path, body);
        paths.push_back(path);
    }
    return paths;
}

} // namespace eovsim
