#include "eovsim/harness.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace eovsim;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

json small(double tps = 60.0, double duration_s = 3.0)
{
    return json{{"topology", {{"endorsing_peers", 3}, {"clients", 3}, {"orderers", 2}, {"brokers", 3}}},
        {"rate", {{"total_tps", tps}}}, {"duration_s", duration_s}, {"drain_limit_s", 10},
        {"network", {{"jitter_fraction", 0.2}, {"default", {{"base_us", 500}, {"per_byte_us", 0.001}}}}},
        {"workload", {{"accounts", 200}}}};
}

void check_conservation(const RunArtifacts& run)
{
    const StatusCounts& t = run.report.totals;
    CHECK(t.submitted == run.journeys.size());
    CHECK(t.accounted() == t.submitted);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("a light run commits everything and all peers agree", "[harness][scenario]")
{
    const RunArtifacts run = simulate(parse_config(small()));
    check_conservation(run);
    CHECK(run.report.totals.submitted == 180);
    CHECK(run.report.totals.committed + run.report.totals.invalid_committed == 180);
    CHECK(run.ledgers_agree);
    CHECK_FALSE(run.trace.truncated);
    CHECK(run.report.r_final == 1.0);
    for (const PeerSummary& p : run.peers)
    {
        CHECK(p.tip_hash == run.peers.front().tip_hash);
        CHECK(p.state_digest == run.peers.front().state_digest);
    }
    for (const TxnJourney& j : run.journeys)
        if (j.status == JourneyStatus::Committed)
        {
            REQUIRE(j.endorsed_time);
            REQUIRE(j.broadcast_ack_time);
            REQUIRE(j.commit_time);
            CHECK(j.submit_time <= *j.endorsed_time);
            CHECK(*j.endorsed_time <= *j.commit_time);
        }
}

TEST_CASE("identical config and seed give byte-identical outputs", "[harness][determinism]")
{
    const ExperimentConfig c = parse_config(small(120.0));
    const RunArtifacts a = simulate(c);
    const RunArtifacts b = simulate(c);
    CHECK(report_json(a.report) == report_json(b.report));
    CHECK(journeys_csv(a.journeys) == journeys_csv(b.journeys));
    CHECK(a.trace.digest == b.trace.digest);

    json other = small(120.0);
    other["seed"] = 2;
    CHECK(simulate(parse_config(other)).trace.digest != a.trace.digest);
}

TEST_CASE("non-endorsing peers converge through gossip", "[harness][scenario]")
{
    json cfg = small();
    cfg["topology"]["non_endorsing_peers"] = 5;
    cfg["gossip_fanout"] = 2;
    const RunArtifacts run = simulate(parse_config(cfg));
    REQUIRE(run.peers.size() == 8);
    CHECK(run.ledgers_agree);
    for (const PeerSummary& p : run.peers)
    {
        CHECK(p.height == run.peers.front().height);
        CHECK(p.tip_hash == run.peers.front().tip_hash);
        CHECK(p.state_digest == run.peers.front().state_digest);
    }
    CHECK_FALSE(run.peers.back().endorsing);
}

TEST_CASE("transfers alone conserve the total balance", "[harness][scenario]")
{
    json cfg = small(150.0);
    cfg["workload"] = {{"accounts", 20},
        {"mix", {{"TransactSavings", 0}, {"DepositChecking", 0}, {"SendPayment", 0.5},
                    {"WriteCheck", 0}, {"Amalgamate", 0.5}, {"Query", 0}}},
        {"max_amount", 5000}};
    const RunArtifacts run = simulate(parse_config(cfg));
    check_conservation(run);
    CHECK(run.total_balance == 20 * (10000 + 10000));
    CHECK(run.ledgers_agree);
    // Twenty hot accounts under this load produce conflicts.
    CHECK(run.report.counters.blocks.flags.mvcc_conflict > 0);
}

TEST_CASE("unauthorized clients are refused and their journeys dropped", "[harness][scenario]")
{
    json cfg = small();
    cfg["unauthorized_clients"] = {1};
    const RunArtifacts run = simulate(parse_config(cfg));
    check_conservation(run);
    std::uint64_t dropped = 0;
    for (const TxnJourney& j : run.journeys)
        if (j.client == 1)
        {
            CHECK(j.status == JourneyStatus::DroppedEndorsement);
            ++dropped;
        }
    CHECK(dropped == 60);
    CHECK(run.report.counters.endorse_refusals >= dropped);
}

TEST_CASE("a 2-of-3 policy commits like all-of", "[harness][scenario]")
{
    json cfg = small();
    cfg["policy"] = {{"threshold", 2}};
    const RunArtifacts run = simulate(parse_config(cfg));
    const RunArtifacts all = simulate(parse_config(small()));
    check_conservation(run);
    CHECK(run.report.totals.committed + run.report.totals.invalid_committed == 180);
    CHECK(run.report.totals.dropped_endorse == 0);
    // Contention, not the policy, decides validity on a 200-account workload.
    const auto diff = static_cast<std::int64_t>(run.report.totals.committed) -
                      static_cast<std::int64_t>(all.report.totals.committed);
    CHECK(std::abs(diff) <= 10);
    CHECK(run.ledgers_agree);
}

TEST_CASE("a lone transaction is cut by the timeout exactly 2 s after arrival",
    "[harness][scenario]")
{
    json cfg = small();
    cfg["topology"]["clients"] = 1;
    cfg["rate"] = {{"total_tps", 0.25}};
    cfg["duration_s"] = 1.0;
    cfg["trace_blocks"] = true;
    const RunArtifacts run = simulate(parse_config(cfg));
    REQUIRE(run.journeys.size() == 1);
    CHECK(run.journeys[0].status == JourneyStatus::Committed);
    REQUIRE(run.block_trace.size() == 2);
    const json b = json::parse(run.block_trace[1]);
    CHECK(b["cut_reason"] == "Timeout");
    CHECK(b["created_us"].get<std::int64_t>() - b["oldest_pending_us"].get<std::int64_t>() ==
          2'000'000);
}

TEST_CASE("a sub-second run accounts for every journey", "[harness][scenario]")
{
    json cfg = small(10.0, 0.5);
    cfg["warmup_fraction"] = 0.0;
    const RunArtifacts run = simulate(parse_config(cfg));
    check_conservation(run);
    CHECK(run.report.window.end == 500ms);
}

TEST_CASE("run outputs land on disk with a config header", "[harness][io]")
{
    const auto dir = std::filesystem::temp_directory_path() / "eovsim_test_outputs";
    std::filesystem::remove_all(dir);
    json cfg = small();
    cfg["trace_blocks"] = true;
    const RunArtifacts run = simulate(parse_config(cfg));
    write_run_outputs(run, dir);
    const std::string csv = slurp(dir / "journeys.csv");
    CHECK(csv.rfind("# seed=1\n# config=", 0) == 0);
    CHECK(csv.find("txn_id,client,op,submit_us,endorsed_us,bcast_ack_us,commit_us,status\n") !=
          std::string::npos);
    const json report = json::parse(slurp(dir / "report.json"));
    CHECK(report["config"]["topology"]["orderers"] == 2);
    CHECK(std::filesystem::exists(dir / "blocks.jsonl"));
}

TEST_CASE("sweep cell counts follow the axes", "[harness][sweep]")
{
    const json base = small(30.0, 1.0);
    auto cells_for = [&](json axes, std::string mode = "cross", int seeds = 1) {
        const SweepSpec spec = parse_sweep(
            json{{"base", base}, {"axes", axes}, {"mode", mode}, {"seeds", seeds}}, ".");
        return sweep(spec, std::nullopt, 1);
    };
    CHECK(cells_for(json{{"topology.brokers", {3, 4, 6}}}).size() == 3);
    CHECK(cells_for(json{{"topology.orderers", {1, 2, 3, 4, 5, 6, 7}}}).size() == 7);
    CHECK(cells_for(json::array()).size() == 1);
    CHECK(cells_for(json{{"topology.brokers", {3, 4}}, {"topology.orderers", {1, 2}}}).size() == 4);
    CHECK(cells_for(json{{"replication.factor", {1, 3}}, {"replication.min_insync", {1, 2}}},
              "paired")
              .size() == 2);
    const auto seeded = cells_for(json{{"topology.brokers", {3, 4}}}, "cross", 3);
    REQUIRE(seeded.size() == 6);
    for (const CellResult& c : seeded)
    {
        CHECK(c.seed == 1 + c.index);
        CHECK(c.error.empty());
        REQUIRE(c.report);
        CHECK(c.report->totals.accounted() == c.report->totals.submitted);
    }
}

TEST_CASE("the last axis varies fastest in a cross product", "[harness][sweep]")
{
    const SweepSpec spec = parse_sweep(json{{"base", small(30.0, 1.0)},
                                           {"axes", json::array({
                                                        {{"param", "topology.orderers"}, {"values", {1, 2}}},
                                                        {{"param", "topology.brokers"}, {"values", {3, 4}}},
                                                    })}},
        ".");
    const auto cells = sweep(spec, std::nullopt, 1);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].params == json{{"topology.orderers", 1}, {"topology.brokers", 3}});
    CHECK(cells[1].params == json{{"topology.orderers", 1}, {"topology.brokers", 4}});
    CHECK(cells[2].params == json{{"topology.orderers", 2}, {"topology.brokers", 3}});
}

TEST_CASE("parallel and serial sweeps produce identical tables", "[harness][sweep]")
{
    const SweepSpec spec =
        parse_sweep(json{{"base", small(60.0, 1.0)}, {"axes", {{"topology.orderers", {1, 2, 3}}}}, {"seeds", 2}},
            ".");
    CHECK(cells_csv(spec, sweep(spec, std::nullopt, 1)) == cells_csv(spec, sweep(spec, std::nullopt, 3)));
}

TEST_CASE("a failing cell is recorded and the sweep continues", "[harness][sweep]")
{
    const SweepSpec spec = parse_sweep(
        json{{"base", small(30.0, 1.0)}, {"axes", {{"replication.factor", {2, 99}}}}}, ".");
    const auto cells = sweep(spec, std::nullopt, 1);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].error.empty());
    CHECK(cells[1].error.find("replication.factor") != std::string::npos);
    const CsvTable t = parse_csv(cells_csv(spec, cells));
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][t.column("throughput_tps")] == "NA");
    CHECK_FALSE(t.rows[1][t.column("error")].empty());
}

TEST_CASE("invalid sweep specs name the offending field", "[harness][sweep]")
{
    auto field = [](const json& spec) {
        try
        {
            parse_sweep(spec, ".");
        }
        catch (const ConfigError& e)
        {
            return e.field();
        }
        return std::string();
    };
    CHECK(field(json{{"axes", {{"topology.peers", {1}}}}}) == "topology.peers");
    CHECK(field(json{{"axes", {{"seed", {1, 2}}}}}) == "seed");
    CHECK(field(json{{"axes", {{"topology.brokers", json::array()}}}}) == "topology.brokers");
    CHECK(field(json{{"axes", {{"topology.brokers", {3, 4}}, {"topology.orderers", {1}}}},
              {"mode", "paired"}}) == "topology.orderers");
    CHECK(field(json{{"mode", "zip"}}) == "mode");
    CHECK(field(json{{"seeds", 0}}) == "seeds");
    CHECK(field(json{{"bogus", 1}}) == "bogus");
    CHECK(field(json{{"base", {{"topology", {{"orderers", 0}}}}}}) == "topology.orderers");
}

TEST_CASE("cells.csv parses back with quoting and comments", "[harness][report]")
{
    const CsvTable t = parse_csv("# comment\na,b,c\n1,\"x,y\",\"q\"\"q\"\n2,,\n");
    REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "x,y");
    CHECK(t.rows[0][2] == "q\"q");
    CHECK(t.rows[1] == std::vector<std::string>{"2", "", ""});
    CHECK_THROWS_AS(t.column("d"), ConfigError);
}

TEST_CASE("plot presets group by x and series", "[harness][report]")
{
    SECTION("a single-row table gives a single point")
    {
        const CsvTable t = parse_csv("rate.total_tps,seed,throughput_tps,error\n300,1,290.5,\n");
        const auto series = build_plot(t, find_preset("saturation-throughput"));
        REQUIRE(series.size() == 1);
        REQUIRE(series[0].points.size() == 1);
        CHECK(series[0].points[0].x == 300.0);
        CHECK(series[0].points[0].y == 290.5);
        CHECK(series[0].points[0].stderr_y == 0.0);
    }
    SECTION("replication extremes give two series")
    {
        const CsvTable t = parse_csv(
            "rate.total_tps,replication.factor,replication.min_insync,seed,throughput_tps,error\n"
            "200,1,1,1,199,\n200,15,14,2,198,\n300,1,1,3,290,\n300,15,14,4,288,\n"
            "300,15,14,5,292,\n400,1,1,6,NA,boom\n");
        const auto series = build_plot(t, find_preset("replication-extremes"));
        REQUIRE(series.size() == 2);
        CHECK(series[0].name == "replication.factor=1,replication.min_insync=1");
        CHECK(series[0].points.size() == 2); // the failed cell is skipped
        REQUIRE(series[1].points.size() == 2);
        CHECK(series[1].points[1].y == Catch::Approx(290.0));
        CHECK(series[1].points[1].n == 2);
        CHECK(series[1].points[1].stderr_y == Catch::Approx(2.0));

        const auto dir = std::filesystem::temp_directory_path() / "eovsim_test_plots";
        std::filesystem::remove_all(dir);
        const auto files = write_plot_files(series, find_preset("replication-extremes"), dir);
        REQUIRE(files.size() == 2);
        CHECK(files[0].filename().string().rfind("replication-extremes__", 0) == 0);
        CHECK(slurp(files[1]).find("300 290 2 2") != std::string::npos);
    }
    SECTION("a missing column is a config error")
    {
        const CsvTable t = parse_csv("seed,throughput_tps\n1,5\n");
        CHECK_THROWS_AS(build_plot(t, find_preset("orderer-scaling")), ConfigError);
    }
    CHECK_THROWS_AS(find_preset("nope"), ConfigError);
    CHECK(plot_presets().size() == 9);
}
