#pragma once

#include "eovsim/driver.hpp"
#include "eovsim/metrics.hpp"
#include "eovsim/ordering.hpp"
#include "eovsim/sim_net.hpp"
#include "eovsim/smallbank.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace eovsim {

struct Topology
{
    std::uint32_t endorsing_peers = 4; // N
    std::uint32_t clients = 4;         // C
    std::uint32_t orderers = 4;        // O
    std::uint32_t brokers = 4;         // K
    std::uint32_t non_endorsing_peers = 0;
    std::uint32_t zookeeper = 3; // metadata only
};

struct ServiceTimes
{
    Duration endorse{1000};
    Duration validate_per_txn{100};
    Duration verify_per_endorsement{0};
    Duration log_append{0};
    Duration orderer_forward{0};
};

// Byte sizes used to cost messages on the wire.
struct MessageSizes
{
    std::uint32_t proposal = 800;
    std::uint32_t identity_stamp = 800;
    std::uint32_t endorsement_header = 100;
    std::uint32_t read_entry = 40;
    std::uint32_t write_entry = 48;
    std::uint32_t envelope_header = 200;
    std::uint32_t block_header = 200;
    std::uint32_t log_header = 64;
    std::uint32_t ack = 64;
    std::uint32_t commit_entry = 48;
};

struct ExperimentConfig
{
    Topology topology;
    double total_tps = 100.0;
    Duration duration = std::chrono::seconds{30};
    double warmup_fraction = 0.1;
    Duration drain_limit = std::chrono::seconds{60};
    std::uint64_t seed = 1;

    WorkloadConfig workload;
    std::uint32_t policy_threshold = 4;
    BlockCutterConfig cutter;
    ReplicationConfig replication;
    std::uint32_t orderer_queue_capacity = 5000;
    LatencyModel latency;
    ServiceTimes service;
    Duration endorse_timeout = std::chrono::seconds{1};
    Duration broadcast_timeout = std::chrono::seconds{2};
    std::uint32_t gossip_fanout = 1;
    std::set<std::uint32_t> unauthorized_clients;
    MessageSizes sizes;
    bool trace_blocks = false;

    // Fully resolved form, every default filled in. Echoed into outputs.
    nlohmann::json resolved;

    double per_client_tps() const { return total_tps / topology.clients; }
    Window measurement_window() const;
};

// Builds a config from JSON, filling defaults. Unknown or invalid fields
// raise ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& input);

// Reads a config file. A top-level "profile" entry names a JSON file
// (relative to the config's directory) whose contents the config overrides.
nlohmann::json load_config_json(const std::filesystem::path& path);
nlohmann::json resolve_profile(nlohmann::json config, const std::filesystem::path& base_dir);

// Dotted paths of every scalar in the resolved default schema, e.g.
// "topology.orderers" or "network.default.base_us".
const std::set<std::string>& config_scalar_paths();

// Sets a dotted path, creating intermediate objects. Setting one of
// rate.total_tps / rate.per_client_tps clears the other.
void set_config_path(nlohmann::json& config, const std::string& dotted, const nlohmann::json& value);

} // namespace eovsim
