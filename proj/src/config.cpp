#include "eovsim/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace eovsim {

namespace {

using nlohmann::json;

json default_config()
{
    json mix = json::object();
    for (std::size_t i = 0; i < kSmallbankVariantCount; ++i)
        mix[std::string(to_string(static_cast<SmallbankVariant>(i)))] = 1.0 / 6.0;

    const MessageSizes s;
    return json{
        {"topology",
            {{"endorsing_peers", 4}, {"clients", 4}, {"orderers", 4}, {"brokers", 4},
                {"non_endorsing_peers", 0}, {"zookeeper", 3}}},
        {"rate", {{"total_tps", 100.0}, {"per_client_tps", nullptr}}},
        {"duration_s", 30.0},
        {"warmup_fraction", 0.1},
        {"drain_limit_s", 60.0},
        {"seed", 1},
        {"workload",
            {{"accounts", 10000}, {"mix", mix},
                {"access", {{"kind", "uniform"}, {"fraction_hot", 0.01}, {"prob_hot", 0.9}}},
                {"max_amount", 100}, {"initial_checking", 10000}, {"initial_savings", 10000}}},
        {"policy", {{"threshold", nullptr}}},
        {"cutter", {{"max_txn_count", 100}, {"timeout_ms", 2000.0},
                       {"max_block_bytes", 10ull * 1024 * 1024}}},
        {"replication", {{"factor", nullptr}, {"min_insync", nullptr}}},
        {"orderer_queue_capacity", 5000},
        {"network",
            {{"jitter_fraction", 0.0},
                {"default", {{"base_us", 500.0}, {"per_byte_us", 0.0}, {"per_message_us", 0.0}}},
                {"links", json::array()}}},
        {"service_times_us",
            {{"endorse", 1000.0}, {"validate_per_txn", 100.0}, {"verify_per_endorsement", 0.0},
                {"log_append", 0.0}, {"orderer_forward", 0.0}}},
        {"timeouts_ms", {{"endorse", 1000.0}, {"broadcast", 2000.0}}},
        {"gossip_fanout", 1},
        {"unauthorized_clients", json::array()},
        {"message_sizes",
            {{"proposal", s.proposal}, {"identity_stamp", s.identity_stamp},
                {"endorsement_header", s.endorsement_header}, {"read_entry", s.read_entry},
                {"write_entry", s.write_entry}, {"envelope_header", s.envelope_header},
                {"block_header", s.block_header}, {"log_header", s.log_header}, {"ack", s.ack},
                {"commit_entry", s.commit_entry}}},
        {"trace_blocks", false},
    };
}

const json& defaults()
{
    static const json d = default_config();
    return d;
}

std::string join(const std::string& prefix, const std::string& key)
{
    return prefix.empty() ? key : prefix + "." + key;
}

// Arrays and scalars are leaves; only objects are descended into.
void check_known_keys(const json& input, const json& schema, const std::string& prefix)
{
    if (!input.is_object())
        throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (const auto& [key, value] : input.items())
    {
        const std::string path = join(prefix, key);
        if (!schema.contains(key))
            throw ConfigError(path, "unknown field");
        if (schema[key].is_object() && !value.is_null())
            check_known_keys(value, schema[key], path);
    }
}

void collect_paths(const json& node, const std::string& prefix, std::set<std::string>& out)
{
    for (const auto& [key, value] : node.items())
    {
        const std::string path = join(prefix, key);
        if (value.is_object())
            collect_paths(value, path, out);
        else
            out.insert(path);
    }
}

// Typed accessors over the merged document; every failure names the field.
class Reader
{
public:
    explicit Reader(const json& doc) : doc_(doc) {}

    const json& at(const std::string& dotted) const
    {
        const json* node = &doc_;
        std::size_t pos = 0;
        while (pos <= dotted.size())
        {
            const std::size_t dot = std::min(dotted.find('.', pos), dotted.size());
            const std::string key = dotted.substr(pos, dot - pos);
            if (!node->is_object() || !node->contains(key))
                throw ConfigError(dotted, "missing field");
            node = &(*node)[key];
            pos = dot + 1;
        }
        return *node;
    }

    bool is_null(const std::string& path) const { return at(path).is_null(); }

    double number(const std::string& path) const
    {
        const json& v = at(path);
        if (!v.is_number())
            throw ConfigError(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d))
            throw ConfigError(path, "must be finite");
        return d;
    }

    std::uint64_t count(const std::string& path) const
    {
        const json& v = at(path);
        if (v.is_number_unsigned())
            return v.get<std::uint64_t>();
        if (v.is_number_integer())
        {
            if (v.get<std::int64_t>() < 0)
                throw ConfigError(path, "must be non-negative");
            return static_cast<std::uint64_t>(v.get<std::int64_t>());
        }
        if (v.is_number_float())
        {
            const double d = v.get<double>();
            if (d >= 0.0 && d == std::floor(d) && d < 1.8e19)
                return static_cast<std::uint64_t>(d);
        }
        throw ConfigError(path, "expected a non-negative integer");
    }

    std::uint32_t count32(const std::string& path) const
    {
        const std::uint64_t v = count(path);
        if (v > std::numeric_limits<std::uint32_t>::max())
            throw ConfigError(path, "out of range");
        return static_cast<std::uint32_t>(v);
    }

    std::int64_t integer(const std::string& path) const
    {
        const json& v = at(path);
        if (v.is_number_integer())
            return v.get<std::int64_t>();
        if (v.is_number_float())
        {
            const double d = v.get<double>();
            if (d == std::floor(d) && std::abs(d) < 9e18)
                return static_cast<std::int64_t>(d);
        }
        throw ConfigError(path, "expected an integer");
    }

    Duration micros(const std::string& path, double scale) const
    {
        const double v = number(path);
        if (v < 0.0)
            throw ConfigError(path, "must be non-negative");
        return Duration{std::llround(v * scale)};
    }

    std::string string(const std::string& path) const
    {
        const json& v = at(path);
        if (!v.is_string())
            throw ConfigError(path, "expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& path) const
    {
        const json& v = at(path);
        if (!v.is_boolean())
            throw ConfigError(path, "expected true or false");
        return v.get<bool>();
    }

private:
    const json& doc_;
};

LinkProfile read_link(const json& j, const std::string& path, const LinkProfile& fallback)
{
    LinkProfile p = fallback;
    auto num = [&](const char* key, double& out) {
        if (!j.contains(key))
            return false;
        if (!j[key].is_number() || !(j[key].get<double>() >= 0.0))
            throw ConfigError(join(path, key), "expected a non-negative number");
        out = j[key].get<double>();
        return true;
    };
    double v = 0.0;
    if (num("base_us", v))
        p.base = Duration{std::llround(v)};
    if (num("per_byte_us", v))
        p.per_byte_us = v;
    if (num("per_message_us", v))
        p.per_message = Duration{std::llround(v)};
    return p;
}

} // namespace

Window ExperimentConfig::measurement_window() const
{
    const auto begin =
        SimTime{std::llround(warmup_fraction * static_cast<double>(duration.count()))};
    return Window{begin, duration};
}

ExperimentConfig parse_config(const json& input)
{
    if (!input.is_object())
        throw ConfigError("<root>", "expected an object");
    if (input.contains("profile"))
        throw ConfigError("profile", "profile references must be resolved before parsing");
    check_known_keys(input, defaults(), "");

    json doc = defaults();
    doc.merge_patch(input);
    // merge_patch drops keys set to null; restore the "use derived default" markers.
    for (const char* path : {"/rate/total_tps", "/rate/per_client_tps", "/policy/threshold",
             "/replication/factor", "/replication/min_insync"})
        if (!doc.contains(json::json_pointer(path)))
            doc[json::json_pointer(path)] = nullptr;
    // An explicit per-client rate overrides the default total.
    if (input.contains("rate") && input["rate"].is_object() &&
        input["rate"].contains("per_client_tps") && !input["rate"].contains("total_tps"))
        doc["rate"]["total_tps"] = nullptr;

    Reader r(doc);
    ExperimentConfig c;

    Topology& t = c.topology;
    t.endorsing_peers = r.count32("topology.endorsing_peers");
    t.clients = r.count32("topology.clients");
    t.orderers = r.count32("topology.orderers");
    t.brokers = r.count32("topology.brokers");
    t.non_endorsing_peers = r.count32("topology.non_endorsing_peers");
    t.zookeeper = r.count32("topology.zookeeper");
    for (const char* f : {"endorsing_peers", "clients", "orderers", "brokers"})
        if (r.count(std::string("topology.") + f) == 0)
            throw ConfigError(std::string("topology.") + f, "must be at least 1");

    const bool has_total = !r.is_null("rate.total_tps");
    const bool has_per_client = !r.is_null("rate.per_client_tps");
    if (!has_total && !has_per_client)
        throw ConfigError("rate", "set total_tps or per_client_tps");
    if (has_total)
        c.total_tps = r.number("rate.total_tps");
    if (has_per_client)
    {
        const double total = r.number("rate.per_client_tps") * t.clients;
        if (has_total && std::abs(total - c.total_tps) > 1e-9 * std::max(1.0, total))
            throw ConfigError("rate", "total_tps and per_client_tps disagree");
        c.total_tps = total;
    }
    if (!(c.total_tps > 0.0))
        throw ConfigError("rate.total_tps", "must be positive");

    c.duration = r.micros("duration_s", 1e6);
    if (c.duration.count() <= 0)
        throw ConfigError("duration_s", "must be positive");
    c.warmup_fraction = r.number("warmup_fraction");
    if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 1.0))
        throw ConfigError("warmup_fraction", "must lie in [0, 1)");
    c.drain_limit = r.micros("drain_limit_s", 1e6);
    c.seed = r.count("seed");

    WorkloadConfig& w = c.workload;
    w.n_accounts = r.count32("workload.accounts");
    for (std::size_t i = 0; i < kSmallbankVariantCount; ++i)
        w.op_mix[i] = r.number(
            "workload.mix." + std::string(to_string(static_cast<SmallbankVariant>(i))));
    const std::string kind = r.string("workload.access.kind");
    if (kind == "hotspot")
        w.access = Hotspot{r.number("workload.access.fraction_hot"),
            r.number("workload.access.prob_hot")};
    else if (kind != "uniform")
        throw ConfigError("workload.access.kind", "expected \"uniform\" or \"hotspot\"");
    w.max_amount = r.integer("workload.max_amount");
    w.initial_checking = r.integer("workload.initial_checking");
    w.initial_savings = r.integer("workload.initial_savings");
    w.seed = c.seed;
    w.validate();

    c.policy_threshold = r.is_null("policy.threshold") ? t.endorsing_peers
                                                        : r.count32("policy.threshold");
    if (c.policy_threshold < 1 || c.policy_threshold > t.endorsing_peers)
        throw ConfigError("policy.threshold",
            "must lie in [1, " + std::to_string(t.endorsing_peers) + "]");

    c.cutter.max_txn_count = r.count32("cutter.max_txn_count");
    c.cutter.timeout = r.micros("cutter.timeout_ms", 1e3);
    c.cutter.max_block_bytes = r.count("cutter.max_block_bytes");
    c.cutter.validate();

    c.replication.brokers = t.brokers;
    c.replication.factor = r.is_null("replication.factor") ? std::max(1u, t.brokers - 1)
                                                           : r.count32("replication.factor");
    c.replication.min_insync = r.is_null("replication.min_insync")
                                   ? std::min(2u, c.replication.factor)
                                   : r.count32("replication.min_insync");
    c.replication.validate();

    c.orderer_queue_capacity = r.count32("orderer_queue_capacity");
    if (c.orderer_queue_capacity == 0)
        throw ConfigError("orderer_queue_capacity", "must be at least 1");

    const LinkProfile base = read_link(r.at("network.default"), "network.default", LinkProfile{});
    const double jitter = r.number("network.jitter_fraction");
    if (!(jitter >= 0.0 && jitter < 1.0))
        throw ConfigError("network.jitter_fraction", "must lie in [0, 1)");
    c.latency = LatencyModel(base, jitter);
    const json& links = r.at("network.links");
    if (!links.is_array())
        throw ConfigError("network.links", "expected an array");
    for (std::size_t i = 0; i < links.size(); ++i)
    {
        const std::string path = "network.links[" + std::to_string(i) + "]";
        const json& l = links[i];
        if (!l.is_object())
            throw ConfigError(path, "expected an object");
        for (const auto& [key, _] : l.items())
            if (key != "from" && key != "to" && key != "base_us" && key != "per_byte_us" &&
                key != "per_message_us")
                throw ConfigError(join(path, key), "unknown field");
        auto cls = [&](const char* key) {
            if (!l.contains(key) || !l[key].is_string())
                throw ConfigError(join(path, key), "expected a node class name");
            auto v = node_class_from_string(l[key].get<std::string>());
            if (!v)
                throw ConfigError(join(path, key), "expected client, peer, orderer or broker");
            return *v;
        };
        const NodeClass from = cls("from");
        const NodeClass to = cls("to");
        c.latency.set_link(from, to, read_link(l, path, base));
    }

    ServiceTimes& st = c.service;
    st.endorse = r.micros("service_times_us.endorse", 1.0);
    st.validate_per_txn = r.micros("service_times_us.validate_per_txn", 1.0);
    st.verify_per_endorsement = r.micros("service_times_us.verify_per_endorsement", 1.0);
    st.log_append = r.micros("service_times_us.log_append", 1.0);
    st.orderer_forward = r.micros("service_times_us.orderer_forward", 1.0);

    c.endorse_timeout = r.micros("timeouts_ms.endorse", 1e3);
    c.broadcast_timeout = r.micros("timeouts_ms.broadcast", 1e3);
    ClientConfig{c.per_client_tps(), c.duration, c.endorse_timeout, c.broadcast_timeout}
        .validate();

    c.gossip_fanout = r.count32("gossip_fanout");
    if (c.gossip_fanout == 0)
        throw ConfigError("gossip_fanout", "must be at least 1");

    const json& unauth = r.at("unauthorized_clients");
    if (!unauth.is_array())
        throw ConfigError("unauthorized_clients", "expected an array of client indices");
    for (const json& v : unauth)
    {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
            v.get<std::uint64_t>() >= t.clients)
            throw ConfigError("unauthorized_clients",
                "entries must be client indices below " + std::to_string(t.clients));
        c.unauthorized_clients.insert(v.get<std::uint32_t>());
    }

    MessageSizes& ms = c.sizes;
    std::pair<const char*, std::uint32_t*> sizes[] = {{"proposal", &ms.proposal},
        {"identity_stamp", &ms.identity_stamp}, {"endorsement_header", &ms.endorsement_header},
        {"read_entry", &ms.read_entry}, {"write_entry", &ms.write_entry},
        {"envelope_header", &ms.envelope_header}, {"block_header", &ms.block_header},
        {"log_header", &ms.log_header}, {"ack", &ms.ack}, {"commit_entry", &ms.commit_entry}};
    for (auto& [key, field] : sizes)
    {
        const std::string path = std::string("message_sizes.") + key;
        *field = r.count32(path);
        if (*field == 0)
            throw ConfigError(path, "must be positive");
    }

    c.trace_blocks = r.boolean("trace_blocks");

    doc["rate"] = {{"total_tps", c.total_tps}, {"per_client_tps", c.per_client_tps()}};
    doc["policy"]["threshold"] = c.policy_threshold;
    doc["replication"]["factor"] = c.replication.factor;
    doc["replication"]["min_insync"] = c.replication.min_insync;
    c.resolved = std::move(doc);
    return c;
}

json load_config_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string(), "cannot open file");
    json j;
    try
    {
        in >> j;
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    return resolve_profile(std::move(j), path.parent_path());
}

json resolve_profile(json config, const std::filesystem::path& base_dir)
{
    if (!config.is_object() || !config.contains("profile"))
        return config;
    if (!config["profile"].is_string())
        throw ConfigError("profile", "expected a file path");
    std::filesystem::path p = config["profile"].get<std::string>();
    if (p.is_relative())
        p = base_dir / p;
    json merged = load_config_json(p);
    config.erase("profile");
    merged.merge_patch(config);
    return merged;
}

const std::set<std::string>& config_scalar_paths()
{
    static const std::set<std::string> paths = [] {
        std::set<std::string> out;
        collect_paths(defaults(), "", out);
        return out;
    }();
    return paths;
}

void set_config_path(json& config, const std::string& dotted, const json& value)
{
    if (dotted.empty())
        throw ConfigError("<path>", "empty parameter path");
    json* node = &config;
    std::size_t pos = 0;
    for (;;)
    {
        const std::size_t dot = dotted.find('.', pos);
        const std::string key = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty())
            throw ConfigError(dotted, "malformed parameter path");
        if (!node->is_object())
            *node = json::object();
        if (dot == std::string::npos)
        {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
    if (dotted == "rate.total_tps")
        config["rate"].erase("per_client_tps");
    else if (dotted == "rate.per_client_tps")
        config["rate"].erase("total_tps");
}

} // namespace eovsim
