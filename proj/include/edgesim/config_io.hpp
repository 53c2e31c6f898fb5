#pragma once

// Config files are `key = value` lines with dotted keys; `#` starts a
// comment. Unknown or duplicate keys are errors, missing keys take the
// defaults listed in config_keys(). Numeric ranges are written `lo..hi`.
// Relative file paths resolve against the config file's directory.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "edgesim/error.hpp"
#include "edgesim/topology.hpp"
#include "edgesim/types.hpp"
#include "edgesim/validate.hpp"
#include "edgesim/workload.hpp"

namespace edgesim {

using ConfigValues = std::map<std::string, std::string>;

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
};

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k = {
            {"horizon", "1000", "episode length T in steps"},
            {"seed", "0", "base random seed"},
            {"lambda", "0.17", "Poisson task arrival rate per client per step"},
            {"max_neighbors", "10", "observation padding width"},
            {"reward.r_u", "2", "utility reward"},
            {"reward.chi_wait", "20", "waiting-time weight"},
            {"reward.chi_comm", "20", "communication-time weight"},
            {"reward.chi_exc", "20", "execution-time weight"},
            {"reward.chi_o", "150", "overload weight"},
            {"reward.p_floor", "1e-06", "lower clamp of the overload probability"},
            {"channel.bandwidth_hz", "2000000", "default link bandwidth"},
            {"channel.noise_dbm", "-90", "noise power"},
            {"channel.gain_model", "free_space", "constant | free_space"},
            {"channel.gain_ref_db", "-30", "constant gain, or free-space gain at 1 m"},
            {"task.rho", "80000000", "instructions per task (value or lo..hi)"},
            {"task.alpha_in_mb", "150", "input size in decimal megabytes"},
            {"task.alpha_out_mb", "150", "output size in decimal megabytes"},
            {"task.alpha_in_bits", "", "input size in bits; overrides task.alpha_in_mb"},
            {"task.alpha_out_bits", "", "output size in bits; overrides task.alpha_out_mb"},
            {"task.xi", "1", "cycles per instruction"},
            {"task.delta", "100", "deadline in steps"},
            {"task.trace", "", "JSON-lines trace file; sampled uniformly when set"},
            {"task.trace_ref_freq", "10000000", "reference frequency for trace instruction counts"},
            {"topology.mode", "tiers", "tiers | clusters | file"},
            {"topology.transmit_power_dbm", "20", "transmit power of generated nodes"},
            {"topology.tiers.nodes", "10,10,10", "nodes per tier"},
            {"topology.tiers.frequency", "40000000,20000000,80000000", "per-core frequency per tier"},
            {"topology.tiers.cores", "1,1,2", "cores per tier"},
            {"topology.tiers.queue", "20,10,100", "queue capacity per tier"},
            {"topology.n_clusters", "1", "cluster count"},
            {"topology.sbc_pairs", "4", "SBC pairs per cluster"},
            {"topology.base_station_nodes", "3", "base-station nodes per cluster"},
            {"topology.shared_server", "true", "add one server shared by all clusters"},
            {"topology.file", "", "topology file for mode = file"},
        };
        const ClusterPlan plan;
        const std::pair<const char*, NodeTemplate> roles[] = {
            {"sbc", plan.sbc}, {"gateway", plan.gateway}, {"accelerator", plan.accelerator}, {"server", plan.server}};
        for (const auto& [role, t] : roles) {
            const std::string p = std::string("topology.") + role + ".";
            k.push_back({p + "tier", std::to_string(t.tier), "tier of the role"});
            k.push_back({p + "cores", std::to_string(t.num_cores), "cores of the role"});
            k.push_back({p + "frequency", detail::format_number(t.frequency), "per-core frequency of the role"});
            k.push_back({p + "queue", std::to_string(t.queue_capacity), "queue capacity of the role"});
        }
        return k;
    }();
    return keys;
}

inline bool is_config_key(const std::string& key) {
    for (const auto& k : config_keys())
        if (k.name == key) return true;
    return false;
}

/// Parses `key = value` text into raw values.
inline ConfigValues parse_config_values(std::istream& in, const std::string& name = "<config>") {
    ConfigValues values;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = name + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw Error(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!is_config_key(key)) throw Error(where + "unknown key: " + key);
        if (!values.emplace(key, value).second) throw Error(where + "duplicate key: " + key);
    }
    return values;
}

namespace detail {

class ValueReader {
public:
    ValueReader(const ConfigValues& values, std::filesystem::path base) : values_(values), base_(std::move(base)) {}

    std::string text(const std::string& key) const {
        auto it = values_.find(key);
        if (it != values_.end()) return it->second;
        for (const auto& k : config_keys())
            if (k.name == key) return k.default_value;
        throw Error("unknown key: " + key);
    }

    bool given(const std::string& key) const {
        auto it = values_.find(key);
        return it != values_.end() && !it->second.empty();
    }

    double number(const std::string& key) const { return wrap(key, [&] { return parse_number(text(key)); }); }
    int integer(const std::string& key) const { return wrap(key, [&] { return parse_int(text(key)); }); }

    std::uint64_t unsigned_integer(const std::string& key) const {
        return wrap(key, [&] {
            const std::string v = text(key);
            std::size_t used = 0;
            std::uint64_t x = 0;
            try {
                if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
                x = std::stoull(v, &used);
            } catch (const std::exception&) {
                throw Error("expected a non-negative integer, got '" + v + "'");
            }
            if (used != v.size()) throw Error("expected a non-negative integer, got '" + v + "'");
            return x;
        });
    }

    bool flag(const std::string& key) const { return wrap(key, [&] { return parse_flag(text(key)); }); }

    Range range(const std::string& key, double scale = 1.0) const {
        return wrap(key, [&] {
            const std::string v = text(key);
            const auto dots = v.find("..");
            Range r;
            if (dots == std::string::npos) {
                r = Range::constant(parse_number(v));
            } else {
                r = {parse_number(v.substr(0, dots)), parse_number(v.substr(dots + 2))};
            }
            r.lo *= scale;
            r.hi *= scale;
            return r;
        });
    }

    template <class T>
    std::vector<T> list(const std::string& key) const {
        return wrap(key, [&] {
            std::vector<T> out;
            std::stringstream ss(text(key));
            std::string item;
            while (std::getline(ss, item, ',')) {
                if constexpr (std::is_same_v<T, int>) out.push_back(parse_int(item));
                else out.push_back(parse_number(item));
            }
            return out;
        });
    }

    std::string path(const std::string& key) const {
        const std::string v = text(key);
        if (v.empty()) return v;
        std::filesystem::path p(v);
        if (p.is_relative()) p = base_ / p;
        return std::filesystem::absolute(p).lexically_normal().string();
    }

private:
    template <class F>
    static auto wrap(const std::string& key, F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const Error& e) {
            throw Error("key '" + key + "': " + e.what());
        }
    }

    const ConfigValues& values_;
    std::filesystem::path base_;
};

inline NodeTemplate read_role(const ValueReader& r, const std::string& role) {
    const std::string p = "topology." + role + ".";
    NodeTemplate t;
    t.tier = r.integer(p + "tier");
    t.num_cores = r.integer(p + "cores");
    t.frequency = r.number(p + "frequency");
    t.queue_capacity = r.integer(p + "queue");
    return t;
}

}  // namespace detail

/// Builds a config from raw values. Throws ConfigError listing every
/// violation when the result is not valid.
inline SimConfig config_from_values(const ConfigValues& values, const std::filesystem::path& base_dir = ".") {
    for (const auto& [k, _] : values)
        if (!is_config_key(k)) throw Error("unknown key: " + k);
    const detail::ValueReader r(values, base_dir);

    SimConfig c;
    c.horizon = r.integer("horizon");
    c.seed = r.unsigned_integer("seed");
    c.lambda = r.number("lambda");
    c.max_neighbors = r.integer("max_neighbors");

    c.reward.r_u = r.number("reward.r_u");
    c.reward.chi_wait = r.number("reward.chi_wait");
    c.reward.chi_comm = r.number("reward.chi_comm");
    c.reward.chi_exc = r.number("reward.chi_exc");
    c.reward.chi_o = r.number("reward.chi_o");
    c.reward.p_floor = r.number("reward.p_floor");

    c.channel.default_bandwidth = r.number("channel.bandwidth_hz");
    c.channel.noise_power = r.number("channel.noise_dbm");
    const std::string gm = r.text("channel.gain_model");
    if (gm == "constant") c.channel.gain.kind = GainKind::constant;
    else if (gm == "free_space") c.channel.gain.kind = GainKind::free_space;
    else throw Error("key 'channel.gain_model': expected constant or free_space, got '" + gm + "'");
    c.channel.gain.db = r.number("channel.gain_ref_db");

    c.task.rho = r.range("task.rho");
    c.task.alpha_in = r.given("task.alpha_in_bits") ? r.range("task.alpha_in_bits")
                                                    : r.range("task.alpha_in_mb", kBitsPerMegabyte);
    c.task.alpha_out = r.given("task.alpha_out_bits") ? r.range("task.alpha_out_bits")
                                                      : r.range("task.alpha_out_mb", kBitsPerMegabyte);
    c.task.xi = r.range("task.xi");
    c.task.delta = r.integer("task.delta");
    c.task.trace_ref_frequency = r.number("task.trace_ref_freq");
    c.task.trace_path = r.path("task.trace");
    if (!c.task.trace_path.empty()) c.task.trace = load_trace(c.task.trace_path, c.task.trace_ref_frequency);

    TopologySource& src = c.topology_source;
    src.transmit_power = r.number("topology.transmit_power_dbm");
    src.tiers.nodes = r.list<int>("topology.tiers.nodes");
    src.tiers.frequency = r.list<double>("topology.tiers.frequency");
    src.tiers.cores = r.list<int>("topology.tiers.cores");
    src.tiers.queue = r.list<int>("topology.tiers.queue");
    src.clusters.n_clusters = r.integer("topology.n_clusters");
    src.clusters.sbc_pairs = r.integer("topology.sbc_pairs");
    src.clusters.base_station_nodes = r.integer("topology.base_station_nodes");
    src.clusters.shared_server = r.flag("topology.shared_server");
    src.clusters.sbc = detail::read_role(r, "sbc");
    src.clusters.gateway = detail::read_role(r, "gateway");
    src.clusters.accelerator = detail::read_role(r, "accelerator");
    src.clusters.server = detail::read_role(r, "server");
    src.file = r.path("topology.file");

    const std::string mode = r.text("topology.mode");
    if (mode == "tiers") {
        src.mode = TopologyMode::tiers;
        c.topology = generate_tiered_topology(src.tiers, src.transmit_power, c.channel.default_bandwidth);
    } else if (mode == "clusters") {
        src.mode = TopologyMode::clusters;
        c.topology = generate_cluster_topology(src.clusters, src.transmit_power, c.channel.default_bandwidth);
    } else if (mode == "file") {
        src.mode = TopologyMode::file;
        if (src.file.empty()) throw Error("key 'topology.file': required when topology.mode = file");
        c.topology = load_topology(src.file, c.channel.default_bandwidth);
    } else {
        throw Error("key 'topology.mode': expected tiers, clusters or file, got '" + mode + "'");
    }

    if (auto v = validate_config(c); !v.empty()) throw ConfigError(std::move(v));
    return c;
}

/// Defaults only.
inline SimConfig default_config() { return config_from_values({}); }

inline SimConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".",
                              const std::string& name = "<config>") {
    return config_from_values(parse_config_values(in, name), base_dir);
}

inline SimConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    return parse_config(in, std::filesystem::path(path).parent_path(), path);
}

namespace detail {

inline std::string format_range(const Range& r, double scale = 1.0) {
    if (r.is_constant()) return format_number(r.lo / scale);
    return format_number(r.lo / scale) + ".." + format_number(r.hi / scale);
}

template <class T>
std::string format_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, int>) out += std::to_string(v[i]);
        else out += format_number(v[i]);
    }
    return out;
}

inline bool mb_exact(const Range& bits) {
    return bits.lo / kBitsPerMegabyte * kBitsPerMegabyte == bits.lo &&
           bits.hi / kBitsPerMegabyte * kBitsPerMegabyte == bits.hi;
}

}  // namespace detail

/// Raw values that reproduce `c` through config_from_values.
inline ConfigValues config_to_values(const SimConfig& c) {
    using detail::format_number;
    ConfigValues v;
    v["horizon"] = std::to_string(c.horizon);
    v["seed"] = std::to_string(c.seed);
    v["lambda"] = format_number(c.lambda);
    v["max_neighbors"] = std::to_string(c.max_neighbors);
    v["reward.r_u"] = format_number(c.reward.r_u);
    v["reward.chi_wait"] = format_number(c.reward.chi_wait);
    v["reward.chi_comm"] = format_number(c.reward.chi_comm);
    v["reward.chi_exc"] = format_number(c.reward.chi_exc);
    v["reward.chi_o"] = format_number(c.reward.chi_o);
    v["reward.p_floor"] = format_number(c.reward.p_floor);
    v["channel.bandwidth_hz"] = format_number(c.channel.default_bandwidth);
    v["channel.noise_dbm"] = format_number(c.channel.noise_power);
    v["channel.gain_model"] = c.channel.gain.kind == GainKind::constant ? "constant" : "free_space";
    v["channel.gain_ref_db"] = format_number(c.channel.gain.db);
    v["task.rho"] = detail::format_range(c.task.rho);
    if (detail::mb_exact(c.task.alpha_in)) v["task.alpha_in_mb"] = detail::format_range(c.task.alpha_in, kBitsPerMegabyte);
    else v["task.alpha_in_bits"] = detail::format_range(c.task.alpha_in);
    if (detail::mb_exact(c.task.alpha_out)) v["task.alpha_out_mb"] = detail::format_range(c.task.alpha_out, kBitsPerMegabyte);
    else v["task.alpha_out_bits"] = detail::format_range(c.task.alpha_out);
    v["task.xi"] = detail::format_range(c.task.xi);
    v["task.delta"] = std::to_string(c.task.delta);
    v["task.trace"] = c.task.trace_path;
    v["task.trace_ref_freq"] = format_number(c.task.trace_ref_frequency);

    const TopologySource& s = c.topology_source;
    v["topology.mode"] = s.mode == TopologyMode::tiers ? "tiers" : s.mode == TopologyMode::clusters ? "clusters" : "file";
    v["topology.transmit_power_dbm"] = format_number(s.transmit_power);
    v["topology.tiers.nodes"] = detail::format_list(s.tiers.nodes);
    v["topology.tiers.frequency"] = detail::format_list(s.tiers.frequency);
    v["topology.tiers.cores"] = detail::format_list(s.tiers.cores);
    v["topology.tiers.queue"] = detail::format_list(s.tiers.queue);
    v["topology.n_clusters"] = std::to_string(s.clusters.n_clusters);
    v["topology.sbc_pairs"] = std::to_string(s.clusters.sbc_pairs);
    v["topology.base_station_nodes"] = std::to_string(s.clusters.base_station_nodes);
    v["topology.shared_server"] = s.clusters.shared_server ? "true" : "false";
    const std::pair<const char*, const NodeTemplate*> roles[] = {{"sbc", &s.clusters.sbc},
                                                                 {"gateway", &s.clusters.gateway},
                                                                 {"accelerator", &s.clusters.accelerator},
                                                                 {"server", &s.clusters.server}};
    for (const auto& [role, t] : roles) {
        const std::string p = std::string("topology.") + role + ".";
        v[p + "tier"] = std::to_string(t->tier);
        v[p + "cores"] = std::to_string(t->num_cores);
        v[p + "frequency"] = format_number(t->frequency);
        v[p + "queue"] = std::to_string(t->queue_capacity);
    }
    v["topology.file"] = s.file;
    return v;
}

/// Writes every key in documented order.
inline void serialize_config(std::ostream& out, const SimConfig& c) {
    const ConfigValues v = config_to_values(c);
    for (const auto& k : config_keys()) {
        auto it = v.find(k.name);
        if (it == v.end()) continue;
        out << k.name << " = " << it->second << "\n";
    }
}

}  // namespace edgesim
