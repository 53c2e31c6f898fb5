#pragma once

// Topology builders (tiered layout, urban-sensing clusters) and the
// line-oriented topology file format:
//
//   # comment
//   node <id> tier=<k> cores=<n> freq=<cycles/step> queue=<cap> power=<dBm> x=<m> y=<m> client=<0|1> controller=<0|1>
//   link <a> <b> [bw=<Hz>] [bw_back=<Hz>]
//
// Node lines must appear in id order starting at 0. A link without `bw`
// uses the channel's default bandwidth.

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "edgesim/error.hpp"
#include "edgesim/types.hpp"

namespace edgesim {

/// Tiered layout: tier k node j sits at (10 j, 100 k). Nodes in a tier form a
/// ring; node j of tier k links to node j mod n_{k+1} of the next tier.
/// Tier-0 nodes are clients; every node runs a controller.
inline Topology generate_tiered_topology(const TierPlan& plan, double transmit_power, double bandwidth) {
    const std::size_t tiers = plan.nodes.size();
    if (plan.frequency.size() != tiers || plan.cores.size() != tiers || plan.queue.size() != tiers)
        throw Error("tier plan vectors must have equal length");

    Topology topo;
    std::vector<std::vector<NodeId>> by_tier(tiers);
    for (std::size_t k = 0; k < tiers; ++k) {
        for (int j = 0; j < plan.nodes[k]; ++j) {
            NodeSpec s;
            s.tier = static_cast<int>(k);
            s.num_cores = plan.cores[k];
            s.frequency = plan.frequency[k];
            s.queue_capacity = plan.queue[k];
            s.transmit_power = transmit_power;
            s.position = {10.0 * j, 100.0 * static_cast<double>(k)};
            s.is_client = (k == 0);
            s.has_controller = true;
            by_tier[k].push_back(static_cast<NodeId>(topo.size()));
            topo.add_node(s);
        }
    }
    for (std::size_t k = 0; k < tiers; ++k) {
        const auto& ring = by_tier[k];
        const std::size_t m = ring.size();
        if (m >= 2)
            for (std::size_t j = 0; j < m; ++j)
                if (m > 2 || j == 0) topo.link(ring[j], ring[(j + 1) % m], bandwidth);
        if (k + 1 < tiers && !by_tier[k + 1].empty())
            for (std::size_t j = 0; j < m; ++j)
                topo.link(ring[j], by_tier[k + 1][j % by_tier[k + 1].size()], bandwidth);
    }
    return topo;
}

namespace detail {

inline NodeSpec from_template(const NodeTemplate& t, double power, Position pos, bool client) {
    NodeSpec s;
    s.tier = t.tier;
    s.num_cores = t.num_cores;
    s.frequency = t.frequency;
    s.queue_capacity = t.queue_capacity;
    s.transmit_power = power;
    s.position = pos;
    s.is_client = client;
    s.has_controller = true;
    return s;
}

}  // namespace detail

/// Urban-sensing clusters. Each cluster holds `sbc_pairs` pairs of SBCs and a
/// base station (one gateway plus accelerators). SBCs link to their partner
/// and to every base-station node of the cluster; the shared server links to
/// every cluster gateway. Cluster centers are 100 m apart, members sit on a
/// 10 m ring around the center.
inline Topology generate_cluster_topology(const ClusterPlan& plan, double transmit_power, double bandwidth) {
    if (plan.n_clusters < 1 || plan.sbc_pairs < 0 || plan.base_station_nodes < 0)
        throw Error("invalid cluster plan");

    Topology topo;
    std::vector<NodeId> gateways;
    const int members = 2 * plan.sbc_pairs + plan.base_station_nodes;
    for (int c = 0; c < plan.n_clusters; ++c) {
        const Position center{100.0 * c, 0.0};
        auto ring_pos = [&](int k) {
            const double angle = 2.0 * std::numbers::pi * k / std::max(members, 1);
            return Position{center.x + 10.0 * std::cos(angle), center.y + 10.0 * std::sin(angle)};
        };
        std::vector<NodeId> sbcs;
        std::vector<NodeId> station;
        for (int k = 0; k < 2 * plan.sbc_pairs; ++k) {
            sbcs.push_back(static_cast<NodeId>(topo.size()));
            topo.add_node(detail::from_template(plan.sbc, transmit_power, ring_pos(k), true));
        }
        for (int k = 0; k < plan.base_station_nodes; ++k) {
            station.push_back(static_cast<NodeId>(topo.size()));
            const NodeTemplate& t = k == 0 ? plan.gateway : plan.accelerator;
            topo.add_node(detail::from_template(t, transmit_power, ring_pos(2 * plan.sbc_pairs + k), false));
        }
        for (int p = 0; p < plan.sbc_pairs; ++p) topo.link(sbcs[2 * p], sbcs[2 * p + 1], bandwidth);
        for (NodeId s : sbcs)
            for (NodeId b : station) topo.link(s, b, bandwidth);
        if (!station.empty()) gateways.push_back(station.front());
    }
    if (plan.shared_server) {
        const NodeId server = static_cast<NodeId>(topo.size());
        const Position pos{100.0 * (plan.n_clusters - 1) / 2.0, 100.0};
        topo.add_node(detail::from_template(plan.server, transmit_power, pos, false));
        for (NodeId g : gateways) topo.link(server, g, bandwidth);
    }
    return topo;
}

namespace detail {

inline bool parse_flag(const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw Error("expected 0/1, got '" + v + "'");
}

inline double parse_number(const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw Error("expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw Error("expected a number, got '" + v + "'");
    return d;
}

inline int parse_int(const std::string& v) {
    std::size_t used = 0;
    long long d = 0;
    try {
        d = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw Error("expected an integer, got '" + v + "'");
    }
    if (used != v.size()) throw Error("expected an integer, got '" + v + "'");
    return static_cast<int>(d);
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses topology text. Links without an explicit bandwidth use `default_bandwidth`.
inline Topology parse_topology(std::istream& in, double default_bandwidth, const std::string& name = "<topology>") {
    Topology topo;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) -> Error {
        return Error(name + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        try {
            if (kind == "node") {
                std::string id_text;
                if (!(ls >> id_text)) throw fail("node line needs an id");
                const int id = detail::parse_int(id_text);
                if (id != static_cast<int>(topo.size()))
                    throw fail("node ids must be dense and in order, expected " + std::to_string(topo.size()));
                NodeSpec s;
                std::string kv;
                while (ls >> kv) {
                    const auto eq = kv.find('=');
                    if (eq == std::string::npos) throw fail("expected key=value, got '" + kv + "'");
                    const std::string k = kv.substr(0, eq);
                    const std::string v = kv.substr(eq + 1);
                    if (k == "tier") s.tier = detail::parse_int(v);
                    else if (k == "cores") s.num_cores = detail::parse_int(v);
                    else if (k == "freq") s.frequency = detail::parse_number(v);
                    else if (k == "queue") s.queue_capacity = detail::parse_int(v);
                    else if (k == "power") s.transmit_power = detail::parse_number(v);
                    else if (k == "x") s.position.x = detail::parse_number(v);
                    else if (k == "y") s.position.y = detail::parse_number(v);
                    else if (k == "client") s.is_client = detail::parse_flag(v);
                    else if (k == "controller") s.has_controller = detail::parse_flag(v);
                    else throw fail("unknown node key: " + k);
                }
                topo.add_node(s);
            } else if (kind == "link") {
                std::string a_text, b_text;
                if (!(ls >> a_text >> b_text)) throw fail("link line needs two node ids");
                const int a = detail::parse_int(a_text);
                const int b = detail::parse_int(b_text);
                if (a < 0 || b < 0 || a >= static_cast<int>(topo.size()) || b >= static_cast<int>(topo.size()))
                    throw fail("link references an undeclared node");
                if (a == b) throw fail("self link");
                double bw = default_bandwidth;
                std::optional<double> back;
                std::string kv;
                while (ls >> kv) {
                    const auto eq = kv.find('=');
                    if (eq == std::string::npos) throw fail("expected key=value, got '" + kv + "'");
                    const std::string k = kv.substr(0, eq);
                    const std::string v = kv.substr(eq + 1);
                    if (k == "bw") bw = detail::parse_number(v);
                    else if (k == "bw_back") back = detail::parse_number(v);
                    else throw fail("unknown link key: " + k);
                }
                topo.link(a, b, bw, back);
            } else {
                throw fail("unknown record '" + kind + "'");
            }
        } catch (const Error& e) {
            const std::string what = e.what();
            if (what.rfind(name + ":", 0) == 0) throw;
            throw fail(what);
        }
    }
    return topo;
}

inline Topology load_topology(const std::string& path, double default_bandwidth) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open topology file: " + path);
    return parse_topology(in, default_bandwidth, path);
}

inline void write_topology(std::ostream& out, const Topology& topo) {
    using detail::format_number;
    out << "# nodes: " << topo.size() << "\n";
    for (const auto& s : topo.nodes) {
        out << "node " << s.id << " tier=" << s.tier << " cores=" << s.num_cores
            << " freq=" << format_number(s.frequency) << " queue=" << s.queue_capacity
            << " power=" << format_number(s.transmit_power) << " x=" << format_number(s.position.x)
            << " y=" << format_number(s.position.y) << " client=" << (s.is_client ? 1 : 0)
            << " controller=" << (s.has_controller ? 1 : 0) << "\n";
    }
    for (NodeId a = 0; a < static_cast<NodeId>(topo.size()); ++a)
        for (NodeId b : topo.adjacency[a]) {
            if (b < a) continue;
            const double fwd = topo.bandwidth.at({a, b});
            const double back = topo.bandwidth.at({b, a});
            out << "link " << a << " " << b << " bw=" << format_number(fwd);
            if (back != fwd) out << " bw_back=" << format_number(back);
            out << "\n";
        }
}

}  // namespace edgesim
