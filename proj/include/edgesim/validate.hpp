#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "edgesim/comm.hpp"
#include "edgesim/types.hpp"

namespace edgesim {

namespace detail {

inline std::string node_tag(NodeId id) { return "node " + std::to_string(id); }

inline void check_range(std::vector<std::string>& out, const char* name, const Range& r,
                        double strict_min, bool inclusive_min) {
    const bool ok_lo = inclusive_min ? r.lo >= strict_min : r.lo > strict_min;
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !ok_lo || r.hi < r.lo)
        out.push_back(std::string("task.") + name + ": invalid range");
}

}  // namespace detail

/// Returns every violated invariant of `config`; empty when valid. Pure.
inline std::vector<std::string> validate_config(const SimConfig& config) {
    std::vector<std::string> out;
    const Topology& topo = config.topology;

    if (config.horizon < 1) out.push_back("horizon must be >= 1");
    if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) out.push_back("lambda must be >= 0");
    if (config.max_neighbors < 0) out.push_back("max_neighbors must be >= 0");

    const RewardWeights& w = config.reward;
    for (double v : {w.r_u, w.chi_wait, w.chi_comm, w.chi_exc, w.chi_o})
        if (!(v >= 0.0) || !std::isfinite(v)) {
            out.push_back("reward weights must be finite and >= 0");
            break;
        }
    if (!(w.p_floor > 0.0 && w.p_floor < 1.0)) out.push_back("reward.p_floor must lie in (0, 1)");

    const ChannelParams& ch = config.channel;
    if (!(ch.default_bandwidth > 0.0)) out.push_back("channel bandwidth must be > 0");
    if (!std::isfinite(ch.noise_power)) out.push_back("channel noise power must be finite");
    if (!std::isfinite(ch.gain.db)) out.push_back("channel gain must be finite");

    const TaskTemplate& t = config.task;
    if (t.from_trace()) {
        for (std::size_t i = 0; i < t.trace.size(); ++i) {
            const TaskShape& s = t.trace[i];
            if (!(s.rho > 0 && s.alpha_in > 0 && s.alpha_out > 0 && s.xi >= 1))
                out.push_back("trace shape " + std::to_string(i) + " violates task invariants");
        }
    } else {
        detail::check_range(out, "rho", t.rho, 0.0, false);
        detail::check_range(out, "alpha_in", t.alpha_in, 0.0, false);
        detail::check_range(out, "alpha_out", t.alpha_out, 0.0, false);
        detail::check_range(out, "xi", t.xi, 1.0, true);
    }
    if (t.delta <= 0) out.push_back("task.delta must be > 0");

    if (topo.nodes.empty()) out.push_back("topology has no nodes");
    if (topo.adjacency.size() != topo.nodes.size()) {
        out.push_back("adjacency size does not match node count");
        return out;
    }

    const auto n = static_cast<NodeId>(topo.nodes.size());
    std::vector<bool> is_target(topo.nodes.size(), false);
    std::size_t widest = 0;

    for (NodeId i = 0; i < n; ++i) {
        const NodeSpec& s = topo.nodes[i];
        const std::string tag = detail::node_tag(i);
        if (s.id != i) out.push_back(tag + ": id must equal its index");
        if (s.num_cores < 1) out.push_back(tag + ": num_cores must be >= 1");
        if (!(s.frequency > 0.0) || !std::isfinite(s.frequency)) out.push_back(tag + ": frequency must be > 0");
        if (s.queue_capacity < 0) out.push_back(tag + ": queue_capacity must be >= 0");
        if (!std::isfinite(s.transmit_power)) out.push_back(tag + ": transmit power must be finite");
        if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y))
            out.push_back(tag + ": position must be finite");

        for (NodeId j : topo.adjacency[i]) {
            if (j < 0 || j >= n) {
                out.push_back(tag + ": neighbor id out of range");
                continue;
            }
            if (j == i) out.push_back(tag + ": self loop");
            if (!topo.adjacent(j, i)) out.push_back(tag + ": neighbor relation not symmetric");
            const double bw = topo.link_bandwidth(i, j, ch.default_bandwidth);
            if (!(bw > 0.0)) out.push_back(tag + ": bandwidth to node " + std::to_string(j) + " must be > 0");
        }
        if (s.has_controller) {
            is_target[i] = true;
            const auto nbrs = topo.offload_neighbors(i);
            widest = std::max(widest, nbrs.size());
            for (NodeId j : nbrs)
                if (j >= 0 && j < n) is_target[j] = true;
        }
        if (s.is_client && !s.has_controller) {
            bool eligible = false;
            for (NodeId j : topo.adjacency[i])
                if (j >= 0 && j < n && topo.nodes[j].has_controller) eligible = true;
            if (!eligible) out.push_back(tag + ": client without an eligible controller neighbor");
        }
    }

    for (NodeId i = 0; i < n; ++i)
        if (is_target[i] && topo.nodes[i].queue_capacity == 0)
            out.push_back(detail::node_tag(i) + ": zero-capacity worker");

    if (static_cast<std::size_t>(std::max(config.max_neighbors, 0)) < widest)
        out.push_back("observation width too small: max_neighbors = " + std::to_string(config.max_neighbors) +
                      " but a controller has " + std::to_string(widest) + " offload neighbors");

    // Every link a task or result can cross must have a usable channel.
    if (out.empty()) {
        for (NodeId i = 0; i < n; ++i)
            for (NodeId j : topo.adjacency[i]) {
                const std::string tag = "link " + std::to_string(i) + "->" + std::to_string(j);
                try {
                    const auto lb = comm::link_budget(topo, ch, i, j, 1.0);
                    if (!(lb.rate > 0.0)) out.push_back(tag + ": unusable channel");
                } catch (const Error& e) {
                    out.push_back(tag + ": " + e.what());
                }
            }
    }
    return out;
}

}  // namespace edgesim
