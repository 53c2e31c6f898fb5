#pragma once

// Per-agent reward for one offload decision:
//
//   R = r_u - (D + chi_O * O) + F
//   D = chi_wait * T_wait + chi_comm * T_comm + chi_exc * T_exc
//   O = -ln(p) / 3,  p = clamp((Qmax_a - Q_a) / Qmax_a, p_floor, 1)
//   F = Xi(s') - Xi(s)
//
// Queue lengths come from the snapshot the agent observed before acting.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "edgesim/comm.hpp"
#include "edgesim/engine.hpp"
#include "edgesim/error.hpp"
#include "edgesim/types.hpp"

namespace edgesim {

struct RewardContext {
    const Topology& topology;
    const ChannelParams& channel;
    const RewardWeights& weights;
    double mean_task_cycles;       // converts cycle budgets to task units in Q'
    std::span<const int> queues;   // queue lengths by node id
};

struct DelayTerms {
    double t_wait = 0.0;
    double t_comm = 0.0;
    double t_exc = 0.0;
    double weighted = 0.0;
};

struct OverloadTerms {
    double p = 1.0;
    double expected_queue = 0.0;
    double cost = 0.0;
};

struct RewardBreakdown {
    double r_u = 0.0;
    double t_wait = 0.0;
    double t_comm = 0.0;
    double t_exc = 0.0;
    double delay = 0.0;
    double p = 1.0;
    double overload = 0.0;
    double expected_queue = 0.0;
    double shaping = 0.0;
    double total = 0.0;
};

inline DelayTerms compute_delay(const RewardContext& ctx, NodeId agent, NodeId target, const TaskInstance& task) {
    const NodeSpec& self = ctx.topology.nodes.at(agent);
    const NodeSpec& dest = ctx.topology.nodes.at(target);
    const double rate_self = self.processing_rate();
    const double rate_dest = dest.processing_rate();
    const bool remote = target != agent;

    DelayTerms d;
    d.t_wait = ctx.queues[agent] / rate_self;
    if (remote) d.t_wait += ctx.queues[target] / rate_dest;
    if (remote) d.t_comm = comm::link_budget(ctx.topology, ctx.channel, agent, target, task.alpha_out).time;
    const double cycles = task.rho * task.xi;
    d.t_exc = cycles / rate_dest - cycles / rate_self;
    const RewardWeights& w = ctx.weights;
    d.weighted = w.chi_wait * d.t_wait + w.chi_comm * d.t_comm + w.chi_exc * d.t_exc;
    return d;
}

inline OverloadTerms compute_overload(const RewardContext& ctx, NodeId target) {
    const NodeSpec& dest = ctx.topology.nodes.at(target);
    const int capacity = dest.queue_capacity;
    if (capacity <= 0) throw Error("degenerate capacity");
    const double q = ctx.queues[target];
    const double qmax = capacity;

    OverloadTerms o;
    const double drain = dest.processing_rate() / ctx.mean_task_cycles;
    o.expected_queue = std::min(std::max(0.0, q - drain) + 1.0, qmax);
    const double raw = std::max(0.0, (qmax - q) / qmax);
    o.p = std::clamp(raw, ctx.weights.p_floor, 1.0);
    o.cost = o.p < 1.0 ? -std::log(o.p) / 3.0 : 0.0;
    return o;
}

inline RewardBreakdown compute_reward(const RewardContext& ctx, NodeId agent, NodeId target, const TaskInstance& task,
                                      double potential_before = 0.0, double potential_after = 0.0) {
    const DelayTerms d = compute_delay(ctx, agent, target, task);
    const OverloadTerms o = compute_overload(ctx, target);
    RewardBreakdown r;
    r.r_u = ctx.weights.r_u;
    r.t_wait = d.t_wait;
    r.t_comm = d.t_comm;
    r.t_exc = d.t_exc;
    r.delay = d.weighted;
    r.p = o.p;
    r.overload = o.cost;
    r.expected_queue = o.expected_queue;
    r.shaping = potential_after - potential_before;
    r.total = r.r_u - (r.delay + ctx.weights.chi_o * r.overload) + r.shaping;
    return r;
}

/// Potential function over engine states, for reward shaping.
using Potential = std::function<double(const SimState&)>;

inline double zero_potential(const SimState&) { return 0.0; }

/// Negative total queue occupancy across all workers.
inline double negative_occupancy(const SimState& s) {
    double total = 0.0;
    for (const auto& ns : s.nodes) total += static_cast<double>(ns.queue.size()) + (ns.current ? 1.0 : 0.0);
    return -total;
}

/// Queue lengths as last announced, indexed by node id.
inline std::vector<int> announced_queues(const SimState& s) {
    std::vector<int> q;
    q.reserve(s.nodes.size());
    for (const auto& ns : s.nodes) q.push_back(ns.announced_queue);
    return q;
}

}  // namespace edgesim
