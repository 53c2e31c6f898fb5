#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "edgesim/edgesim.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace edgesim;

inline NodeSpec node(double freq, int queue, double x, double y = 0.0, int cores = 1, bool client = false,
                     bool controller = true) {
    NodeSpec n;
    n.num_cores = cores;
    n.frequency = freq;
    n.queue_capacity = queue;
    n.position = {x, y};
    n.is_client = client;
    n.has_controller = controller;
    return n;
}

/// Config around a hand-built topology, no arrivals unless lambda is set.
inline SimConfig config_with(Topology topo, double lambda = 0.0, int horizon = 100) {
    SimConfig c = default_config();
    c.topology = std::move(topo);
    c.topology_source.mode = TopologyMode::file;
    c.lambda = lambda;
    c.horizon = horizon;
    return c;
}

/// Client 0 linked to two workers (1 slower, 2 faster).
inline SimConfig three_node(double lambda = 0.0, int horizon = 100) {
    Topology t;
    t.add_node(node(4e7, 20, 0, 0, 1, true));
    t.add_node(node(4e7, 10, 10, 0));
    t.add_node(node(8e7, 10, 0, 10));
    t.link(0, 1, 2e6);
    t.link(0, 2, 2e6);
    t.link(1, 2, 2e6);
    return config_with(std::move(t), lambda, horizon);
}

inline TaskInstance task(TaskId id, NodeId origin, double rho = 8e7, int created_at = 0, int delta = 100) {
    TaskInstance t;
    t.id = id;
    t.rho = rho;
    t.alpha_in = 1.2e9;
    t.alpha_out = 1.2e9;
    t.xi = 1.0;
    t.delta = delta;
    t.origin_client = origin;
    t.created_at = created_at;
    t.remaining_cycles = t.total_cycles();
    t.offload_chain = {origin};
    return t;
}

/// Random small network, queue snapshot and task for reward cross-checks.
struct RewardCase {
    SimConfig config;
    std::vector<int> queues;
    TaskInstance task;
    NodeId target = 0;
    double before = 0.0, after = 0.0;

    RewardBreakdown library() const {
        const RewardContext ctx{config.topology, config.channel, config.reward, config.task.mean_cycles(), queues};
        return compute_reward(ctx, 0, target, task, before, after);
    }

    oracle::Reward reference() const {
        const Topology& t = config.topology;
        auto as_oracle = [](const NodeSpec& s) {
            return oracle::Node{double(s.num_cores), s.frequency, double(s.queue_capacity), s.position.x,
                                s.position.y, s.transmit_power};
        };
        const oracle::Params w{config.reward.r_u, config.reward.chi_wait, config.reward.chi_comm,
                               config.reward.chi_exc, config.reward.chi_o, config.reward.p_floor,
                               config.channel.noise_power, config.channel.gain.kind == GainKind::free_space,
                               config.channel.gain.db, config.task.mean_cycles()};
        const double bw = target == 0 ? 0.0 : t.link_bandwidth(0, target, 0.0);
        return oracle::reward(as_oracle(t.nodes[0]), queues[0], as_oracle(t.nodes[target]), queues[target],
                              target != 0, bw, {task.rho, task.alpha_out, task.xi}, w, after - before);
    }
};

inline RewardCase random_reward_case(Rng& rng) {
    RewardCase rc;
    Topology t;
    const int n = 2 + static_cast<int>(uniform_index(rng, 4));
    for (int i = 0; i < n; ++i) {
        NodeSpec s = node(uniform(rng, 1e6, 1e8), 1 + static_cast<int>(uniform_index(rng, 30)), uniform(rng, -50, 50),
                          uniform(rng, -50, 50), 1 + static_cast<int>(uniform_index(rng, 8)), i == 0);
        s.transmit_power = uniform(rng, 0, 30);
        t.add_node(s);
    }
    for (int i = 1; i < n; ++i) t.link(0, i, uniform(rng, 1e5, 1e7), uniform(rng, 1e5, 1e7));
    SimConfig& c = rc.config;
    c = config_with(t);
    c.reward = {uniform(rng, 0, 5),   uniform(rng, 0, 30),  uniform(rng, 0, 30),
                uniform(rng, 0, 30),  uniform(rng, 0, 200), uniform(rng, 1e-9, 1e-2)};
    const bool fs = uniform_index(rng, 2) == 0;
    c.channel.gain = {fs ? GainKind::free_space : GainKind::constant, uniform(rng, -40, -10)};
    c.channel.noise_power = uniform(rng, -100, -80);
    c.task.rho = Range{1e6, 1e8};
    for (int i = 0; i < n; ++i)
        rc.queues.push_back(static_cast<int>(uniform_index(rng, t.nodes[i].queue_capacity + 2)));
    rc.task = task(0, 0, uniform(rng, 1e6, 1e9));
    rc.task.xi = uniform(rng, 1, 4);
    rc.task.alpha_out = uniform(rng, 1e5, 1e9);
    rc.target = static_cast<NodeId>(uniform_index(rng, n));
    rc.before = uniform(rng, -10, 10);
    rc.after = uniform(rng, -10, 10);
    return rc;
}

/// Largest absolute difference between the library and the reference over every term.
inline double reward_discrepancy(const RewardCase& rc) {
    const RewardBreakdown got = rc.library();
    const oracle::Reward want = rc.reference();
    const double diffs[] = {got.t_wait - want.t_wait, got.t_comm - want.t_comm, got.t_exc - want.t_exc,
                            got.delay - want.d,       got.p - want.p,           got.overload - want.o,
                            got.expected_queue - want.q_next, got.total - want.total};
    double worst = 0.0;
    for (double d : diffs) worst = std::max(worst, std::abs(d));
    return worst;
}

}  // namespace fixtures
