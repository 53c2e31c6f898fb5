#pragma once

// Multi-agent environment over the engine: every controller node is an agent.
//
// Observation layout per agent, (1 + max_neighbors) blocks of
// kBlockWidth values followed by a staging flag:
//
//   [id, tier, Q, Qmax, N_phi * phi, x, y, bandwidth to node, transmit power]
//
// The first block describes the agent itself (bandwidth 0), then its offload
// neighbors in ascending id. Missing neighbors are filled with -1 and masked.
// Action index 0 keeps the task local; index k offloads to the k-th neighbor.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/engine.hpp"
#include "edgesim/error.hpp"
#include "edgesim/reward.hpp"
#include "edgesim/types.hpp"

namespace edgesim {

inline constexpr int kBlockWidth = 9;
inline constexpr double kPadValue = -1.0;

inline std::size_t observation_width(int max_neighbors) {
    return static_cast<std::size_t>(1 + max_neighbors) * kBlockWidth + 1;
}

struct Observation {
    std::vector<double> values;
    std::vector<std::uint8_t> action_mask;  // 1 = legal action, 0 = padded block

    bool has_task() const { return !values.empty() && values.back() > 0.5; }
    int num_actions() const { return static_cast<int>(action_mask.size()); }

    /// Observed queue length of block k.
    double queue(int k) const { return values[static_cast<std::size_t>(k) * kBlockWidth + 2]; }
    double capacity(int k) const { return values[static_cast<std::size_t>(k) * kBlockWidth + 3]; }

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Builds an agent's observation from announced (broadcast) state only.
inline Observation encode_observation(const SimState& s, NodeId agent) {
    const Topology& topo = s.config.topology;
    if (agent < 0 || agent >= static_cast<NodeId>(topo.size()) || !topo.nodes[agent].has_controller)
        throw Error("node " + std::to_string(agent) + " has no controller");
    const int width = s.config.max_neighbors;
    Observation obs;
    obs.values.reserve(observation_width(width));
    obs.action_mask.assign(static_cast<std::size_t>(1 + width), 0);

    auto push_block = [&](NodeId node, double bandwidth) {
        const NodeSpec& n = topo.nodes[node];
        obs.values.insert(obs.values.end(),
                          {static_cast<double>(n.id), static_cast<double>(n.tier),
                           static_cast<double>(s.nodes[node].announced_queue), static_cast<double>(n.queue_capacity),
                           n.processing_rate(), n.position.x, n.position.y, bandwidth, n.transmit_power});
    };

    push_block(agent, 0.0);
    obs.action_mask[0] = 1;
    const auto& nbrs = s.offload_neighbors[agent];
    for (int k = 0; k < width; ++k) {
        if (k < static_cast<int>(nbrs.size())) {
            const NodeId j = nbrs[k];
            push_block(j, topo.link_bandwidth(agent, j, s.config.channel.default_bandwidth));
            obs.action_mask[k + 1] = 1;
        } else {
            obs.values.insert(obs.values.end(), kBlockWidth, kPadValue);
        }
    }
    obs.values.push_back(s.staging[agent].empty() ? 0.0 : 1.0);
    return obs;
}

using Observations = std::map<NodeId, Observation>;
using JointAction = std::map<NodeId, int>;  // agent -> local action index

struct StepInfo {
    StepOutcome outcome;
    std::map<NodeId, RewardBreakdown> breakdowns;  // agents that acted on a task
};

struct StepResult {
    Observations observations;
    std::map<NodeId, double> rewards;
    bool done = false;
    StepInfo info;
};

class OffloadingEnv {
public:
    OffloadingEnv() = default;
    explicit OffloadingEnv(Potential potential) : potential_(std::move(potential)) {}

    void set_potential(Potential potential) { potential_ = std::move(potential); }

    Observations reset(const SimConfig& config) {
        state_.emplace(init(config));
        agents_ = config.topology.controllers();
        for (NodeId a : agents_) state_->counters.agent_rewards[a] = 0.0;
        return observe();
    }

    Observations reset(SimConfig config, std::uint64_t seed) {
        config.seed = seed;
        return reset(config);
    }

    Observations observe() const {
        Observations out;
        for (NodeId a : agents_) out.emplace(a, encode_observation(state(), a));
        return out;
    }

    /// Maps a local action index to a node id, or throws IllegalAction.
    NodeId target_of(NodeId agent, int index) const {
        const auto& nbrs = state().offload_neighbors.at(agent);
        if (index == 0) return agent;
        if (index < 0 || index > state().config.max_neighbors || index > static_cast<int>(nbrs.size()))
            throw IllegalAction("illegal action: agent " + std::to_string(agent) + " index " + std::to_string(index));
        return nbrs[static_cast<std::size_t>(index - 1)];
    }

    StepResult step(const JointAction& joint) {
        SimState& s = mutable_state();
        if (s.done()) throw EpisodeFinished();

        JointTargets targets;
        for (NodeId a : agents_) {
            auto it = joint.find(a);
            if (it == joint.end()) throw IllegalAction("incomplete joint action: missing agent " + std::to_string(a));
            targets[a] = target_of(a, it->second);
        }
        if (joint.size() != agents_.size()) throw IllegalAction("joint action names unknown agents");

        const std::vector<int> queues = announced_queues(s);
        const double before = potential_(s);
        StepResult result;
        result.info.outcome = advance_step(s, targets);
        const double after = potential_(s);

        for (NodeId a : agents_) result.rewards[a] = 0.0;
        const RewardContext ctx{s.config.topology, s.config.channel, s.config.reward, s.config.task.mean_cycles(),
                                queues};
        for (const ActedTask& acted : result.info.outcome.acted) {
            const RewardBreakdown r = compute_reward(ctx, acted.agent, acted.target, acted.task, before, after);
            result.rewards[acted.agent] = r.total;
            result.info.breakdowns[acted.agent] = r;
        }
        for (const auto& [a, r] : result.rewards) s.counters.agent_rewards[a] += r;

        result.done = s.done();
        result.observations = observe();
        return result;
    }

    const std::vector<NodeId>& agents() const noexcept { return agents_; }
    bool active() const noexcept { return state_.has_value(); }
    bool done() const { return state().done(); }

    const SimState& state() const {
        if (!state_) throw Error("environment not reset");
        return *state_;
    }

    EpisodeMetrics metrics() const { return state().metrics(); }

private:
    SimState& mutable_state() {
        if (!state_) throw Error("environment not reset");
        return *state_;
    }

    std::optional<SimState> state_;
    std::vector<NodeId> agents_;
    Potential potential_ = zero_potential;
};

}  // namespace edgesim
