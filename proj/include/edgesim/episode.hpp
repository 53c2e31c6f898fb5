#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "edgesim/env.hpp"
#include "edgesim/policies.hpp"
#include "edgesim/random.hpp"

namespace edgesim {

/// One policy per controller node.
using PolicyBundle = std::map<NodeId, std::unique_ptr<Policy>>;

inline BaselineKind parse_baseline(const std::string& name) {
    if (name == "local") return BaselineKind::local;
    if (name == "random") return BaselineKind::random;
    if (name == "least_queue") return BaselineKind::least_queue;
    throw Error("unknown policy: " + name + " (expected local, random or least_queue)");
}

/// Baseline policies for every agent, each seeded from the config seed and its node id.
inline PolicyBundle make_baseline_bundle(BaselineKind kind, const SimConfig& config) {
    PolicyBundle bundle;
    for (NodeId a : config.topology.controllers())
        bundle.emplace(a, std::make_unique<BaselinePolicy>(kind, derive_seed(config.seed, static_cast<std::uint64_t>(a))));
    return bundle;
}

/// Called after every step; useful for invariant checks and tracing.
using StepObserver = std::function<void(const SimState&, const StepResult&)>;

/// Runs one full episode: observe, act, step until the horizon.
inline EpisodeMetrics run_episode(const SimConfig& config, PolicyBundle& policies, const StepObserver& observer = {},
                                  Potential potential = zero_potential) {
    OffloadingEnv env(std::move(potential));
    Observations obs = env.reset(config);
    for (NodeId a : env.agents())
        if (!policies.contains(a)) throw Error("no policy for agent " + std::to_string(a));
    for (;;) {
        JointAction joint;
        for (NodeId a : env.agents()) joint[a] = policies.at(a)->act(obs.at(a));
        StepResult res = env.step(joint);
        for (NodeId a : env.agents())
            policies.at(a)->feedback(obs.at(a), joint.at(a), res.rewards.at(a), res.observations.at(a), res.done);
        if (observer) observer(env.state(), res);
        obs = std::move(res.observations);
        if (res.done) break;
    }
    return env.metrics();
}

inline EpisodeMetrics run_baseline_episode(const SimConfig& config, BaselineKind kind) {
    PolicyBundle bundle = make_baseline_bundle(kind, config);
    return run_episode(config, bundle);
}

}  // namespace edgesim
