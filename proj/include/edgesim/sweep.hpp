#pragma once

// Experiment drivers: parameter sweeps producing summary CSV rows, and
// tabular Q-learning training/evaluation.

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "edgesim/config_io.hpp"
#include "edgesim/episode.hpp"
#include "edgesim/metrics.hpp"
#include "edgesim/policies.hpp"

namespace edgesim {

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

enum class SweepAxis { lambda, clusters };

struct SweepSpec {
    std::string scenario = "sweep";
    SweepAxis axis = SweepAxis::lambda;
    std::vector<double> values;
    std::vector<BaselineKind> policies;
    int episodes = 1;
    SimConfig base;
    int jobs = 1;
};

/// Copy of `config` rebuilt with `n` clusters. Requires a cluster topology.
inline SimConfig with_clusters(const SimConfig& config, int n) {
    if (config.topology_source.mode != TopologyMode::clusters)
        throw Error("cluster sweep needs topology.mode = clusters");
    SimConfig c = config;
    c.topology_source.clusters.n_clusters = n;
    c.topology = generate_cluster_topology(c.topology_source.clusters, c.topology_source.transmit_power,
                                           c.channel.default_bandwidth);
    if (auto v = validate_config(c); !v.empty()) throw ConfigError(std::move(v));
    return c;
}

inline int cluster_count(const SimConfig& c) {
    return c.topology_source.mode == TopologyMode::clusters ? c.topology_source.clusters.n_clusters : 0;
}

inline std::string policy_name(BaselineKind k) { return BaselinePolicy(k).name(); }

/// Configuration of one sweep cell.
inline SimConfig cell_config(const SweepSpec& spec, double value) {
    if (spec.axis == SweepAxis::lambda) {
        SimConfig c = spec.base;
        c.lambda = value;
        if (auto v = validate_config(c); !v.empty()) throw ConfigError(std::move(v));
        return c;
    }
    const int n = static_cast<int>(value);
    if (static_cast<double>(n) != value) throw Error("cluster counts must be integers");
    return with_clusters(spec.base, n);
}

/// Per-episode metrics of every cell, ordered value-major then policy.
inline std::vector<std::vector<EpisodeMetrics>> run_sweep_episodes(const SweepSpec& spec) {
    if (spec.values.empty()) throw Error("sweep needs at least one axis value");
    if (spec.policies.empty()) throw Error("sweep needs at least one policy");
    if (spec.episodes < 1) throw Error("sweep needs at least one episode per cell");

    std::vector<SimConfig> configs;
    for (double v : spec.values) configs.push_back(cell_config(spec, v));

    const std::size_t cells = spec.values.size() * spec.policies.size();
    const auto per_cell = static_cast<std::size_t>(spec.episodes);
    std::vector<std::vector<EpisodeMetrics>> out(cells, std::vector<EpisodeMetrics>(per_cell));
    parallel_for(cells * per_cell, spec.jobs, [&](std::size_t job) {
        const std::size_t cell = job / per_cell;
        const std::size_t ep = job % per_cell;
        const std::size_t vi = cell / spec.policies.size();
        const BaselineKind kind = spec.policies[cell % spec.policies.size()];
        SimConfig c = configs[vi];
        c.seed = spec.base.seed + ep;
        try {
            out[cell][ep] = run_baseline_episode(c, kind);
        } catch (const std::exception& e) {
            throw Error("sweep cell (value " + format_g6(spec.values[vi]) + ", policy " + policy_name(kind) +
                        ", episode " + std::to_string(ep) + ") failed: " + e.what());
        }
    });
    return out;
}

inline std::vector<SummaryRow> run_sweep(const SweepSpec& spec) {
    const auto episodes = run_sweep_episodes(spec);
    std::vector<SummaryRow> rows;
    for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
        for (std::size_t pi = 0; pi < spec.policies.size(); ++pi) {
            const SimConfig c = cell_config(spec, spec.values[vi]);
            SummaryRow r;
            r.scenario = spec.scenario;
            r.policy = policy_name(spec.policies[pi]);
            r.lambda = c.lambda;
            r.clusters = cluster_count(c);
            r.seed = spec.base.seed;
            r.summary = summarize(episodes[vi * spec.policies.size() + pi]);
            rows.push_back(std::move(r));
        }
    return rows;
}

// ---------------------------------------------------------------------------
// Q-learning

/// Evaluation episodes use seeds disjoint from training seeds.
inline constexpr std::uint64_t kEvalSeedOffset = 1'000'000;

using QTables = std::map<NodeId, QTable>;

struct TrainingResult {
    QTables tables;
    std::vector<double> curve;     // per-episode mean agent reward
    std::vector<double> epsilons;  // exploration rate per episode
};

inline TrainingResult train_q(const SimConfig& config, int episodes, const QLearnerParams& params) {
    if (episodes < 1) throw Error("training needs at least one episode");
    const int actions = 1 + config.max_neighbors;
    std::map<NodeId, TabularQPolicy*> learners;
    PolicyBundle bundle;
    for (NodeId a : config.topology.controllers()) {
        auto p = std::make_unique<TabularQPolicy>(params, actions, derive_seed(config.seed, static_cast<std::uint64_t>(a)));
        learners[a] = p.get();
        bundle.emplace(a, std::move(p));
    }
    TrainingResult result;
    for (int e = 0; e < episodes; ++e) {
        for (auto& [_, p] : bundle) p->begin_episode(e);
        result.epsilons.push_back(learners.begin()->second->epsilon());
        SimConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(e);
        result.curve.push_back(run_episode(c, bundle).mean_agent_reward());
    }
    for (auto& [a, p] : learners) result.tables.emplace(a, p->table());
    return result;
}

/// Evaluates frozen tables at the final exploration rate on the evaluation seed ladder.
inline std::vector<EpisodeMetrics> evaluate_q(const SimConfig& config, const QTables& tables,
                                              const QLearnerParams& params, int episodes) {
    std::vector<EpisodeMetrics> out;
    const int actions = 1 + config.max_neighbors;
    for (int e = 0; e < episodes; ++e) {
        SimConfig c = config;
        c.seed = config.seed + kEvalSeedOffset + static_cast<std::uint64_t>(e);
        PolicyBundle bundle;
        for (NodeId a : c.topology.controllers()) {
            auto p = std::make_unique<TabularQPolicy>(params, actions, derive_seed(c.seed, static_cast<std::uint64_t>(a)));
            if (auto it = tables.find(a); it != tables.end()) p->table() = it->second;
            p->set_evaluation();
            bundle.emplace(a, std::move(p));
        }
        out.push_back(run_episode(c, bundle));
    }
    return out;
}

/// Baseline episodes on the same evaluation seed ladder as evaluate_q.
inline std::vector<EpisodeMetrics> evaluate_baseline(const SimConfig& config, BaselineKind kind, int episodes) {
    std::vector<EpisodeMetrics> out;
    for (int e = 0; e < episodes; ++e) {
        SimConfig c = config;
        c.seed = config.seed + kEvalSeedOffset + static_cast<std::uint64_t>(e);
        out.push_back(run_baseline_episode(c, kind));
    }
    return out;
}

inline void write_learning_curve(std::ostream& out, const TrainingResult& r) {
    out << "episode,epsilon,mean_reward\n";
    for (std::size_t e = 0; e < r.curve.size(); ++e)
        out << e << "," << format_g6(r.epsilons[e]) << "," << format_g6(r.curve[e]) << "\n";
}

inline std::string qtable_path(const std::string& prefix, NodeId agent) {
    return prefix + "agent" + std::to_string(agent) + ".qtable";
}

inline void save_qtables(const std::string& prefix, const QTables& tables) {
    for (const auto& [a, t] : tables) {
        std::ofstream out(qtable_path(prefix, a));
        if (!out) throw Error("cannot write " + qtable_path(prefix, a));
        t.save(out);
    }
}

inline QTables load_qtables(const std::string& prefix, const SimConfig& config) {
    QTables tables;
    for (NodeId a : config.topology.controllers()) {
        std::ifstream in(qtable_path(prefix, a));
        if (!in) throw Error("cannot read " + qtable_path(prefix, a));
        tables.emplace(a, QTable::load(in, 1 + config.max_neighbors));
    }
    return tables;
}

}  // namespace edgesim
