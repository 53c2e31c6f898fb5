#pragma once

// Discrete-time engine. One call to advance_step runs these phases in order:
//
//   1. offload decisions, agents in ascending id
//   2. deliveries of transfers with arrive_at <= time + 1
//   3. processing: each worker spends N_phi * phi cycles, FIFO, with the
//      leftover budget rolling into the next queued task within the step
//   4. deadline drops for every resident task
//   5. new arrivals into controller staging buffers
//   6. time + 1, then every node re-announces its queue length
//
// Events inside step t that complete a task are stamped t + 1. Tasks sampled
// in phase 5 of step t carry created_at = t + 1, the first step at which an
// agent can act on them.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/comm.hpp"
#include "edgesim/error.hpp"
#include "edgesim/metrics.hpp"
#include "edgesim/random.hpp"
#include "edgesim/types.hpp"
#include "edgesim/validate.hpp"
#include "edgesim/workload.hpp"

namespace edgesim {

enum class TransferKind { offload, result_return };

struct TransferEvent {
    TaskInstance task;
    NodeId from = 0;
    NodeId to = 0;
    double payload = 0.0;  // bits
    double arrive_at = 0.0;
    TransferKind kind = TransferKind::offload;
    std::size_t chain_index = 0;  // position of `to` in the task's offload chain
    std::uint64_t seq = 0;

    friend bool operator==(const TransferEvent&, const TransferEvent&) = default;
};

enum class Outcome { completed, dropped_overflow, dropped_deadline };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::completed: return "completed";
        case Outcome::dropped_overflow: return "dropped_overflow";
        case Outcome::dropped_deadline: return "dropped_deadline";
    }
    return "?";
}

struct TerminalRecord {
    TaskId task_id = 0;
    Outcome outcome = Outcome::completed;
    int finished_at = 0;
    int response_time = 0;  // completed only
    NodeId origin = 0;

    friend bool operator==(const TerminalRecord&, const TerminalRecord&) = default;
};

struct OverloadEvent {
    NodeId node = 0;
    TaskId task_id = 0;
    int time = 0;

    friend bool operator==(const OverloadEvent&, const OverloadEvent&) = default;
};

/// The task an agent acted on this step, as it was before the action.
struct ActedTask {
    NodeId agent = 0;
    NodeId target = 0;
    TaskInstance task;
};

struct StepOutcome {
    std::vector<ActedTask> acted;
    std::vector<TerminalRecord> terminal;
    std::vector<OverloadEvent> overloads;
};

struct NodeState {
    std::deque<TaskInstance> queue;
    std::optional<TaskInstance> current;
    int announced_queue = 0;  // queue length at the last broadcast
    double cycles_consumed = 0.0;

    friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct SimState {
    SimConfig config;
    int time = 0;
    std::vector<NodeState> nodes;
    std::vector<std::deque<TaskInstance>> staging;  // indexed by node id
    std::vector<TransferEvent> in_transit;
    std::vector<std::vector<NodeId>> offload_neighbors;
    Rng rng;
    EpisodeMetrics counters;
    TaskId next_task_id = 0;
    std::uint64_t next_seq = 0;

    const Topology& topology() const noexcept { return config.topology; }
    bool done() const noexcept { return time >= config.horizon; }

    std::int64_t resident() const {
        std::int64_t n = static_cast<std::int64_t>(in_transit.size());
        for (const auto& ns : nodes) n += static_cast<std::int64_t>(ns.queue.size()) + (ns.current ? 1 : 0);
        for (const auto& st : staging) n += static_cast<std::int64_t>(st.size());
        return n;
    }

    /// generated == completed + dropped + resident.
    bool conserved() const {
        return counters.generated ==
               counters.completed + counters.dropped_overflow + counters.dropped_deadline + resident();
    }

    /// Snapshot of the episode counters with the current resident count.
    EpisodeMetrics metrics() const {
        EpisodeMetrics m = counters;
        m.resident_at_end = resident();
        return m;
    }

    friend bool operator==(const SimState&, const SimState&) = default;
};

inline SimState init(const SimConfig& config) {
    if (auto v = validate_config(config); !v.empty()) throw ConfigError(std::move(v));
    SimState s;
    s.config = config;
    const std::size_t n = config.topology.size();
    s.nodes.resize(n);
    s.staging.resize(n);
    s.offload_neighbors.resize(n);
    for (NodeId i = 0; i < static_cast<NodeId>(n); ++i)
        s.offload_neighbors[i] = config.topology.offload_neighbors(i);
    s.rng.seed(config.seed);
    s.counters.overloads.assign(n, 0);
    return s;
}

/// Draws this step's arrivals at `client`: a Poisson(lambda) count of tasks
/// with attributes from `tmpl`.
inline std::vector<TaskInstance> sample_arrivals(const NodeSpec& client, double lambda, const TaskTemplate& tmpl,
                                                 Rng& rng, int created_at, TaskId& next_id) {
    std::vector<TaskInstance> out;
    const int count = poisson(rng, lambda);
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        const TaskShape shape = sample_shape(tmpl, rng);
        TaskInstance t;
        t.id = next_id++;
        t.rho = shape.rho;
        t.alpha_in = shape.alpha_in;
        t.alpha_out = shape.alpha_out;
        t.xi = shape.xi;
        t.delta = tmpl.delta;
        t.origin_client = client.id;
        t.created_at = created_at;
        t.remaining_cycles = t.total_cycles();
        t.offload_chain = {client.id};
        out.push_back(std::move(t));
    }
    return out;
}

namespace detail {

inline void finalize(SimState& s, const TaskInstance& task, Outcome outcome, int finished_at, StepOutcome& sink) {
    TerminalRecord r;
    r.task_id = task.id;
    r.outcome = outcome;
    r.finished_at = finished_at;
    r.origin = task.origin_client;
    switch (outcome) {
        case Outcome::completed:
            r.response_time = finished_at - task.created_at;
            ++s.counters.completed;
            s.counters.response_times.push_back(r.response_time);
            break;
        case Outcome::dropped_overflow: ++s.counters.dropped_overflow; break;
        case Outcome::dropped_deadline: ++s.counters.dropped_deadline; break;
    }
    sink.terminal.push_back(r);
}

/// Completion honours the deadline: a result later than delta counts as a deadline drop.
inline void complete(SimState& s, const TaskInstance& task, int finished_at, StepOutcome& sink) {
    const bool late = finished_at - task.created_at > task.delta;
    finalize(s, task, late ? Outcome::dropped_deadline : Outcome::completed, finished_at, sink);
}

/// Adds a task to a worker queue, or drops it with an overload event.
inline void enqueue(SimState& s, NodeId node, TaskInstance task, StepOutcome& sink) {
    NodeState& ns = s.nodes[node];
    if (static_cast<int>(ns.queue.size()) < s.config.topology.nodes[node].queue_capacity) {
        ns.queue.push_back(std::move(task));
        return;
    }
    ++s.counters.overloads[node];
    sink.overloads.push_back({node, task.id, s.time});
    finalize(s, task, Outcome::dropped_overflow, s.time + 1, sink);
}

inline double hop_time(const SimState& s, NodeId from, NodeId to, double bits) {
    return comm::link_budget(s.config.topology, s.config.channel, from, to, bits).time;
}

inline void send(SimState& s, TaskInstance task, NodeId from, NodeId to, double bits, double depart,
                 TransferKind kind, std::size_t chain_index) {
    TransferEvent ev;
    ev.from = from;
    ev.to = to;
    ev.payload = bits;
    ev.arrive_at = depart + hop_time(s, from, to, bits);
    ev.kind = kind;
    ev.chain_index = chain_index;
    ev.seq = s.next_seq++;
    ev.task = std::move(task);
    s.in_transit.push_back(std::move(ev));
}

/// Starts the result's trip back along the offload chain, or completes the
/// task if it was processed at its origin.
inline void return_result(SimState& s, TaskInstance task, double depart, StepOutcome& sink) {
    const std::size_t last = task.offload_chain.size() - 1;
    if (last == 0) {
        complete(s, task, static_cast<int>(std::ceil(depart)), sink);
        return;
    }
    const NodeId from = task.offload_chain[last];
    const NodeId to = task.offload_chain[last - 1];
    const double bits = task.alpha_out;
    send(s, std::move(task), from, to, bits, depart, TransferKind::result_return, last - 1);
}

inline void check_target(const SimState& s, NodeId agent, NodeId target) {
    const auto& topo = s.config.topology;
    if (agent < 0 || agent >= static_cast<NodeId>(topo.size()) || !topo.nodes[agent].has_controller)
        throw IllegalAction("illegal action: node " + std::to_string(agent) + " has no controller");
    if (target == agent) return;
    const auto& nbrs = s.offload_neighbors[agent];
    if (!std::binary_search(nbrs.begin(), nbrs.end(), target))
        throw IllegalAction("illegal action: agent " + std::to_string(agent) + " cannot offload to node " +
                            std::to_string(target));
}

}  // namespace detail

/// Applies one offload decision to the head of `agent`'s staging buffer.
/// Returns the acted-on task, or nothing when staging is empty.
inline std::optional<ActedTask> apply_offload(SimState& s, NodeId agent, NodeId target, StepOutcome& sink) {
    detail::check_target(s, agent, target);
    auto& staging = s.staging[agent];
    if (staging.empty()) return std::nullopt;
    TaskInstance task = std::move(staging.front());
    staging.pop_front();
    ActedTask acted{agent, target, task};
    if (target == agent) {
        detail::enqueue(s, agent, std::move(task), sink);
    } else {
        task.offload_chain.push_back(target);
        const std::size_t idx = task.offload_chain.size() - 1;
        const double bits = task.alpha_in;
        detail::send(s, std::move(task), agent, target, bits, static_cast<double>(s.time), TransferKind::offload, idx);
    }
    sink.acted.push_back(acted);
    return acted;
}

inline std::optional<ActedTask> apply_offload(SimState& s, NodeId agent, NodeId target) {
    StepOutcome discard;
    return apply_offload(s, agent, target, discard);
}

namespace detail {

inline void deliver(SimState& s, StepOutcome& sink) {
    const double horizon = static_cast<double>(s.time) + 1.0;
    for (;;) {
        auto best = s.in_transit.end();
        for (auto it = s.in_transit.begin(); it != s.in_transit.end(); ++it) {
            if (it->arrive_at > horizon) continue;
            if (best == s.in_transit.end() || it->arrive_at < best->arrive_at ||
                (it->arrive_at == best->arrive_at && it->seq < best->seq))
                best = it;
        }
        if (best == s.in_transit.end()) return;
        TransferEvent ev = std::move(*best);
        s.in_transit.erase(best);

        if (ev.kind == TransferKind::offload) {
            enqueue(s, ev.to, std::move(ev.task), sink);
        } else if (ev.chain_index == 0) {
            complete(s, ev.task, static_cast<int>(std::ceil(ev.arrive_at)), sink);
        } else {
            const NodeId next = ev.task.offload_chain[ev.chain_index - 1];
            const double bits = ev.task.alpha_out;
            send(s, std::move(ev.task), ev.to, next, bits, ev.arrive_at, TransferKind::result_return,
                 ev.chain_index - 1);
        }
    }
}

inline void process(SimState& s, StepOutcome& sink) {
    const auto& topo = s.config.topology;
    const double finish_time = static_cast<double>(s.time) + 1.0;
    for (NodeId n = 0; n < static_cast<NodeId>(topo.size()); ++n) {
        NodeState& ns = s.nodes[n];
        double budget = topo.nodes[n].processing_rate();
        while (budget > 0.0) {
            if (!ns.current) {
                if (ns.queue.empty()) break;
                ns.current = std::move(ns.queue.front());
                ns.queue.pop_front();
            }
            TaskInstance& t = *ns.current;
            if (budget >= t.remaining_cycles) {
                budget -= t.remaining_cycles;
                ns.cycles_consumed += t.remaining_cycles;
                t.remaining_cycles = 0.0;
                TaskInstance done = std::move(t);
                ns.current.reset();
                return_result(s, std::move(done), finish_time, sink);
            } else {
                t.remaining_cycles -= budget;
                ns.cycles_consumed += budget;
                budget = 0.0;
            }
        }
    }
}

inline void enforce_deadlines(SimState& s, StepOutcome& sink) {
    const int now = s.time + 1;
    auto expired = [now](const TaskInstance& t) { return now - t.created_at > t.delta; };
    auto sweep = [&](std::deque<TaskInstance>& q) {
        for (auto it = q.begin(); it != q.end();) {
            if (expired(*it)) {
                finalize(s, *it, Outcome::dropped_deadline, now, sink);
                it = q.erase(it);
            } else {
                ++it;
            }
        }
    };
    for (auto& st : s.staging) sweep(st);
    for (auto& ns : s.nodes) {
        sweep(ns.queue);
        if (ns.current && expired(*ns.current)) {
            finalize(s, *ns.current, Outcome::dropped_deadline, now, sink);
            ns.current.reset();
        }
    }
    for (auto it = s.in_transit.begin(); it != s.in_transit.end();) {
        if (expired(it->task)) {
            finalize(s, it->task, Outcome::dropped_deadline, now, sink);
            it = s.in_transit.erase(it);
        } else {
            ++it;
        }
    }
}

/// Clients with a controller stage their own tasks; pure clients hand each
/// task to a uniformly chosen controller neighbor.
inline void generate_arrivals(SimState& s) {
    const auto& topo = s.config.topology;
    for (const NodeSpec& node : topo.nodes) {
        if (!node.is_client) continue;
        auto tasks = sample_arrivals(node, s.config.lambda, s.config.task, s.rng, s.time + 1, s.next_task_id);
        s.counters.generated += static_cast<std::int64_t>(tasks.size());
        for (auto& t : tasks) {
            NodeId controller = node.id;
            if (!node.has_controller) {
                std::vector<NodeId> eligible;
                for (NodeId j : topo.adjacency[node.id])
                    if (topo.nodes[j].has_controller) eligible.push_back(j);
                controller = eligible[uniform_index(s.rng, eligible.size())];
                t.offload_chain.push_back(controller);
            }
            s.staging[controller].push_back(std::move(t));
        }
    }
}

inline void broadcast(SimState& s) {
    for (auto& ns : s.nodes) ns.announced_queue = static_cast<int>(ns.queue.size());
}

}  // namespace detail

/// Joint action: controller node id -> target node id.
using JointTargets = std::map<NodeId, NodeId>;

inline StepOutcome advance_step(SimState& s, const JointTargets& joint) {
    if (s.done()) throw EpisodeFinished();
    const auto& topo = s.config.topology;
    std::size_t controllers = 0;
    for (const auto& n : topo.nodes)
        if (n.has_controller) {
            ++controllers;
            if (!joint.contains(n.id)) throw IllegalAction("incomplete joint action: missing agent " + std::to_string(n.id));
        }
    for (const auto& [agent, target] : joint) detail::check_target(s, agent, target);
    if (joint.size() != controllers) throw IllegalAction("joint action names non-controller nodes");

    StepOutcome out;
    for (const auto& [agent, target] : joint) apply_offload(s, agent, target, out);
    detail::deliver(s, out);
    detail::process(s, out);
    detail::enforce_deadlines(s, out);
    detail::generate_arrivals(s);
    ++s.time;
    detail::broadcast(s);
    return out;
}

/// Joint action keeping every task at its controller.
inline JointTargets all_local(const SimState& s) {
    JointTargets j;
    for (NodeId c : s.config.topology.controllers()) j[c] = c;
    return j;
}

}  // namespace edgesim
