#pragma once

// Domain types shared by every part of the simulator.
//
// Unit canon: time in steps (1 step = 1 s), data in bits, processor
// frequency in cycles per step, power and gains in dB/dBm.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace edgesim {

using NodeId = int;
using TaskId = std::int64_t;

/// Decimal megabytes to bits.
inline constexpr double kBitsPerMegabyte = 8e6;

inline constexpr double megabytes_to_bits(double mb) noexcept { return mb * kBitsPerMegabyte; }
inline constexpr double bits_to_megabytes(double bits) noexcept { return bits / kBitsPerMegabyte; }

struct Position {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

/// One indivisible computational task.
struct TaskInstance {
    TaskId id = 0;
    double rho = 0.0;        // instructions
    double alpha_in = 0.0;   // bits
    double alpha_out = 0.0;  // bits
    double xi = 1.0;         // cycles per instruction
    int delta = 0;           // deadline, steps
    NodeId origin_client = 0;
    int created_at = 0;
    double remaining_cycles = 0.0;
    std::vector<NodeId> offload_chain;

    double total_cycles() const noexcept { return rho * xi; }
    double remaining_instructions() const noexcept { return remaining_cycles / xi; }
    double consumed_cycles() const noexcept { return total_cycles() - remaining_cycles; }
    NodeId location() const noexcept { return offload_chain.back(); }

    friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

/// Static capabilities of a node.
struct NodeSpec {
    NodeId id = 0;
    int tier = 0;
    int num_cores = 1;
    double frequency = 0.0;  // cycles per step, per core
    int queue_capacity = 0;
    double transmit_power = 20.0;  // dBm
    Position position;
    bool is_client = false;
    bool has_controller = false;

    double processing_rate() const noexcept { return num_cores * frequency; }

    /// Pure clients only generate tasks; they hold no queue and are never offload targets.
    bool is_worker() const noexcept { return has_controller || !is_client; }

    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

enum class GainKind { constant, free_space };

struct GainModel {
    GainKind kind = GainKind::free_space;
    double db = -30.0;  // constant gain, or reference gain at 1 m

    friend bool operator==(const GainModel&, const GainModel&) = default;
};

struct ChannelParams {
    double default_bandwidth = 2e6;  // Hz; used for links without an explicit entry
    double noise_power = -90.0;      // dBm
    GainModel gain;

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct RewardWeights {
    double r_u = 2.0;
    double chi_wait = 20.0;
    double chi_comm = 20.0;
    double chi_exc = 20.0;
    double chi_o = 150.0;
    double p_floor = 1e-6;

    friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

/// Network graph. Node ids are dense indices 0..n-1. Adjacency is symmetric,
/// bandwidth is keyed by ordered pair.
struct Topology {
    std::vector<NodeSpec> nodes;
    std::vector<std::vector<NodeId>> adjacency;
    std::map<std::pair<NodeId, NodeId>, double> bandwidth;

    std::size_t size() const noexcept { return nodes.size(); }

    void add_node(NodeSpec spec) {
        spec.id = static_cast<NodeId>(nodes.size());
        nodes.push_back(spec);
        adjacency.emplace_back();
    }

    /// Adds a symmetric link. Bandwidth entries are directed; `back` defaults to `forward`.
    void link(NodeId a, NodeId b, double forward, std::optional<double> back = std::nullopt) {
        auto insert_sorted = [](std::vector<NodeId>& v, NodeId x) {
            auto it = std::lower_bound(v.begin(), v.end(), x);
            if (it == v.end() || *it != x) v.insert(it, x);
        };
        insert_sorted(adjacency.at(a), b);
        insert_sorted(adjacency.at(b), a);
        bandwidth[{a, b}] = forward;
        bandwidth[{b, a}] = back.value_or(forward);
    }

    bool adjacent(NodeId a, NodeId b) const {
        const auto& v = adjacency.at(a);
        return std::binary_search(v.begin(), v.end(), b);
    }

    double link_bandwidth(NodeId from, NodeId to, double fallback) const {
        auto it = bandwidth.find({from, to});
        return it == bandwidth.end() ? fallback : it->second;
    }

    /// Nodes a controller at `agent` may offload to, ascending by id.
    std::vector<NodeId> offload_neighbors(NodeId agent) const {
        std::vector<NodeId> out;
        for (NodeId n : adjacency.at(agent))
            if (nodes[n].is_worker()) out.push_back(n);
        return out;
    }

    std::vector<NodeId> controllers() const {
        std::vector<NodeId> out;
        for (const auto& n : nodes)
            if (n.has_controller) out.push_back(n.id);
        return out;
    }

    std::vector<NodeId> clients() const {
        std::vector<NodeId> out;
        for (const auto& n : nodes)
            if (n.is_client) out.push_back(n.id);
        return out;
    }

    friend bool operator==(const Topology&, const Topology&) = default;
};

/// Uniform range; lo == hi means a constant.
struct Range {
    double lo = 0.0;
    double hi = 0.0;

    static Range constant(double v) { return {v, v}; }
    bool is_constant() const noexcept { return lo == hi; }
    double mean() const noexcept { return 0.5 * (lo + hi); }

    friend bool operator==(const Range&, const Range&) = default;
};

/// A fully determined task shape, as produced by trace loading.
struct TaskShape {
    double rho = 0.0;
    double alpha_in = 0.0;
    double alpha_out = 0.0;
    double xi = 1.0;

    friend bool operator==(const TaskShape&, const TaskShape&) = default;
};

/// Source of task attributes: parametric ranges, or a list of trace shapes
/// sampled uniformly when non-empty.
struct TaskTemplate {
    Range rho = Range::constant(8e7);
    Range alpha_in = Range::constant(megabytes_to_bits(150));
    Range alpha_out = Range::constant(megabytes_to_bits(150));
    Range xi = Range::constant(1.0);
    int delta = 100;

    std::vector<TaskShape> trace;
    std::string trace_path;
    double trace_ref_frequency = 1e7;

    bool from_trace() const noexcept { return !trace.empty(); }

    /// Mean cycle demand, used to express per-step processing budgets in task units.
    double mean_cycles() const {
        if (!from_trace()) return rho.mean() * xi.mean();
        double sum = 0.0;
        for (const auto& s : trace) sum += s.rho * s.xi;
        return sum / static_cast<double>(trace.size());
    }

    friend bool operator==(const TaskTemplate&, const TaskTemplate&) = default;
};

enum class TopologyMode { tiers, clusters, file };

/// Per-tier parameters for the tiered layout; vectors are indexed by tier.
struct TierPlan {
    std::vector<int> nodes{10, 10, 10};
    std::vector<double> frequency{4e7, 2e7, 8e7};
    std::vector<int> cores{1, 1, 2};
    std::vector<int> queue{20, 10, 100};

    friend bool operator==(const TierPlan&, const TierPlan&) = default;
};

struct NodeTemplate {
    int tier = 0;
    int num_cores = 1;
    double frequency = 2e7;
    int queue_capacity = 10;

    friend bool operator==(const NodeTemplate&, const NodeTemplate&) = default;
};

/// Urban-sensing cluster layout. Node count is
/// n_clusters * (2 * sbc_pairs + base_station_nodes) + (shared_server ? 1 : 0).
struct ClusterPlan {
    int n_clusters = 1;
    int sbc_pairs = 4;
    int base_station_nodes = 3;
    bool shared_server = true;
    NodeTemplate sbc{0, 1, 2e7, 10};
    NodeTemplate gateway{1, 4, 2e7, 20};
    NodeTemplate accelerator{1, 8, 2e7, 20};
    NodeTemplate server{2, 16, 2e7, 100};

    std::size_t node_count() const noexcept {
        return static_cast<std::size_t>(n_clusters) * (2 * sbc_pairs + base_station_nodes) +
               (shared_server ? 1 : 0);
    }

    friend bool operator==(const ClusterPlan&, const ClusterPlan&) = default;
};

/// How the topology of a config was produced; kept so configs serialize back
/// to their source form.
struct TopologySource {
    TopologyMode mode = TopologyMode::tiers;
    TierPlan tiers;
    ClusterPlan clusters;
    std::string file;
    double transmit_power = 20.0;

    friend bool operator==(const TopologySource&, const TopologySource&) = default;
};

struct SimConfig {
    Topology topology;
    TopologySource topology_source;
    ChannelParams channel;
    RewardWeights reward;
    double lambda = 0.17;
    TaskTemplate task;
    int horizon = 1000;
    std::uint64_t seed = 0;
    int max_neighbors = 10;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

}  // namespace edgesim
