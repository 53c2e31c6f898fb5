#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "edgesim/error.hpp"
#include "edgesim/types.hpp"

namespace edgesim {

/// Per-episode evaluation counters.
struct EpisodeMetrics {
    std::int64_t generated = 0;
    std::int64_t completed = 0;
    std::int64_t dropped_overflow = 0;
    std::int64_t dropped_deadline = 0;
    std::int64_t resident_at_end = 0;
    std::vector<std::int64_t> overloads;  // indexed by node id
    std::vector<int> response_times;      // steps, completed tasks only
    std::map<NodeId, double> agent_rewards;

    std::int64_t overload_total() const {
        return std::accumulate(overloads.begin(), overloads.end(), std::int64_t{0});
    }
    std::int64_t dropped() const { return dropped_overflow + dropped_deadline; }

    bool conserved() const {
        return generated == completed + dropped_overflow + dropped_deadline + resident_at_end;
    }

    /// Mean response time; NaN when nothing completed.
    double mean_response() const {
        if (response_times.empty()) return std::numeric_limits<double>::quiet_NaN();
        double sum = 0.0;
        for (int r : response_times) sum += r;
        return sum / static_cast<double>(response_times.size());
    }

    /// Mean cumulative reward over agents.
    double mean_agent_reward() const {
        if (agent_rewards.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& [_, r] : agent_rewards) sum += r;
        return sum / static_cast<double>(agent_rewards.size());
    }

    friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

struct Stat {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std = std::numeric_limits<double>::quiet_NaN();
};

/// Mean and sample standard deviation. Values are sorted first so the result
/// does not depend on input order.
inline Stat describe(std::vector<double> values) {
    Stat s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) {
        s.std = 0.0;
        return s;
    }
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
    return s;
}

struct BatchSummary {
    std::size_t episodes = 0;
    Stat overloads;
    Stat response;
    Stat dropped;
    Stat generated;
    Stat reward;
    double drop_fraction = 0.0;
};

inline BatchSummary summarize(std::span<const EpisodeMetrics> batch) {
    if (batch.empty()) throw Error("empty batch");
    std::vector<double> overloads, response, dropped, generated, reward;
    std::int64_t dropped_total = 0, generated_total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& m = batch[i];
        if (!m.conserved())
            throw Error("conservation violated in episode " + std::to_string(i) + ": generated " +
                        std::to_string(m.generated) + " != completed " + std::to_string(m.completed) +
                        " + dropped " + std::to_string(m.dropped()) + " + resident " +
                        std::to_string(m.resident_at_end));
        overloads.push_back(static_cast<double>(m.overload_total()));
        if (m.completed > 0) response.push_back(m.mean_response());
        dropped.push_back(static_cast<double>(m.dropped()));
        generated.push_back(static_cast<double>(m.generated));
        reward.push_back(m.mean_agent_reward());
        dropped_total += m.dropped();
        generated_total += m.generated;
    }
    BatchSummary s;
    s.episodes = batch.size();
    s.overloads = describe(std::move(overloads));
    s.response = describe(std::move(response));
    s.dropped = describe(std::move(dropped));
    s.generated = describe(std::move(generated));
    s.reward = describe(std::move(reward));
    s.drop_fraction = generated_total > 0 ? static_cast<double>(dropped_total) / static_cast<double>(generated_total) : 0.0;
    return s;
}

/// One row of the sweep CSV.
struct SummaryRow {
    std::string scenario;
    std::string policy;
    double lambda = 0.0;
    int clusters = 0;
    std::uint64_t seed = 0;
    BatchSummary summary;
};

inline constexpr const char* kCsvHeader =
    "scenario,policy,lambda,clusters,seed,episodes,overloads_mean,overloads_std,resp_mean,resp_std,"
    "dropped_mean,dropped_std,drop_pct,reward_mean";

/// Six significant digits.
inline std::string format_g6(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string csv_row(const SummaryRow& r) {
    const BatchSummary& s = r.summary;
    std::string out;
    out += r.scenario + "," + r.policy + "," + format_g6(r.lambda) + "," + std::to_string(r.clusters) + "," +
           std::to_string(r.seed) + "," + std::to_string(s.episodes) + ",";
    out += format_g6(s.overloads.mean) + "," + format_g6(s.overloads.std) + ",";
    out += format_g6(s.response.mean) + "," + format_g6(s.response.std) + ",";
    out += format_g6(s.dropped.mean) + "," + format_g6(s.dropped.std) + ",";
    out += format_g6(s.drop_fraction) + "," + format_g6(s.reward.mean);
    return out;
}

inline void write_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << kCsvHeader << "\n";
    for (const auto& r : rows) out << csv_row(r) << "\n";
}

}  // namespace edgesim
