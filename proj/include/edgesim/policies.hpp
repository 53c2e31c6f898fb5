#pragma once

// Decision makers. Ties are always broken toward the lowest action index,
// and every policy emits 0 (keep local) when the agent has nothing staged.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "edgesim/env.hpp"
#include "edgesim/error.hpp"
#include "edgesim/random.hpp"

namespace edgesim {

/// Pluggable per-agent decision maker.
class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string name() const = 0;
    virtual int act(const Observation& obs) = 0;

    /// Called after every step with the transition the agent experienced.
    virtual void feedback(const Observation& /*obs*/, int /*action*/, double /*reward*/, const Observation& /*next*/,
                          bool /*done*/) {}

    virtual void begin_episode(int /*episode*/) {}
};

enum class BaselineKind { local, random, least_queue };

inline std::vector<int> legal_actions(std::span<const std::uint8_t> mask) {
    std::vector<int> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.push_back(static_cast<int>(i));
    return out;
}

inline int uniform_legal(std::span<const std::uint8_t> mask, Rng& rng) {
    const auto legal = legal_actions(mask);
    if (legal.empty()) return 0;
    return legal[uniform_index(rng, legal.size())];
}

/// Local -> 0; Random -> uniform over legal indices; LeastQueue -> legal index
/// with the smallest observed queue. Empty staging always yields 0.
inline int baseline_action(BaselineKind kind, const Observation& obs, Rng& rng) {
    if (!obs.has_task()) return 0;
    switch (kind) {
        case BaselineKind::local: return 0;
        case BaselineKind::random: return uniform_legal(obs.action_mask, rng);
        case BaselineKind::least_queue: {
            int best = 0;
            for (int k = 1; k < obs.num_actions(); ++k)
                if (obs.action_mask[k] && obs.queue(k) < obs.queue(best)) best = k;
            return best;
        }
    }
    return 0;
}

class BaselinePolicy final : public Policy {
public:
    explicit BaselinePolicy(BaselineKind kind, std::uint64_t seed = 0) : kind_(kind), rng_(seed) {}

    std::string name() const override {
        switch (kind_) {
            case BaselineKind::local: return "local";
            case BaselineKind::random: return "random";
            case BaselineKind::least_queue: return "least_queue";
        }
        return "?";
    }

    int act(const Observation& obs) override { return baseline_action(kind_, obs, rng_); }

private:
    BaselineKind kind_;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// Tabular Q-learning

struct QLearnerParams {
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay = 0.98;  // multiplicative, per episode
    int buckets = 4;              // per queue-occupancy feature

    double epsilon_at(int episode) const {
        return std::max(epsilon_end, epsilon_start * std::pow(epsilon_decay, episode));
    }
};

/// State key -> action values. Ordered so exports are deterministic.
class QTable {
public:
    explicit QTable(int num_actions = 1) : num_actions_(num_actions) {}

    int num_actions() const noexcept { return num_actions_; }
    std::size_t size() const noexcept { return values_.size(); }

    double get(const std::string& key, int action) const {
        auto it = values_.find(key);
        return it == values_.end() ? 0.0 : it->second.at(static_cast<std::size_t>(action));
    }

    double& at(const std::string& key, int action) {
        auto [it, _] = values_.try_emplace(key, static_cast<std::size_t>(num_actions_), 0.0);
        return it->second.at(static_cast<std::size_t>(action));
    }

    /// Max over legal actions (all actions when `mask` is empty). Unseen keys are 0.
    double max_value(const std::string& key, std::span<const std::uint8_t> mask = {}) const {
        double best = -INFINITY;
        for (int a = 0; a < num_actions_; ++a)
            if (mask.empty() || mask[static_cast<std::size_t>(a)]) best = std::max(best, get(key, a));
        return std::isfinite(best) ? best : 0.0;
    }

    /// Greedy legal action, lowest index on ties.
    int greedy(const std::string& key, std::span<const std::uint8_t> mask = {}) const {
        int best = -1;
        double best_v = 0.0;
        for (int a = 0; a < num_actions_; ++a) {
            if (!mask.empty() && !mask[static_cast<std::size_t>(a)]) continue;
            const double v = get(key, a);
            if (best < 0 || v > best_v) {
                best = a;
                best_v = v;
            }
        }
        return std::max(best, 0);
    }

    /// Flat text export: header, then one "state_key,action,value" line per entry.
    void save(std::ostream& out) const {
        out << "state_key,action,value\n";
        char num[32];
        for (const auto& [key, row] : values_)
            for (std::size_t a = 0; a < row.size(); ++a) {
                const auto res = std::to_chars(num, num + sizeof num, row[a]);
                out << key << "," << a << "," << std::string_view(num, res.ptr) << "\n";
            }
    }

    static QTable load(std::istream& in, int num_actions) {
        QTable t(num_actions);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || (lineno == 1 && line == "state_key,action,value")) continue;
            const auto c2 = line.rfind(',');
            const auto c1 = c2 == std::string::npos ? std::string::npos : line.rfind(',', c2 - 1);
            if (c1 == std::string::npos) throw Error("q-table line " + std::to_string(lineno) + ": malformed");
            try {
                const int action = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
                const double value = std::stod(line.substr(c2 + 1));
                if (action < 0 || action >= num_actions) throw Error("action out of range");
                t.at(line.substr(0, c1), action) = value;
            } catch (const std::exception& e) {
                throw Error("q-table line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return t;
    }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    int num_actions_;
    std::map<std::string, std::vector<double>> values_;
};

/// Q[s,a] <- (1 - alpha) Q[s,a] + alpha (r + gamma max_a' Q[s',a']).
/// Terminal transitions do not bootstrap.
inline void q_update(QTable& table, const std::string& s_key, int action, double reward, const std::string& next_key,
                     const QLearnerParams& params, std::span<const std::uint8_t> next_mask = {},
                     bool terminal = false) {
    if (!std::isfinite(reward)) throw Error("non-finite reward");
    const double future = terminal ? 0.0 : table.max_value(next_key, next_mask);
    double& q = table.at(s_key, action);
    q = (1.0 - params.alpha) * q + params.alpha * (reward + params.gamma * future);
}

inline int epsilon_greedy(const QTable& table, const std::string& key, std::span<const std::uint8_t> mask,
                          double epsilon, Rng& rng) {
    if (uniform01(rng) < epsilon) return uniform_legal(mask, rng);
    return table.greedy(key, mask);
}

/// Discretizes an observation into a state key from queue-occupancy ratios:
/// one bucket digit per block ('x' for padding), then the staging flag.
inline std::string state_key(const Observation& obs, int buckets) {
    std::string key;
    for (int k = 0; k < obs.num_actions(); ++k) {
        if (k) key += '-';
        if (!obs.action_mask[k]) {
            key += 'x';
            continue;
        }
        const double cap = obs.capacity(k);
        const double ratio = cap > 0 ? obs.queue(k) / cap : 1.0;
        const int b = std::clamp(static_cast<int>(std::floor(ratio * buckets)), 0, buckets - 1);
        key += std::to_string(b);
    }
    key += obs.has_task() ? ":1" : ":0";
    return key;
}

class TabularQPolicy final : public Policy {
public:
    TabularQPolicy(QLearnerParams params, int num_actions, std::uint64_t seed)
        : params_(params), table_(num_actions), rng_(seed), epsilon_(params.epsilon_start) {}

    std::string name() const override { return "tabular_q"; }

    int act(const Observation& obs) override {
        if (!obs.has_task()) return 0;
        return epsilon_greedy(table_, state_key(obs, params_.buckets), obs.action_mask, epsilon_, rng_);
    }

    void feedback(const Observation& obs, int action, double reward, const Observation& next, bool done) override {
        if (!learning_ || !obs.has_task()) return;
        q_update(table_, state_key(obs, params_.buckets), action, reward, state_key(next, params_.buckets), params_,
                 next.action_mask, done);
    }

    void begin_episode(int episode) override {
        if (learning_) epsilon_ = params_.epsilon_at(episode);
    }

    /// Freezes the table and acts with the final exploration rate.
    void set_evaluation() {
        learning_ = false;
        epsilon_ = params_.epsilon_end;
    }

    void reseed(std::uint64_t seed) { rng_.seed(seed); }

    double epsilon() const noexcept { return epsilon_; }
    const QTable& table() const noexcept { return table_; }
    QTable& table() noexcept { return table_; }
    const QLearnerParams& params() const noexcept { return params_; }

private:
    QLearnerParams params_;
    QTable table_;
    Rng rng_;
    double epsilon_;
    bool learning_ = true;
};

}  // namespace edgesim
