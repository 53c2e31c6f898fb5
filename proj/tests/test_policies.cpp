#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace edgesim;

namespace {

// Observation with the given queue lengths per block; a -1 queue marks padding.
Observation obs_with(std::vector<double> queues, bool task = true) {
    Observation o;
    for (double q : queues) {
        const bool pad = q < 0;
        std::vector<double> block(kBlockWidth, pad ? kPadValue : 0.0);
        if (!pad) {
            block[2] = q;
            block[3] = 10;
        }
        o.values.insert(o.values.end(), block.begin(), block.end());
        o.action_mask.push_back(pad ? 0 : 1);
    }
    o.values.push_back(task ? 1.0 : 0.0);
    return o;
}

}  // namespace

TEST(Baselines, Local) {
    Rng rng(1);
    EXPECT_EQ(baseline_action(BaselineKind::local, obs_with({9, 0, 0}), rng), 0);
}

TEST(Baselines, LeastQueueFirstMinimum) {
    Rng rng(1);
    EXPECT_EQ(baseline_action(BaselineKind::least_queue, obs_with({5, 2, 2, 7}), rng), 1);
    EXPECT_EQ(baseline_action(BaselineKind::least_queue, obs_with({2, 2, 2}), rng), 0);
    EXPECT_EQ(baseline_action(BaselineKind::least_queue, obs_with({5, 9, -1, 3}), rng), 3);
}

TEST(Baselines, EmptyStagingIsNoOp) {
    Rng rng(1);
    for (auto k : {BaselineKind::local, BaselineKind::random, BaselineKind::least_queue})
        for (int i = 0; i < 20; ++i) EXPECT_EQ(baseline_action(k, obs_with({5, 0, 0}, false), rng), 0);
}

TEST(Baselines, RandomIsUniformOverLegal) {
    BaselinePolicy p(BaselineKind::random, 42);
    const Observation o = obs_with({1, 1, -1, 1, 1, -1});
    std::vector<int> counts(6, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[p.act(o)];
    EXPECT_EQ(counts[2], 0);
    EXPECT_EQ(counts[5], 0);
    for (int k : {0, 1, 3, 4}) EXPECT_NEAR(counts[k] / double(draws), 0.25, 0.02) << k;
}

TEST(Baselines, RandomIsSeeded) {
    BaselinePolicy a(BaselineKind::random, 9), b(BaselineKind::random, 9);
    const Observation o = obs_with({1, 1, 1, 1});
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.act(o), b.act(o));
}

TEST(QUpdate, OneStepAverage) {
    QTable t(2);
    QLearnerParams p;
    p.alpha = 0.5;
    p.gamma = 0.0;
    q_update(t, "s", 0, 2.0, "s2", p);
    EXPECT_EQ(t.get("s", 0), 1.0);
}

TEST(QUpdate, ZeroRewardShrinks) {
    QTable t(2);
    QLearnerParams p;
    p.alpha = 0.3;
    p.gamma = 0.0;
    t.at("s", 1) = 10.0;
    q_update(t, "s", 1, 0.0, "s", p);
    EXPECT_DOUBLE_EQ(t.get("s", 1), 7.0);
}

TEST(QUpdate, BootstrapsOverLegalActions) {
    QTable t(3);
    QLearnerParams p;
    p.alpha = 1.0;
    p.gamma = 0.5;
    t.at("n", 0) = 1.0;
    t.at("n", 2) = 100.0;
    const std::vector<std::uint8_t> mask{1, 1, 0};
    q_update(t, "s", 0, 0.0, "n", p, mask);
    EXPECT_EQ(t.get("s", 0), 0.5);
    q_update(t, "s", 1, 0.0, "n", p, mask, true);
    EXPECT_EQ(t.get("s", 1), 0.0);
}

TEST(QUpdate, NonFiniteReward) {
    QTable t(2);
    EXPECT_THROW(q_update(t, "s", 0, std::nan(""), "s", QLearnerParams{}), Error);
    EXPECT_THROW(q_update(t, "s", 0, INFINITY, "s", QLearnerParams{}), Error);
}

TEST(QUpdate, MatchesValueIteration) {
    const oracle::Mdp mdp{{{{0, 1}, {0, 1}}}, {{{1.0, 0.0}, {0.0, 2.0}}}, 0.9};
    const auto optimum = oracle::optimal_policy(mdp);
    QTable t(2);
    QLearnerParams p;
    p.alpha = 0.1;
    p.gamma = mdp.gamma;
    for (int sweep = 0; sweep < 10000; ++sweep)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                q_update(t, std::to_string(s), a, mdp.reward[s][a], std::to_string(mdp.next[s][a]), p);
    for (int s = 0; s < 2; ++s) EXPECT_EQ(t.greedy(std::to_string(s)), optimum[s]) << s;
    EXPECT_EQ(optimum[0], 1);
}

TEST(EpsilonGreedy, Cases) {
    QTable t(3);
    const std::vector<std::uint8_t> mask{1, 1, 1};
    Rng rng(4);
    EXPECT_EQ(epsilon_greedy(t, "s", mask, 0.0, rng), 0);
    t.at("s", 2) = 5.0;
    for (int i = 0; i < 50; ++i) EXPECT_EQ(epsilon_greedy(t, "s", mask, 0.0, rng), 2);
    const std::vector<std::uint8_t> masked{1, 1, 0};
    EXPECT_EQ(epsilon_greedy(t, "s", masked, 0.0, rng), 0);
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 9000; ++i) ++counts[epsilon_greedy(t, "s", mask, 1.0, rng)];
    for (int c : counts) EXPECT_NEAR(c / 9000.0, 1.0 / 3.0, 0.02);
}

TEST(QTable, SaveLoadRoundTrip) {
    QTable t(3);
    t.at("0-1-x:1", 1) = 1.0 / 3.0;
    t.at("2-2-2:0", 0) = -1e300;
    std::stringstream ss;
    t.save(ss);
    EXPECT_EQ(ss.str().substr(0, 22), "state_key,action,value");
    const QTable back = QTable::load(ss, 3);
    EXPECT_EQ(back, t);
}

TEST(StateKey, BucketsOccupancy) {
    Observation o = obs_with({0, 5, 9.9, -1});
    EXPECT_EQ(state_key(o, 4), "0-2-3-x:1");
    EXPECT_EQ(state_key(obs_with({10}, false), 4), "3:0");
}

TEST(Epsilon, Schedule) {
    QLearnerParams p;
    EXPECT_EQ(p.epsilon_at(0), 1.0);
    EXPECT_DOUBLE_EQ(p.epsilon_at(1), 0.98);
    EXPECT_EQ(p.epsilon_at(1000), 0.05);
}

TEST(TabularQ, RespectsMask) {
    QLearnerParams p;
    TabularQPolicy pol(p, 4, 1);
    const Observation o = obs_with({1, -1, 2, -1});
    for (int i = 0; i < 500; ++i) {
        const int a = pol.act(o);
        EXPECT_TRUE(a == 0 || a == 2);
    }
}
