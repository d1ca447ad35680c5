#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mdg/game.hpp"

using namespace mdg;

TEST(GameParams, RejectsInvalidInputs) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(GameParamsd(0.0, 1.0, 0.0, 0.0), DomainError);
  EXPECT_THROW(GameParamsd(1.0, -2.0, 0.0, 0.0), DomainError);
  EXPECT_THROW(GameParamsd(1.0, 2.0, -1.0, 0.0), DomainError);
  EXPECT_THROW(GameParamsd(1.0, 2.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(GameParamsd(1.0, 2.0, 0.0, -0.1), DomainError);
  EXPECT_THROW(GameParamsd(nan, 2.0, 0.0, 0.0), DomainError);
  EXPECT_THROW(GameParamsd(1.0, 2.0, INFINITY, 0.0), DomainError);
  EXPECT_NO_THROW(GameParamsd(1.0, 2.0, 0.0, 0.999));
}

TEST(GameParams, AccessorsAndTransforms) {
  const GameParamsd g(1.0, 2.0, 3.0, 0.25);
  EXPECT_EQ(g.total(), 6.0);
  EXPECT_EQ(g.power(Pool::One), 1.0);
  EXPECT_EQ(g.power(Pool::Two), 2.0);
  EXPECT_EQ(g.swapped(), GameParamsd(2.0, 1.0, 3.0, 0.25));
  EXPECT_EQ(g.scaled(2.0), GameParamsd(2.0, 4.0, 6.0, 0.25));
  EXPECT_THROW(g.scaled(0.0), DomainError);
}

TEST(Profile, RejectsOutOfRangeStrategies) {
  const GameParamsd g(1.0, 2.0, 1.0, 0.0);
  EXPECT_THROW(avg_reward(g, StrategyPaird{-0.1, 0.0}, Pool::One), DomainError);
  EXPECT_THROW(avg_reward(g, StrategyPaird{0.0, 2.5}, Pool::One), DomainError);
  EXPECT_THROW(avg_reward(g, StrategyPaird{NAN, 0.0}, Pool::One), DomainError);
  // Everyone infiltrates everyone and nobody is left outside: D = 0.
  const GameParamsd closed(1.0, 2.0, 0.0, 0.0);
  EXPECT_THROW(avg_reward(closed, StrategyPaird{1.0, 2.0}, Pool::One), DomainError);
}

TEST(DirectReward, Examples) {
  const GameParamsd g(1.0, 2.0, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(direct_reward(g, StrategyPaird{0.0, 0.0}, Pool::One), 0.25);
  EXPECT_DOUBLE_EQ(direct_reward(g, StrategyPaird{0.5, 0.0}, Pool::One), 1.0 / 7.0);
}

TEST(DirectReward, FullBetrayalKeepsDenominator) {
  // With p = 1 nothing is withheld: R1 = (m1 - x1 + x2) / m.
  const double r = unchecked::direct_reward(1.0, 2.0, 1.0, 1.0, 0.3, 0.7, Pool::One);
  EXPECT_DOUBLE_EQ(r, (1.0 - 0.3 + 0.7) / 4.0);
}

TEST(AvgReward, HonestMiningPaysOneOverM) {
  const GameParamsd g(3.0, 5.0, 7.0, 0.4);
  EXPECT_DOUBLE_EQ(avg_reward(g, StrategyPaird{0.0, 0.0}, Pool::One), 1.0 / 15.0);
  EXPECT_DOUBLE_EQ(avg_reward(g, StrategyPaird{0.0, 0.0}, Pool::Two), 1.0 / 15.0);
}

TEST(AvgReward, FlatWhenEveryInfiltratorBetrays) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double m1 = 0.5 + 4 * u(rng), m2 = 0.5 + 4 * u(rng), t = 3 * u(rng);
    const double x1 = m1 * u(rng), x2 = m2 * u(rng);
    const double m = m1 + m2 + t;
    EXPECT_NEAR(unchecked::avg_reward(m1, m2, t, 1.0, x1, x2, Pool::One), 1.0 / m, 1e-14);
    EXPECT_NEAR(unchecked::avg_reward(m1, m2, t, 1.0, x1, x2, Pool::Two), 1.0 / m, 1e-14);
  }
}

TEST(AvgReward, SolvesTheRewardRecursion) {
  // Pool 1's members and pool 2's infiltrators share R1 plus what pool 1's own
  // infiltrators bring back: (m1 + x2) r1 = R1 + x1 r2.
  const GameParamsd g(1.0, 2.0, 1.0, 0.0);
  const StrategyPaird s{0.2648, 0.4407};
  const double r1 = avg_reward(g, s, Pool::One), r2 = avg_reward(g, s, Pool::Two);
  const double R1 = direct_reward(g, s, Pool::One), R2 = direct_reward(g, s, Pool::Two);
  EXPECT_NEAR(r1 * (g.m1() + s.x2), R1 + s.x1 * r2, 1e-15);
  EXPECT_NEAR(r2 * (g.m2() + s.x1), R2 + s.x2 * r1, 1e-15);
}

TEST(AvgReward, PoolTwoIsTheMirrorImage) {
  const GameParamsd g(1.5, 4.0, 2.0, 0.3);
  const StrategyPaird s{0.4, 1.1};
  EXPECT_DOUBLE_EQ(avg_reward(g, s, Pool::Two), avg_reward(g.swapped(), s.swapped(), Pool::One));
  EXPECT_DOUBLE_EQ(d_avg_reward(g, s, Pool::Two),
                   d_avg_reward(g.swapped(), s.swapped(), Pool::One));
}

TEST(DAvgReward, VanishesAtSymmetricEquilibrium) {
  const GameParamsd g(32.0, 32.0, 0.0, 0.0);
  EXPECT_NEAR(d_avg_reward(g, StrategyPaird{16.0, 16.0}, Pool::One), 0.0, 1e-15);
}

TEST(DAvgReward, PositiveAtHonestMining) {
  const GameParamsd g(1.0, 2.0, 1.0, 0.0);
  EXPECT_GT(d_avg_reward(g, StrategyPaird{0.0, 0.0}, Pool::One), 0.0);
}

TEST(DAvgReward, NonPositiveAtExtremeEquilibrium) {
  const GameParamsd g(1.0, 8.0, 0.0, 0.0);
  EXPECT_LE(d_avg_reward(g, StrategyPaird{0.0, 4.0}, Pool::One), 0.0);
}

TEST(Game, WorksInLongDouble) {
  const GameParams<long double> g(1.0L, 2.0L, 1.0L, 0.0L);
  const StrategyPair<long double> s{0.5L, 0.0L};
  EXPECT_NEAR(static_cast<double>(direct_reward(g, s, Pool::One)), 1.0 / 7.0, 1e-16);
}
