#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "coord/game.hpp"
#include "coord/random.hpp"

using namespace coord;

namespace {
constexpr Action C = Action::Contribute;
constexpr Action NC = Action::NotContribute;

GameParams game(int group_size = 4, double alpha = 2.0, int endowment = 20) {
  return GameParams{group_size, alpha, endowment, 20};
}
}  // namespace

TEST(StagePayoff, TableValues) {
  const std::vector<Action> all_c{C, C, C};
  const std::vector<Action> one_nc{C, NC, C};
  EXPECT_EQ(stage_payoff(C, all_c, 14, game()), 34.0);
  EXPECT_EQ(stage_payoff(NC, all_c, 14, game()), 20.0);
  EXPECT_EQ(stage_payoff(C, one_nc, 2, game()), 18.0);
}

TEST(StagePayoff, GeneralMultiplierNetGain) {
  const std::vector<Action> all_c{C, C, C};
  EXPECT_DOUBLE_EQ(stage_payoff(C, all_c, 10, game(4, 3.5)), 20.0 + 2.5 * 10);
}

TEST(StagePayoff, Errors) {
  const std::vector<Action> all_c{C, C, C};
  EXPECT_THROW(stage_payoff(C, all_c, 0, game()), DomainError);
  EXPECT_THROW(stage_payoff(C, all_c, 20, game()), DomainError);
  EXPECT_THROW(stage_payoff(C, std::vector<Action>{C, C}, 14, game()), ArityError);
}

TEST(StagePayoff, RangeIsThreeValued) {
  Stream rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    const double alpha = 1.0 + 3.0 * rng.uniform() + 1e-6;
    const auto g = game(n, alpha);
    const int stake = 1 + static_cast<int>(rng.below(19));
    std::vector<Action> others(n - 1);
    for (auto& a : others) a = rng.below(2) ? C : NC;
    const Action own = rng.below(2) ? C : NC;
    const double p = stage_payoff(own, others, stake, g);
    const std::set<double> allowed{20.0 - stake, 20.0, 20.0 + (alpha - 1.0) * stake};
    EXPECT_TRUE(allowed.contains(p));
  }
}

TEST(ContributionPremium, Examples) {
  EXPECT_DOUBLE_EQ(contribution_premium(0.5, 14, game()), 0.0);
  EXPECT_DOUBLE_EQ(contribution_premium(1.0, 10, game()), 10.0);
  EXPECT_DOUBLE_EQ(contribution_premium(0.25, 8, game(4, 4.0)), 0.0);
  EXPECT_THROW(contribution_premium(1.1, 8, game()), DomainError);
  EXPECT_THROW(contribution_premium(-0.1, 8, game()), DomainError);
}

TEST(ContributionPremium, StrictlyIncreasingInProbability) {
  for (int stake = 1; stake < 20; ++stake) {
    double prev = contribution_premium(0.0, stake, game());
    for (int k = 1; k <= 100; ++k) {
      const double cur = contribution_premium(k / 100.0, stake, game());
      EXPECT_GT(cur, prev);
      prev = cur;
    }
  }
}

TEST(PureEquilibria, OnlyAllContributeAndAllAbstain) {
  for (int n = 2; n <= kMaxEquilibriumGroup; ++n) {
    for (double alpha : {1.1, 2.0, 4.0}) {
      for (int stake : {1, 2, 14, 19}) {
        const auto eq = pure_equilibria(stake, game(n, alpha));
        ASSERT_EQ(eq.size(), 2u) << "n=" << n << " alpha=" << alpha << " stake=" << stake;
        EXPECT_EQ(eq[0], ActionProfile(n, C));
        EXPECT_EQ(eq[1], ActionProfile(n, NC));
      }
    }
  }
}

TEST(PureEquilibria, RejectsLargeGroups) {
  EXPECT_THROW(pure_equilibria(14, game(7)), CapabilityError);
  EXPECT_THROW(pure_equilibria(25, game()), DomainError);
}

TEST(MixedEquilibrium, Probability) {
  EXPECT_NEAR(mixed_ne_probability(game(4, 2.0)), std::pow(2.0, -1.0 / 3.0), 1e-12);
  EXPECT_NEAR(mixed_ne_probability(game(4, 2.0)), 0.7937005259, 1e-9);
  EXPECT_DOUBLE_EQ(mixed_ne_probability(game(2, 2.0)), 0.5);
  EXPECT_DOUBLE_EQ(mixed_ne_probability(game(2, 4.0)), 0.25);
}

TEST(MixedEquilibrium, MakesContributionPremiumVanish) {
  for (int n = 2; n <= 8; ++n) {
    for (double alpha : {1.5, 2.0, 3.0, 7.0}) {
      const auto g = game(n, alpha);
      const double q = mixed_ne_probability(g);
      for (int stake : {2, 9, 14}) {
        EXPECT_NEAR(contribution_premium(std::pow(q, n - 1), stake, g), 0.0, 1e-12);
      }
    }
  }
}
