#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "coord/engine.hpp"
#include "coord/experiment.hpp"
#include "oracles.hpp"

using namespace coord;

namespace {
const GameParams kGame{};

Group make_group(const std::vector<BeliefCurve>& curves, const UpdateParams& up = {}) {
  Group g;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    AgentState a;
    a.id = static_cast<int>(i);
    a.curve = curves[i];
    a.update = up;
    g.push_back(a);
  }
  return g;
}

BeliefCurve exp_curve(double rate) {
  return BeliefCurve::from_function(20, [rate](int x) { return std::exp(-rate * x); });
}

const BeliefCurve kOne = BeliefCurve::constant(20, 1.0);
const BeliefCurve kZero = BeliefCurve::constant(20, 0.0);

SessionConfig optimist_session(std::uint64_t seed) {
  auto c = lab_session_config(seed);
  c.beliefs = {-60.0, 1e-9};
  return c;
}
}  // namespace

TEST(PlayPeriod, AllContribute) {
  auto g = make_group({kOne, kOne, kOne, kOne});
  const auto r = play_period(g, 14, kGame);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.payoffs, (std::vector<Points>{34, 34, 34, 34}));
  EXPECT_EQ(r.contributors(), 4);
  for (const auto& a : g) EXPECT_EQ(a.cumulative_points, 34);
}

TEST(PlayPeriod, AllAbstain) {
  auto g = make_group({kZero, kZero, kZero, kZero});
  const auto r = play_period(g, 14, kGame);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.payoffs, (std::vector<Points>{20, 20, 20, 20}));
  for (const auto& a : g) EXPECT_EQ(a.curve, kZero);
}

TEST(PlayPeriod, OneHoldout) {
  const auto holdout = BeliefCurve::from_function(20, [](int x) { return x < 14 ? 1.0 : 0.4; });
  auto g = make_group({kOne, kOne, kOne, holdout});
  const auto r = play_period(g, 14, kGame);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.payoffs, (std::vector<Points>{6, 6, 6, 20}));
  EXPECT_EQ(r.elicited_beliefs, (std::vector<double>{1.0, 1.0, 1.0, 0.4}));
  for (int i = 0; i < 3; ++i) {
    for (int x = 0; x < 14; ++x) EXPECT_EQ(g[i].curve[x], 1.0);
    for (int x = 14; x <= 20; ++x) EXPECT_EQ(g[i].curve[x], 0.0);
  }
  EXPECT_EQ(g[3].curve, holdout);
}

TEST(PlayPeriod, ArityMismatch) {
  auto g = make_group({kOne, kOne, kOne});
  EXPECT_THROW(play_period(g, 14, kGame), ArityError);
}

TEST(RunStage, BigBangOptimists) {
  std::vector<Group> groups{make_group({kOne, kOne, kOne, kOne})};
  const auto s = make_schedule(ScheduleKind::BigBang, 14, 14, 0, 0, 12, kGame);
  const auto rec = run_stage(groups, s.stakes, kGame);
  ASSERT_EQ(rec[0].size(), 12u);
  for (const auto& r : rec[0]) EXPECT_TRUE(r.success);
  for (const auto& a : groups[0]) EXPECT_EQ(a.cumulative_points, 408);
}

TEST(RunStage, SemiGradualismStallsAtTheJump) {
  // G(2) = 0.905, G(14) = 0.497, U(12) = 0.091
  const auto c = exp_curve(0.05);
  std::vector<Group> groups{make_group({c, c, c, c})};
  const auto s = make_schedule(ScheduleKind::SemiGradualism, 2, 14, 0, 6, 12, kGame);
  const auto rec = run_stage(groups, s.stakes, kGame);
  for (int t = 0; t < 12; ++t) EXPECT_EQ(rec[0][t].success, t < 6) << "period " << t + 1;
}

TEST(RunStage, GradualismClimbs) {
  // G(2) = 0.549, G(3) = 0.407, U(2) = 0.670
  const auto c = exp_curve(0.3);
  std::vector<Group> groups{make_group({c, c, c, c})};
  const auto s = make_schedule(ScheduleKind::Gradualism, 2, 14, 2, 6, 12, kGame);
  const auto rec = run_stage(groups, s.stakes, kGame);
  for (const auto& r : rec[0]) EXPECT_TRUE(r.success) << "period " << r.period;
}

TEST(RunStage, FirstPeriodOffset) {
  std::vector<Group> groups{make_group({kOne, kOne, kOne, kOne})};
  const std::vector<int> stakes{14, 14};
  const auto rec = run_stage(groups, stakes, kGame, 13);
  EXPECT_EQ(rec[0][0].period, 13);
  EXPECT_EQ(rec[0][1].period, 14);
  EXPECT_THROW(run_stage(groups, std::vector<int>{}, kGame), ConfigError);
}

TEST(Reshuffle, PartitionsEveryAgentOnce) {
  for (int n : {4, 12, 16}) {
    std::vector<AgentState> agents(n);
    for (int i = 0; i < n; ++i) {
      agents[i].id = i;
      agents[i].curve = kOne;
      agents[i].origin = i < n / 2 ? "a" : "b";
      agents[i].cumulative_points = i;
    }
    Stream rng(42);
    const auto groups = reshuffle(agents, 4, rng);
    ASSERT_EQ(groups.size(), static_cast<std::size_t>(n / 4));
    std::set<int> ids;
    for (const auto& g : groups) {
      EXPECT_EQ(g.size(), 4u);
      for (const auto& a : g) {
        ids.insert(a.id);
        EXPECT_EQ(a.cumulative_points, a.id);
        EXPECT_EQ(a.origin, a.id < n / 2 ? "a" : "b");
      }
    }
    EXPECT_EQ(ids.size(), static_cast<std::size_t>(n));
    if (n == 4) {
      EXPECT_EQ(ids, (std::set<int>{0, 1, 2, 3}));
    }
  }
}

TEST(Reshuffle, DeterministicAndIndivisible) {
  std::vector<AgentState> agents(16);
  for (int i = 0; i < 16; ++i) agents[i].id = i;
  Stream a(9), b(9);
  EXPECT_EQ(reshuffle(agents, 4, a), reshuffle(agents, 4, b));
  agents.pop_back();
  Stream c(9);
  EXPECT_THROW(reshuffle(agents, 4, c), ConfigError);
}

TEST(Reshuffle, RoughlyUniformPlacement) {
  // Agent 0 lands in each of the 4 groups with probability 1/4.
  std::vector<AgentState> agents(16);
  for (int i = 0; i < 16; ++i) agents[i].id = i;
  std::vector<int> counts(4, 0);
  const int n = 20000;
  for (int r = 0; r < n; ++r) {
    Stream s(Stream::for_purpose(3, r, StreamPurpose::Test));
    const auto groups = reshuffle(agents, 4, s);
    for (int g = 0; g < 4; ++g) {
      for (const auto& a : groups[g]) counts[g] += a.id == 0;
    }
  }
  const double se = std::sqrt(0.25 * 0.75 / n);
  for (int g = 0; g < 4; ++g) EXPECT_NEAR(counts[g] / static_cast<double>(n), 0.25, 4 * se);
}

TEST(RunSession, LabPresetShape) {
  const auto cfg = lab_session_config(11);
  const auto rec = run_session(cfg, 0);
  ASSERT_EQ(rec.agents.size(), 16u);
  std::map<int, int> periods;
  for (const auto& g : rec.groups) {
    for (const auto& p : g.periods) {
      for (int id : p.agent_ids) ++periods[id];
      if (g.stage == 2) {
        EXPECT_EQ(p.stake, 14);
        EXPECT_GE(p.period, 13);
        EXPECT_LE(p.period, 20);
      }
    }
  }
  for (const auto& [id, n] : periods) EXPECT_EQ(n, 20) << "agent " << id;
}

TEST(RunSession, AllOptimists) {
  const auto rec = run_session(optimist_session(5), 0);
  for (const auto& g : rec.groups) {
    for (const auto& p : g.periods) EXPECT_TRUE(p.success);
  }
  for (const auto& a : rec.agents) {
    if (a.origin == treatment::kBigBang) {
      EXPECT_DOUBLE_EQ(a.points, 1080.0);
      EXPECT_DOUBLE_EQ(a.currency, 27.0);
    }
  }
}

TEST(RunSession, Deterministic) {
  const auto cfg = lab_session_config(123, 2);
  EXPECT_EQ(run_session(cfg, 7), run_session(cfg, 7));
  EXPECT_NE(run_session(cfg, 7), run_session(cfg, 8));
}

TEST(RunSession, CoupledTreatmentsShareDraws) {
  const auto cfg = lab_session_config(8);
  const auto groups = build_stage1_groups(cfg, 3);
  ASSERT_EQ(groups.size(), 4u);
  for (std::size_t g = 1; g < groups.size(); ++g) {
    for (int k = 0; k < 4; ++k) EXPECT_EQ(groups[g].second[k].curve, groups[0].second[k].curve);
  }
  auto uncoupled = cfg;
  uncoupled.coupled_treatments = false;
  const auto other = build_stage1_groups(uncoupled, 3);
  EXPECT_NE(other[1].second[0].curve, other[0].second[0].curve);
}

TEST(RunSession, RejectsBadConfig) {
  auto cfg = lab_session_config(1);
  cfg.treatments[0].group_count = 0;  // 12 agents still divisible
  EXPECT_NO_THROW(run_session(cfg, 0));
  cfg.stage2_stake = 20;
  EXPECT_THROW(run_session(cfg, 0), DomainError);
  cfg.stage2_stake = 14;
  cfg.exchange_rate = 0.0;
  EXPECT_THROW(run_session(cfg, 0), ConfigError);
}

// Invariants over randomized sessions.
TEST(EngineProperties, SessionInvariants) {
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    auto cfg = lab_session_config(77);
    Stream rng(Stream::for_purpose(1, rep, StreamPurpose::Test));
    cfg.update = oracle::random_update(rng, cfg.game.threshold());
    const auto rec = run_session(cfg, rep);

    std::map<int, Points> earned;
    std::map<int, std::string> origin;
    for (const auto& g : rec.groups) {
      for (std::size_t t = 0; t < g.periods.size(); ++t) {
        const auto& p = g.periods[t];
        EXPECT_EQ(p.success, p.contributors() == 4);
        std::vector<Action> others;
        for (std::size_t i = 0; i < p.actions.size(); ++i) {
          others.clear();
          for (std::size_t j = 0; j < p.actions.size(); ++j) {
            if (j != i) others.push_back(p.actions[j]);
          }
          EXPECT_EQ(p.payoffs[i], stage_payoff(p.actions[i], others, p.stake, cfg.game));
          EXPECT_EQ(p.actions[i], p.elicited_beliefs[i] >= 0.5 ? Action::Contribute : Action::NotContribute);
          earned[p.agent_ids[i]] += p.payoffs[i];
        }
        // Persistence across consecutive equal stakes.
        if (t + 1 < g.periods.size() && g.periods[t + 1].stake == p.stake) {
          EXPECT_EQ(g.periods[t + 1].success, p.success);
        }
        // Abstaining in a failed period leaves the belief at that stake untouched.
        if (t + 1 < g.periods.size() && !p.success) {
          for (std::size_t i = 0; i < p.actions.size(); ++i) {
            if (p.actions[i] == Action::NotContribute && g.periods[t + 1].stake == p.stake) {
              EXPECT_EQ(g.periods[t + 1].elicited_beliefs[i], p.elicited_beliefs[i]);
            }
          }
        }
      }
    }
    for (const auto& a : rec.agents) {
      const auto fee = a.origin == treatment::kHighShowUpFee ? 480.0 : 400.0;
      EXPECT_NEAR(a.points, fee + earned[a.id], 1e-9);
    }

    // Stage-2 entry: certainty at the stage-2 stake means contributing.
    for (const auto& g : rec.groups) {
      if (g.stage != 2) continue;
      const auto& first = g.periods.front();
      for (std::size_t i = 0; i < first.actions.size(); ++i) {
        if (first.elicited_beliefs[i] == 1.0) EXPECT_EQ(first.actions[i], Action::Contribute);
      }
    }
  }
}

TEST(EngineProperties, AbstentionIdentityOnCurves) {
  Stream rng(404);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<BeliefCurve> curves;
    for (int k = 0; k < 4; ++k) curves.push_back(oracle::random_curve(rng, 20));
    auto g = make_group(curves, oracle::random_update(rng, 0.5));
    const int stake = 1 + static_cast<int>(rng.below(19));
    const auto r = play_period(g, stake, kGame);
    for (int k = 0; k < 4; ++k) {
      if (!r.success && r.actions[k] == Action::NotContribute) EXPECT_EQ(g[k].curve, curves[k]);
      EXPECT_EQ(g[k].history.size(), 1u);
    }
  }
}
