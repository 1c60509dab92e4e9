#pragma once

// Groups of belief-learning agents playing a stake schedule under minimal
// feedback: after each period a member learns only whether all members
// contributed. A session runs every treatment's stage-1 groups, reshuffles the
// whole session into new groups, and plays stage 2 at a fixed stake.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coord/beliefs.hpp"
#include "coord/error.hpp"
#include "coord/game.hpp"
#include "coord/random.hpp"
#include "coord/schedule.hpp"

namespace coord {

struct AgentState {
  int id = 0;
  BeliefCurve curve;
  UpdateParams update;
  std::string origin;
  Points cumulative_points = 0.0;
  std::vector<Action> history;

  bool operator==(const AgentState&) const = default;
};

struct PeriodRecord {
  int period = 0;  // 1-based, continues across stages
  int stake = 0;
  std::vector<int> agent_ids;
  std::vector<Action> actions;
  bool success = false;
  std::vector<Points> payoffs;
  std::vector<double> elicited_beliefs;  // G(stake) before the period's update

  int contributors() const noexcept {
    return static_cast<int>(std::count(actions.begin(), actions.end(), Action::Contribute));
  }

  bool operator==(const PeriodRecord&) const = default;
};

using Group = std::vector<AgentState>;

inline PeriodRecord play_period(std::span<AgentState> group, int stake, const GameParams& game,
                                int period_index = 1) {
  if (group.size() != static_cast<std::size_t>(game.group_size)) {
    throw ArityError("group has " + std::to_string(group.size()) + " members, game expects " +
                     std::to_string(game.group_size));
  }
  check_stake(stake, game);

  PeriodRecord rec;
  rec.period = period_index;
  rec.stake = stake;
  for (const auto& agent : group) {
    rec.agent_ids.push_back(agent.id);
    rec.elicited_beliefs.push_back(evaluate(agent.curve, stake));
    rec.actions.push_back(decide(agent.curve, stake, game));
  }
  rec.success = std::all_of(rec.actions.begin(), rec.actions.end(),
                            [](Action a) { return a == Action::Contribute; });

  std::vector<Action> others(group.size() - 1);
  for (std::size_t i = 0; i < group.size(); ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < group.size(); ++j) {
      if (j != i) others[k++] = rec.actions[j];
    }
    rec.payoffs.push_back(stage_payoff(rec.actions[i], others, stake, game));
  }

  for (std::size_t i = 0; i < group.size(); ++i) {
    auto& agent = group[i];
    if (rec.success) {
      agent.curve = update_after_success(agent.curve, stake, agent.update);
    } else if (rec.actions[i] == Action::Contribute) {
      agent.curve = update_after_observed_failure(agent.curve, stake, agent.update);
    } else {
      agent.curve = update_after_own_abstention(agent.curve);
    }
    agent.cumulative_points += rec.payoffs[i];
    agent.history.push_back(rec.actions[i]);
  }
  return rec;
}

/// Plays every group through the schedule; result[g] holds group g's records.
inline std::vector<std::vector<PeriodRecord>> run_stage(std::vector<Group>& groups,
                                                        std::span<const int> schedule,
                                                        const GameParams& game, int first_period = 1) {
  if (schedule.empty()) throw ConfigError("empty stake schedule");
  std::vector<std::vector<PeriodRecord>> out(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out[g].reserve(schedule.size());
    for (std::size_t t = 0; t < schedule.size(); ++t) {
      out[g].push_back(play_period(groups[g], schedule[t], game, first_period + static_cast<int>(t)));
    }
  }
  return out;
}

/// Uniformly random partition into consecutive groups of group_size.
inline std::vector<Group> reshuffle(std::vector<AgentState> agents, int group_size, Stream& stream) {
  if (group_size < 1 || agents.size() % static_cast<std::size_t>(group_size) != 0) {
    throw ConfigError(std::to_string(agents.size()) + " agents cannot be split into groups of " +
                      std::to_string(group_size));
  }
  stream.shuffle(agents);
  std::vector<Group> groups(agents.size() / group_size);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    groups[i / group_size].push_back(std::move(agents[i]));
  }
  return groups;
}

struct TreatmentConfig {
  std::string name;
  StakeSchedule schedule;
  int group_count = 1;
  Points show_up_fee = 400.0;

  bool operator==(const TreatmentConfig&) const = default;
};

struct SessionConfig {
  GameParams game;
  std::vector<TreatmentConfig> treatments;
  int stage2_periods = 8;
  int stage2_stake = 14;
  double exchange_rate = 40.0;  // points per currency unit
  std::uint64_t seed = 1;
  InitialBeliefParams beliefs;
  UpdateParams update;
  // Groups in the same slot of different treatments draw identical initial beliefs.
  bool coupled_treatments = true;

  int total_agents() const noexcept {
    int n = 0;
    for (const auto& t : treatments) n += t.group_count * game.group_size;
    return n;
  }

  int stage1_length() const noexcept {
    std::size_t n = 0;
    for (const auto& t : treatments) n = std::max(n, t.schedule.size());
    return static_cast<int>(n);
  }

  void validate() const {
    game.validate();
    beliefs.validate();
    update.validate(game);
    if (treatments.empty()) throw ConfigError("session has no treatments");
    for (const auto& t : treatments) {
      if (t.name.empty()) throw ConfigError("treatment without a name");
      if (t.group_count < 0) throw ConfigError("negative group count for " + t.name);
      t.schedule.validate(game);
    }
    if (total_agents() == 0) throw ConfigError("session has no agents");
    if (stage2_periods < 0) throw ConfigError("negative stage-2 length");
    if (stage2_periods > 0) {
      check_stake(stage2_stake, game);
      if (stage2_stake > game.grid_max) throw ConfigError("stage-2 stake beyond grid_max");
    }
    if (!(exchange_rate > 0.0)) throw ConfigError("exchange rate must be positive");
  }

  bool operator==(const SessionConfig&) const = default;
};

struct GroupRecord {
  int stage = 1;
  std::string treatment;  // stage-1 treatment; "stage2" for reshuffled groups
  int group_id = 0;
  std::vector<int> members;
  std::vector<PeriodRecord> periods;

  bool operator==(const GroupRecord&) const = default;
};

struct AgentOutcome {
  int id = 0;
  std::string origin;
  Points points = 0.0;  // includes show-up fee
  double currency = 0.0;

  bool operator==(const AgentOutcome&) const = default;
};

struct SessionRecord {
  std::uint64_t replication = 0;
  std::vector<GroupRecord> groups;
  std::vector<AgentOutcome> agents;  // ordered by id

  bool operator==(const SessionRecord&) const = default;
};

inline constexpr const char* kStage2Label = "stage2";

/// Builds stage-1 groups with fresh sampled beliefs and the show-up fee credited.
inline std::vector<std::pair<std::size_t, Group>> build_stage1_groups(const SessionConfig& config,
                                                                      std::uint64_t replication) {
  std::vector<std::pair<std::size_t, Group>> groups;
  int next_id = 0;
  for (std::size_t ti = 0; ti < config.treatments.size(); ++ti) {
    const auto& treatment = config.treatments[ti];
    for (int g = 0; g < treatment.group_count; ++g) {
      Group group;
      for (int k = 0; k < config.game.group_size; ++k) {
        const std::uint64_t slot = config.coupled_treatments
                                       ? static_cast<std::uint64_t>(g * config.game.group_size + k)
                                       : static_cast<std::uint64_t>(next_id);
        Stream stream = Stream::for_purpose(config.seed, replication, StreamPurpose::InitialBelief, slot);
        AgentState agent;
        agent.id = next_id++;
        agent.curve = sample_initial(config.beliefs, config.game, stream);
        agent.update = config.update;
        agent.origin = treatment.name;
        agent.cumulative_points = treatment.show_up_fee;
        group.push_back(std::move(agent));
      }
      groups.emplace_back(ti, std::move(group));
    }
  }
  return groups;
}

inline SessionRecord run_session(const SessionConfig& config, std::uint64_t replication) {
  config.validate();
  SessionRecord record;
  record.replication = replication;

  auto stage1 = build_stage1_groups(config, replication);
  std::vector<AgentState> pool;
  pool.reserve(config.total_agents());
  int group_id = 0;
  for (auto& [ti, group] : stage1) {
    std::vector<Group> one{std::move(group)};
    auto periods = run_stage(one, config.treatments[ti].schedule.stakes, config.game, 1);
    GroupRecord gr;
    gr.stage = 1;
    gr.treatment = config.treatments[ti].name;
    gr.group_id = group_id++;
    for (const auto& a : one[0]) gr.members.push_back(a.id);
    gr.periods = std::move(periods[0]);
    record.groups.push_back(std::move(gr));
    for (auto& a : one[0]) pool.push_back(std::move(a));
  }

  if (config.stage2_periods > 0) {
    Stream stream = Stream::for_purpose(config.seed, replication, StreamPurpose::Reshuffle);
    auto groups = reshuffle(std::move(pool), config.game.group_size, stream);
    const std::vector<int> stakes(config.stage2_periods, config.stage2_stake);
    auto periods = run_stage(groups, stakes, config.game, config.stage1_length() + 1);
    pool.clear();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      GroupRecord gr;
      gr.stage = 2;
      gr.treatment = kStage2Label;
      gr.group_id = static_cast<int>(g);
      for (const auto& a : groups[g]) gr.members.push_back(a.id);
      gr.periods = std::move(periods[g]);
      record.groups.push_back(std::move(gr));
      for (auto& a : groups[g]) pool.push_back(std::move(a));
    }
  }

  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& a : pool) {
    record.agents.push_back({a.id, a.origin, a.cumulative_points, a.cumulative_points / config.exchange_rate});
  }
  return record;
}

}  // namespace coord
