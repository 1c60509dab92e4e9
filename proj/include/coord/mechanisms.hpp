#pragma once

// Mechanism comparison on identical initial beliefs, and construction of stake
// paths along which a given group succeeds every period.

#include <algorithm>
#include <string>
#include <vector>

#include "coord/beliefs.hpp"
#include "coord/engine.hpp"
#include "coord/error.hpp"
#include "coord/game.hpp"
#include "coord/schedule.hpp"

namespace coord {

struct ScheduleOutcome {
  std::string name;
  std::vector<bool> success;  // one entry per period N1+1..N
};

/// schedules[k+1] succeeding must imply schedules[k] succeeding, period by period.
struct DominanceReport {
  int first_period = 0;  // N1 + 1
  int last_period = 0;   // N
  std::vector<ScheduleOutcome> outcomes;
  int violations = 0;

  bool chain_holds() const noexcept { return violations == 0; }
};

inline std::vector<Group> clone_group(std::span<const BeliefCurve> curves, const UpdateParams& up) {
  Group group;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    AgentState a;
    a.id = static_cast<int>(i);
    a.curve = curves[i];
    a.update = up;
    group.push_back(std::move(a));
  }
  return {std::move(group)};
}

/// Common switch period of the schedules; Big Bang carries none of its own.
inline int comparison_switch_period(std::span<const StakeSchedule> schedules) {
  int n1 = -1;
  for (const auto& s : schedules) {
    if (s.kind == ScheduleKind::BigBang) continue;
    if (n1 >= 0 && s.switch_period != n1) throw ComparisonError("schedules differ in switch period");
    n1 = s.switch_period;
  }
  if (n1 < 0) n1 = schedules.front().switch_period;
  return n1;
}

/// Runs each schedule on clones of the same group. Order schedules from the
/// expected strongest (e.g. gradualism) to weakest (big bang).
inline DominanceReport coupled_compare(std::span<const BeliefCurve> initial_curves,
                                       std::span<const StakeSchedule> schedules, const GameParams& game,
                                       const UpdateParams& up) {
  if (schedules.empty()) throw ComparisonError("no schedules to compare");
  const auto n = schedules.front().size();
  const int high = schedules.front().high_stake;
  for (const auto& s : schedules) {
    if (s.size() != n || s.high_stake != high) {
      throw ComparisonError("schedules differ in length or high stake");
    }
  }
  const int n1 = comparison_switch_period(schedules);
  if (n1 < 0 || static_cast<std::size_t>(n1) >= n) throw ComparisonError("no high-stake window");

  DominanceReport report;
  report.first_period = n1 + 1;
  report.last_period = static_cast<int>(n);
  for (const auto& s : schedules) {
    auto groups = clone_group(initial_curves, up);
    auto records = run_stage(groups, s.stakes, game);
    ScheduleOutcome out;
    out.name = to_string(s.kind);
    for (std::size_t t = n1; t < n; ++t) out.success.push_back(records[0][t].success);
    report.outcomes.push_back(std::move(out));
  }
  for (std::size_t k = 0; k + 1 < report.outcomes.size(); ++k) {
    const auto& stronger = report.outcomes[k].success;
    const auto& weaker = report.outcomes[k + 1].success;
    for (std::size_t t = 0; t < stronger.size(); ++t) {
      if (weaker[t] && !stronger[t]) ++report.violations;
    }
  }
  return report;
}

enum class SynthesisStatus { Reached, InfeasibleStart, NoProgress, HorizonExhausted };

inline const char* to_string(SynthesisStatus s) noexcept {
  switch (s) {
    case SynthesisStatus::Reached: return "reached";
    case SynthesisStatus::InfeasibleStart: return "infeasible_start";
    case SynthesisStatus::NoProgress: return "no_progress";
    case SynthesisStatus::HorizonExhausted: return "horizon_exhausted";
  }
  return "?";
}

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::InfeasibleStart;
  StakeSchedule schedule;  // the guaranteed prefix when not Reached
  bool verified = false;   // engine replay succeeded in every period

  bool reached() const noexcept { return status == SynthesisStatus::Reached; }
};

/// Greedy: each period takes the largest stake every member would contribute
/// given the curves after the previous guaranteed success.
inline SynthesisResult synthesize_guaranteed_path(std::span<const BeliefCurve> curves, int target,
                                                  int max_periods, const GameParams& game,
                                                  const UpdateParams& up) {
  if (curves.size() != static_cast<std::size_t>(game.group_size)) {
    throw ArityError("need one curve per group member");
  }
  if (target < 1 || target >= game.endowment) throw DomainError("target stake outside (0, E)");
  for (const auto& c : curves) {
    if (target > c.grid_max()) throw DomainError("target beyond belief grid");
  }
  if (max_periods < 1) throw ConfigError("max_periods must be positive");

  std::vector<BeliefCurve> current(curves.begin(), curves.end());
  auto all_contribute = [&](int stake) {
    return std::all_of(current.begin(), current.end(),
                       [&](const BeliefCurve& c) { return decide(c, stake, game) == Action::Contribute; });
  };
  auto largest_feasible = [&](int floor) {
    for (int s = target; s > floor; --s) {
      if (all_contribute(s)) return s;
    }
    return floor;
  };

  SynthesisResult result;
  std::vector<int> path;
  int stake = largest_feasible(0);
  if (stake == 0) {
    result.status = SynthesisStatus::InfeasibleStart;
    return result;
  }
  for (;;) {
    path.push_back(stake);
    for (auto& c : current) c = update_after_success(c, stake, up);
    if (stake == target) {
      result.status = SynthesisStatus::Reached;
      break;
    }
    if (static_cast<int>(path.size()) >= max_periods) {
      result.status = SynthesisStatus::HorizonExhausted;
      break;
    }
    const int next = largest_feasible(stake);
    if (next <= stake) {
      result.status = SynthesisStatus::NoProgress;
      break;
    }
    stake = next;
  }
  result.schedule = make_custom_schedule(path, game);

  auto groups = clone_group(curves, up);
  const auto records = run_stage(groups, result.schedule.stakes, game);
  result.verified = std::all_of(records[0].begin(), records[0].end(),
                                [](const PeriodRecord& r) { return r.success; });
  return result;
}

}  // namespace coord
