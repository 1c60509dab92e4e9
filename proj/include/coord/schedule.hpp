#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "coord/error.hpp"
#include "coord/game.hpp"

namespace coord {

enum class ScheduleKind { BigBang, SemiGradualism, Gradualism, Custom };

inline const char* to_string(ScheduleKind k) noexcept {
  switch (k) {
    case ScheduleKind::BigBang: return "big_bang";
    case ScheduleKind::SemiGradualism: return "semi_gradualism";
    case ScheduleKind::Gradualism: return "gradualism";
    case ScheduleKind::Custom: return "custom";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "big_bang") return ScheduleKind::BigBang;
  if (s == "semi_gradualism") return ScheduleKind::SemiGradualism;
  if (s == "gradualism") return ScheduleKind::Gradualism;
  if (s == "custom") return ScheduleKind::Custom;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

/// Stage-1 stake path. switch_period counts the periods before the high plateau.
struct StakeSchedule {
  ScheduleKind kind = ScheduleKind::Custom;
  std::vector<int> stakes;
  int high_stake = 0;
  int low_stake = 0;
  int switch_period = 0;

  std::size_t size() const noexcept { return stakes.size(); }

  void validate(const GameParams& game) const {
    if (stakes.empty()) throw ConfigError("schedule has no periods");
    for (int s : stakes) {
      check_stake(s, game);
      if (s > game.grid_max) throw DomainError("stake " + std::to_string(s) + " beyond grid_max");
    }
  }

  bool operator==(const StakeSchedule&) const = default;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Gradualism;
  int low = 2;
  int high = 14;
  int step = 2;
  int n1 = 6;
  int n = 12;
};

/// Custom schedules: high = max stake, low = min stake, switch_period = periods before
/// the trailing run of the maximum.
inline StakeSchedule make_custom_schedule(std::vector<int> stakes, const GameParams& game) {
  StakeSchedule out;
  out.kind = ScheduleKind::Custom;
  out.stakes = std::move(stakes);
  out.validate(game);
  out.high_stake = *std::max_element(out.stakes.begin(), out.stakes.end());
  out.low_stake = *std::min_element(out.stakes.begin(), out.stakes.end());
  int first_plateau = static_cast<int>(out.stakes.size());
  while (first_plateau > 0 && out.stakes[first_plateau - 1] == out.high_stake) --first_plateau;
  out.switch_period = first_plateau;
  return out;
}

/// Builds the stake list without checking it against a game.
inline StakeSchedule build_schedule(const ScheduleSpec& spec) {
  if (spec.n < 1) throw ConfigError("schedule length must be positive");
  StakeSchedule out;
  out.kind = spec.kind;
  out.high_stake = spec.high;
  out.low_stake = spec.low;
  out.switch_period = spec.n1;
  switch (spec.kind) {
    case ScheduleKind::BigBang:
      out.low_stake = spec.high;
      out.switch_period = std::max(0, spec.n1);
      out.stakes.assign(spec.n, spec.high);
      break;
    case ScheduleKind::SemiGradualism:
    case ScheduleKind::Gradualism:
      if (spec.n1 < 1 || spec.n1 >= spec.n) throw ConfigError("switch period must satisfy 0 < n1 < n");
      for (int t = 0; t < spec.n1; ++t) {
        out.stakes.push_back(spec.kind == ScheduleKind::Gradualism ? spec.low + t * spec.step : spec.low);
      }
      out.stakes.resize(spec.n, spec.high);
      break;
    case ScheduleKind::Custom:
      throw ConfigError("custom schedules take explicit stakes");
  }
  return out;
}

inline StakeSchedule make_schedule(const ScheduleSpec& spec, const GameParams& game) {
  auto out = build_schedule(spec);
  out.validate(game);
  return out;
}

inline StakeSchedule make_schedule(ScheduleKind kind, int low, int high, int step, int n1, int n,
                                   const GameParams& game) {
  return make_schedule(ScheduleSpec{kind, low, high, step, n1, n}, game);
}

}  // namespace coord
