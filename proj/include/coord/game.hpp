#pragma once

// One-period binary weakest-link (stag hunt) game among I players.
//
// Each player either contributes the full stake S or nothing. If everyone
// contributes, the project returns alpha*S to each player, so the stake comes
// back with a net gain of (alpha-1)*S. Otherwise contributors lose the stake.
// With alpha = 2 this is the familiar 20+S / 20 / 20-S table for E = 20.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "coord/error.hpp"

namespace coord {

enum class Action { Contribute, NotContribute };

inline constexpr const char* to_string(Action a) noexcept {
  return a == Action::Contribute ? "C" : "NC";
}

using Points = double;
using ActionProfile = std::vector<Action>;

struct GameParams {
  int group_size = 4;
  double multiplier = 2.0;
  int endowment = 20;
  int grid_max = 20;

  void validate() const {
    if (group_size < 2) throw ConfigError("group_size must be at least 2");
    if (!(multiplier > 1.0)) throw ConfigError("multiplier must exceed 1");
    if (endowment <= 0) throw ConfigError("endowment must be positive");
    if (grid_max < 1) throw ConfigError("grid_max must be at least 1");
  }

  /// Lowest belief in universal contribution at which contributing pays: 1/alpha.
  double threshold() const noexcept { return 1.0 / multiplier; }

  bool operator==(const GameParams&) const = default;
};

/// Stakes are integers strictly between 0 and the endowment.
inline void check_stake(int stake, const GameParams& params) {
  if (stake <= 0 || stake >= params.endowment) {
    throw DomainError("stake " + std::to_string(stake) + " outside (0, " +
                      std::to_string(params.endowment) + ")");
  }
}

inline Points stage_payoff(Action own, std::span<const Action> others, int stake,
                           const GameParams& params) {
  check_stake(stake, params);
  if (others.size() != static_cast<std::size_t>(params.group_size - 1)) {
    throw ArityError("expected " + std::to_string(params.group_size - 1) + " other actions, got " +
                     std::to_string(others.size()));
  }
  const Points endowment = params.endowment;
  if (own == Action::NotContribute) return endowment;
  for (Action a : others) {
    if (a == Action::NotContribute) return endowment - stake;
  }
  return endowment + (params.multiplier - 1.0) * stake;
}

/// Expected gain of contributing over abstaining when all others contribute
/// with joint probability p_all_others.
inline double contribution_premium(double p_all_others, int stake, const GameParams& params) {
  if (!(p_all_others >= 0.0 && p_all_others <= 1.0)) {
    throw DomainError("probability outside [0, 1]");
  }
  return p_all_others * params.multiplier * stake - stake;
}

inline constexpr int kMaxEquilibriumGroup = 6;

/// Pure Nash equilibria by exhaustive unilateral-deviation check over all 2^I profiles.
inline std::vector<ActionProfile> pure_equilibria(int stake, const GameParams& params) {
  check_stake(stake, params);
  const int n = params.group_size;
  if (n > kMaxEquilibriumGroup) {
    throw CapabilityError("exhaustive equilibrium check supports group_size <= " +
                          std::to_string(kMaxEquilibriumGroup));
  }

  auto payoff_of = [&](const ActionProfile& profile, int i) {
    ActionProfile others;
    others.reserve(profile.size() - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(profile[j]);
    }
    return stage_payoff(profile[i], others, stake, params);
  };

  std::vector<ActionProfile> equilibria;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    ActionProfile profile(n);
    for (int i = 0; i < n; ++i) {
      profile[i] = (mask >> i) & 1u ? Action::NotContribute : Action::Contribute;
    }
    bool stable = true;
    for (int i = 0; i < n && stable; ++i) {
      ActionProfile deviated = profile;
      deviated[i] = profile[i] == Action::Contribute ? Action::NotContribute : Action::Contribute;
      if (payoff_of(deviated, i) > payoff_of(profile, i)) stable = false;
    }
    if (stable) equilibria.push_back(std::move(profile));
  }
  return equilibria;
}

/// Symmetric mixed equilibrium: q^(I-1) = 1/alpha.
inline double mixed_ne_probability(const GameParams& params) {
  params.validate();
  return std::pow(params.multiplier, -1.0 / (params.group_size - 1));
}

}  // namespace coord
