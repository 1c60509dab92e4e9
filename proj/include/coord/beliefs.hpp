#pragma once

// Belief curves over others' strategy types and the learning rules that move them.
//
// A player's curve G(X) is the subjective probability that every other group
// member would contribute any stake up to X. It lives on the integer grid
// 0..grid_max, starts at G(0) = 1 and never increases. The player contributes
// at stake S iff G(S) >= 1/alpha.
//
// After each period the player sees only whether the whole group contributed:
//   success            -> certainty up to S, kernel-propagated confidence above S
//   own C, failure     -> confidence at S and above capped at failure_cap
//   own NC             -> nothing learned, curve unchanged

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "coord/error.hpp"
#include "coord/game.hpp"
#include "coord/random.hpp"

namespace coord {

class BeliefCurve {
 public:
  BeliefCurve() : values_{1.0} {}

  /// Validates values[0] == 1, range [0,1], weak decrease.
  explicit BeliefCurve(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("belief curve needs at least the X = 0 point");
    if (values_[0] != 1.0) throw DomainError("belief curve must start at 1");
    for (std::size_t x = 0; x < values_.size(); ++x) {
      if (!(values_[x] >= 0.0 && values_[x] <= 1.0)) {
        throw DomainError("belief value at X = " + std::to_string(x) + " outside [0, 1]");
      }
      if (x > 0 && values_[x] > values_[x - 1]) {
        throw DomainError("belief curve increases at X = " + std::to_string(x));
      }
    }
  }

  /// values[0] = 1, values[X] = level for X >= 1.
  static BeliefCurve constant(int grid_max, double level) {
    std::vector<double> v(grid_max + 1, level);
    v[0] = 1.0;
    return BeliefCurve(std::move(v));
  }

  template <typename F>
  static BeliefCurve from_function(int grid_max, F&& f) {
    std::vector<double> v(grid_max + 1);
    for (int x = 0; x <= grid_max; ++x) v[x] = f(x);
    v[0] = 1.0;
    return BeliefCurve(std::move(v));
  }

  int grid_max() const noexcept { return static_cast<int>(values_.size()) - 1; }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator[](int x) const noexcept { return values_[x]; }

  bool operator==(const BeliefCurve&) const = default;

 private:
  std::vector<double> values_;
};

enum class KernelForm { Exponential, Linear, Step };

inline const char* to_string(KernelForm f) noexcept {
  switch (f) {
    case KernelForm::Exponential: return "exponential";
    case KernelForm::Linear: return "linear";
    case KernelForm::Step: return "step";
  }
  return "?";
}

struct UpdateParams {
  KernelForm kernel_form = KernelForm::Exponential;
  double kernel_scale = 0.2;  // kappa for exponential, width delta for linear/step
  double failure_cap = 0.0;

  void validate(const GameParams& game) const {
    if (!(kernel_scale >= 0.0) || !std::isfinite(kernel_scale)) {
      throw ConfigError("kernel_scale must be finite and non-negative");
    }
    if (!(failure_cap >= 0.0 && failure_cap < game.threshold())) {
      throw ConfigError("failure_cap must lie in [0, 1/alpha)");
    }
  }

  bool operator==(const UpdateParams&) const = default;
};

/// Log-normal decay rate lambda = exp(location + spread * z); G_1(X) = exp(-lambda X).
/// Defaults are the fit to period-1 contribution 0.92 at stake 2 and 0.60 at stake 14 (alpha = 2).
struct InitialBeliefParams {
  double location = -3.4336159482412665;
  double spread = 1.6895622359451308;

  void validate() const {
    if (!std::isfinite(location)) throw ConfigError("belief location must be finite");
    if (!(spread > 0.0) || !std::isfinite(spread)) throw ConfigError("belief spread must be positive");
  }

  bool operator==(const InitialBeliefParams&) const = default;
};

inline void check_grid(const BeliefCurve& curve, int stake) {
  if (stake < 0 || stake > curve.grid_max()) {
    throw DomainError("stake " + std::to_string(stake) + " off the belief grid 0.." +
                      std::to_string(curve.grid_max()));
  }
}

inline double evaluate(const BeliefCurve& curve, int stake) {
  check_grid(curve, stake);
  return curve[stake];
}

/// Contribute iff G(S) >= 1/alpha; the tie contributes.
inline Action decide(const BeliefCurve& curve, int stake, const GameParams& params) {
  return evaluate(curve, stake) >= params.threshold() ? Action::Contribute : Action::NotContribute;
}

/// Upward-influence kernel U(gap): 1 at gap 0, weakly decreasing.
inline double kernel_eval(const UpdateParams& up, int gap) {
  if (gap < 0) throw DomainError("kernel gap must be non-negative");
  const double d = gap;
  switch (up.kernel_form) {
    case KernelForm::Exponential:
      return std::exp(-up.kernel_scale * d);
    case KernelForm::Linear:
      if (up.kernel_scale == 0.0) return gap == 0 ? 1.0 : 0.0;
      return std::max(0.0, 1.0 - d / up.kernel_scale);
    case KernelForm::Step:
      return d <= up.kernel_scale ? 1.0 : 0.0;
  }
  return 0.0;
}

inline BeliefCurve update_after_success(const BeliefCurve& curve, int stake, const UpdateParams& up) {
  check_grid(curve, stake);
  std::vector<double> v = curve.values();
  for (int x = 0; x <= stake; ++x) v[x] = 1.0;
  for (int x = stake + 1; x <= curve.grid_max(); ++x) v[x] = std::max(v[x], kernel_eval(up, x - stake));
  return BeliefCurve(std::move(v));
}

inline BeliefCurve update_after_observed_failure(const BeliefCurve& curve, int stake,
                                                 const UpdateParams& up) {
  check_grid(curve, stake);
  if (stake == 0) throw DomainError("a group cannot fail at stake 0");
  std::vector<double> v = curve.values();
  for (int x = stake; x <= curve.grid_max(); ++x) v[x] = std::min(v[x], up.failure_cap);
  return BeliefCurve(std::move(v));
}

inline BeliefCurve update_after_own_abstention(const BeliefCurve& curve) { return curve; }

inline BeliefCurve sample_initial(const InitialBeliefParams& params, const GameParams& game, Stream& stream) {
  const double rate = std::exp(params.location + params.spread * stream.normal());
  return BeliefCurve::from_function(game.grid_max, [rate](int x) { return std::exp(-rate * x); });
}

}  // namespace coord
