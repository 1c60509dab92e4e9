#pragma once

// Aggregation of simulated sessions into figure-style summaries, calibration of
// the initial-belief family, and the two estimators used on the data: the
// Wilcoxon-Mann-Whitney rank-sum test and least squares.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "coord/beliefs.hpp"
#include "coord/engine.hpp"
#include "coord/error.hpp"
#include "coord/game.hpp"

namespace coord {

// ---------------------------------------------------------------------------
// Flat per-period rows and summaries

/// One group in one period; the CSV export row.
struct FlatPeriodRow {
  std::uint64_t replication = 0;
  std::string treatment;
  int stage = 1;
  int period = 0;
  int group_id = 0;
  int stake = 0;
  int n_contribute = 0;
  bool success = false;
  double mean_payoff = 0.0;
  double min_payoff = 0.0;

  bool operator==(const FlatPeriodRow&) const = default;
};

inline std::vector<FlatPeriodRow> flatten(const SessionRecord& session) {
  std::vector<FlatPeriodRow> rows;
  for (const auto& g : session.groups) {
    for (const auto& p : g.periods) {
      FlatPeriodRow row;
      row.replication = session.replication;
      row.treatment = g.treatment;
      row.stage = g.stage;
      row.period = p.period;
      row.group_id = g.group_id;
      row.stake = p.stake;
      row.n_contribute = p.contributors();
      row.success = p.success;
      row.mean_payoff = std::accumulate(p.payoffs.begin(), p.payoffs.end(), 0.0) / p.payoffs.size();
      row.min_payoff = *std::min_element(p.payoffs.begin(), p.payoffs.end());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// The members of one group sharing one origin treatment, in one period.
struct OriginObservation {
  std::uint64_t replication = 0;
  std::string treatment;
  int stage = 1;
  int period = 0;
  int members = 0;
  int contributors = 0;
  bool success = false;
  double payoff_sum = 0.0;
};

inline std::vector<OriginObservation> observations(const SessionRecord& session) {
  std::map<int, std::string> origin;
  for (const auto& a : session.agents) origin[a.id] = a.origin;

  std::vector<OriginObservation> out;
  for (const auto& g : session.groups) {
    for (const auto& p : g.periods) {
      std::vector<OriginObservation> slices;
      for (std::size_t i = 0; i < p.agent_ids.size(); ++i) {
        const auto it = origin.find(p.agent_ids[i]);
        const std::string& name = it != origin.end() ? it->second : g.treatment;
        auto slice = std::find_if(slices.begin(), slices.end(),
                                  [&](const OriginObservation& o) { return o.treatment == name; });
        if (slice == slices.end()) {
          slices.push_back({session.replication, name, g.stage, p.period, 0, 0, p.success, 0.0});
          slice = slices.end() - 1;
        }
        slice->members += 1;
        slice->contributors += p.actions[i] == Action::Contribute ? 1 : 0;
        slice->payoff_sum += p.payoffs[i];
      }
      out.insert(out.end(), slices.begin(), slices.end());
    }
  }
  return out;
}

inline std::vector<OriginObservation> observations(std::span<const FlatPeriodRow> rows, int group_size) {
  std::vector<OriginObservation> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.push_back({r.replication, r.treatment, r.stage, r.period, group_size, r.n_contribute, r.success,
                   r.mean_payoff * group_size});
  }
  return out;
}

struct SummaryCell {
  std::string treatment;
  int stage = 1;
  int period = 0;
  double success_rate = 0.0;       // share of agents whose group succeeded
  double contribution_rate = 0.0;  // share of agents contributing
  double mean_payoff = 0.0;
  double cumulative_mean_earnings = 0.0;  // mean payoff summed over periods so far, fee excluded
  long agents = 0;
  long replications = 0;
};

struct RunSummary {
  std::vector<SummaryCell> cells;  // treatments in first-seen order, periods ascending

  const SummaryCell* find(const std::string& treatment, int period) const {
    for (const auto& c : cells) {
      if (c.treatment == treatment && c.period == period) return &c;
    }
    return nullptr;
  }

  std::vector<std::string> treatments() const {
    std::vector<std::string> names;
    for (const auto& c : cells) {
      if (std::find(names.begin(), names.end(), c.treatment) == names.end()) names.push_back(c.treatment);
    }
    return names;
  }
};

/// Accumulates observations; cells come out in first-seen treatment order.
class SummaryBuilder {
 public:
  void add(const OriginObservation& o) {
    if (!acc_.contains(o.treatment)) order_.push_back(o.treatment);
    auto& a = acc_[o.treatment][o.period];
    a.stage = o.stage;
    a.agents += o.members;
    a.contributors += o.contributors;
    a.succeeded += o.success ? o.members : 0;
    a.payoff += o.payoff_sum;
    a.reps.insert(o.replication);
  }

  void add(const SessionRecord& session) {
    for (const auto& o : observations(session)) add(o);
  }

  bool empty() const noexcept { return order_.empty(); }

  RunSummary finish() const {
    if (empty()) throw StatsError("nothing to summarize");
    RunSummary summary;
    for (const auto& name : order_) {
      double cumulative = 0.0;
      for (const auto& [period, a] : acc_.at(name)) {
        SummaryCell c;
        c.treatment = name;
        c.stage = a.stage;
        c.period = period;
        c.agents = a.agents;
        c.replications = static_cast<long>(a.reps.size());
        c.success_rate = static_cast<double>(a.succeeded) / a.agents;
        c.contribution_rate = static_cast<double>(a.contributors) / a.agents;
        c.mean_payoff = a.payoff / a.agents;
        cumulative += c.mean_payoff;
        c.cumulative_mean_earnings = cumulative;
        summary.cells.push_back(std::move(c));
      }
    }
    return summary;
  }

 private:
  struct Acc {
    int stage = 1;
    long agents = 0;
    long contributors = 0;
    long succeeded = 0;
    double payoff = 0.0;
    std::set<std::uint64_t> reps;
  };
  std::vector<std::string> order_;
  std::map<std::string, std::map<int, Acc>> acc_;
};

inline RunSummary summarize(std::span<const OriginObservation> obs) {
  SummaryBuilder b;
  for (const auto& o : obs) b.add(o);
  return b.finish();
}

inline RunSummary summarize(std::span<const SessionRecord> sessions) {
  SummaryBuilder b;
  for (const auto& s : sessions) b.add(s);
  return b.finish();
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationTarget {
  std::vector<std::pair<int, double>> points;  // (stake, period-1 contribution probability)

  static CalibrationTarget defaults() { return {{{2, 0.92}, {14, 0.60}}}; }

  bool operator==(const CalibrationTarget&) const = default;
};

inline double standard_normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// P(exp(-lambda S) >= 1/alpha) = P(lambda <= ln(alpha)/S) = p gives
/// location + z_p * spread = ln(ln(alpha)/S) for each target; two targets pin both.
inline InitialBeliefParams calibrate_beliefs(const CalibrationTarget& targets, const GameParams& game) {
  if (targets.points.size() != 2) throw ConfigError("calibration needs exactly two targets");
  for (const auto& [stake, p] : targets.points) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("calibration probability must lie in (0, 1)");
    if (stake < 1 || stake > game.grid_max) throw DomainError("calibration stake off the grid");
  }
  const auto [s1, p1] = targets.points[0];
  const auto [s2, p2] = targets.points[1];
  const double c1 = std::log(std::log(game.multiplier) / s1);
  const double c2 = std::log(std::log(game.multiplier) / s2);
  const double z1 = standard_normal_quantile(p1);
  const double z2 = standard_normal_quantile(p2);
  if (z1 == z2) throw InfeasibleError("calibration targets have equal quantiles; spread would be zero");
  const double spread = (c1 - c2) / (z1 - z2);
  if (!(spread > 0.0)) {
    throw InfeasibleError("calibration targets are not decreasing in stake; implied spread <= 0");
  }
  return {c1 - z1 * spread, spread};
}

// ---------------------------------------------------------------------------
// Wilcoxon-Mann-Whitney

struct MannWhitneyResult {
  double u_a = 0.0;
  double u_b = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

inline constexpr std::size_t kExactMannWhitneyLimit = 12;

namespace detail {

inline std::vector<double> midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// U_a counts pairs with a > b (ties count one half). Two-sided p-value: exact
/// permutation distribution for n_a + n_b <= 12, else normal approximation with
/// tie and continuity correction.
inline MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw StatsError("Mann-Whitney needs two nonempty samples");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = detail::midranks(pooled);

  const double offset = 0.5 * na * (na + 1.0);
  const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + na, 0.0);
  MannWhitneyResult r;
  r.u_a = rank_sum_a - offset;
  r.u_b = static_cast<double>(na) * nb - r.u_a;
  const double mean = 0.5 * na * nb;
  const double observed = std::abs(r.u_a - mean);

  if (n <= kExactMannWhitneyLimit) {
    r.exact = true;
    long extreme = 0, total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if ((mask >> i) & 1u) sum += ranks[i];
      }
      ++total;
      if (std::abs(sum - offset - mean) >= observed - 1e-9) ++extreme;
    }
    r.p_value = static_cast<double>(extreme) / total;
    return r;
  }

  std::map<double, long> ties;
  for (double v : pooled) ++ties[v];
  double tie_term = 0.0;
  for (const auto& [v, t] : ties) tie_term += static_cast<double>(t) * t * t - t;
  const double nn = static_cast<double>(n);
  const double variance = na * nb / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (variance <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, observed - 0.5) / std::sqrt(variance);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

// ---------------------------------------------------------------------------
// Least squares

struct OlsResult {
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  double r_squared = 0.0;
  long observations = 0;

  double t_stat(std::size_t k) const { return coefficients[k] / std_errors[k]; }
};

/// Column-pivoted Householder QR. x must already contain the intercept column.
inline OlsResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                     const std::vector<std::string>& column_names = {}) {
  const auto rows = x.rows(), cols = x.cols();
  if (rows != y.size()) throw StatsError("ols: y and x differ in row count");
  if (cols == 0 || rows < cols) throw StatsError("ols: need at least as many rows as columns");

  auto name_of = [&](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(column_names.size()) ? column_names[j] : "column " + std::to_string(j);
  };
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < cols) {
    for (Eigen::Index j = 1; j <= cols; ++j) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> prefix(x.leftCols(j));
      if (prefix.rank() < j) throw StatsError("ols: rank deficient; " + name_of(j - 1) + " is collinear with earlier columns");
    }
    throw StatsError("ols: rank deficient");
  }

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd residual = y - x * beta;
  const double ssr = residual.squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();

  OlsResult out;
  out.observations = rows;
  out.coefficients.assign(beta.data(), beta.data() + cols);
  out.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
  const double dof = static_cast<double>(rows - cols);
  const double sigma2 = dof > 0 ? ssr / dof : std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd xtx_inv =
      (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));
  for (Eigen::Index k = 0; k < cols; ++k) out.std_errors.push_back(std::sqrt(sigma2 * xtx_inv(k, k)));
  return out;
}

// ---------------------------------------------------------------------------
// Regressions on elicited beliefs

struct RegressionReport {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  double r_squared = 0.0;
  long observations = 0;
  bool degenerate = false;
  std::string note;

  std::optional<double> coefficient(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == name) return coefficients[k];
    }
    return std::nullopt;
  }
};

struct SignReport {
  RegressionReport contribution;  // contribute ~ belief + stake
  RegressionReport updating;      // belief ~ lag belief + lag success + stake change
  bool belief_positive = false;
  bool lagged_belief_positive = false;
  bool lagged_success_positive = false;

  bool agrees() const noexcept { return belief_positive && lagged_belief_positive && lagged_success_positive; }
};

namespace detail {

/// Drops non-intercept columns without variance, then fits; failures become a degenerate report.
inline RegressionReport fit_report(const std::vector<double>& y, const std::vector<std::vector<double>>& columns,
                                   const std::vector<std::string>& names) {
  RegressionReport rep;
  rep.observations = static_cast<long>(y.size());
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (y.empty() || *lo == *hi) {
    rep.degenerate = true;
    rep.note = "no variance in the dependent variable";
    return rep;
  }
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const auto [clo, chi] = std::minmax_element(columns[k].begin(), columns[k].end());
    if (*clo == *chi) {
      rep.note += (rep.note.empty() ? "" : "; ") + names[k] + " dropped (constant)";
      continue;
    }
    kept.push_back(k);
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(kept.size() + 1));
  Eigen::VectorXd yy(static_cast<Eigen::Index>(y.size()));
  rep.names.push_back("intercept");
  for (std::size_t k : kept) rep.names.push_back(names[k]);
  for (std::size_t i = 0; i < y.size(); ++i) {
    yy(i) = y[i];
    x(i, 0) = 1.0;
    for (std::size_t k = 0; k < kept.size(); ++k) x(i, k + 1) = columns[kept[k]][i];
  }
  try {
    const auto fit = ols(yy, x, rep.names);
    rep.coefficients = fit.coefficients;
    rep.std_errors = fit.std_errors;
    rep.r_squared = fit.r_squared;
  } catch (const StatsError& e) {
    rep.degenerate = true;
    rep.note += (rep.note.empty() ? "" : "; ") + std::string(e.what());
  }
  return rep;
}

}  // namespace detail

inline SignReport elicitation_regressions(std::span<const SessionRecord> sessions) {
  std::vector<double> contrib, belief, stake;
  std::vector<double> belief_t, lag_belief, lag_success, stake_change;
  bool has_lag = false;
  for (const auto& s : sessions) {
    for (const auto& g : s.groups) {
      for (std::size_t t = 0; t < g.periods.size(); ++t) {
        const auto& p = g.periods[t];
        for (std::size_t i = 0; i < p.actions.size(); ++i) {
          contrib.push_back(p.actions[i] == Action::Contribute ? 1.0 : 0.0);
          belief.push_back(p.elicited_beliefs[i]);
          stake.push_back(p.stake);
          if (t == 0) continue;
          has_lag = true;
          const auto& prev = g.periods[t - 1];
          belief_t.push_back(p.elicited_beliefs[i]);
          lag_belief.push_back(prev.elicited_beliefs[i]);
          lag_success.push_back(prev.success ? 1.0 : 0.0);
          stake_change.push_back(p.stake - prev.stake);
        }
      }
    }
  }
  if (!has_lag) throw StatsError("belief-updating regression needs at least two periods");

  SignReport report;
  report.contribution = detail::fit_report(contrib, {belief, stake}, {"belief", "stake"});
  report.updating = detail::fit_report(belief_t, {lag_belief, lag_success, stake_change},
                                       {"lag_belief", "lag_success", "stake_change"});
  auto positive = [](const RegressionReport& r, const std::string& name) {
    const auto c = r.coefficient(name);
    return !r.degenerate && c && *c > 0.0;
  };
  report.belief_positive = positive(report.contribution, "belief");
  report.lagged_belief_positive = positive(report.updating, "lag_belief");
  report.lagged_success_positive = positive(report.updating, "lag_success");
  return report;
}

}  // namespace coord
