#pragma once

// Experiment orchestration: presets mirroring the laboratory design, a
// deterministic parallel replication runner, coupled mechanism comparison
// over many sampled groups, and the laboratory replication report.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "coord/beliefs.hpp"
#include "coord/engine.hpp"
#include "coord/io.hpp"
#include "coord/mechanisms.hpp"
#include "coord/schedule.hpp"
#include "coord/stats.hpp"

namespace coord {

namespace treatment {
inline constexpr const char* kBigBang = "big_bang";
inline constexpr const char* kSemiGradualism = "semi_gradualism";
inline constexpr const char* kGradualism = "gradualism";
inline constexpr const char* kHighShowUpFee = "high_show_up_fee";
}  // namespace treatment

struct LabAnchor {
  const char* treatment;
  int groups;  // groups observed in the laboratory
};

inline constexpr LabAnchor kLabGroups[] = {
    {treatment::kBigBang, 18},
    {treatment::kSemiGradualism, 18},
    {treatment::kGradualism, 18},
    {treatment::kHighShowUpFee, 10},
};

/// Four treatments of the laboratory design: 20-point endowment, alpha = 2,
/// twelve stage-1 periods with stake 14 from period 7, fee 400 (480 for the
/// high-fee Big Bang variant), then eight stage-2 periods at stake 14.
inline SessionConfig lab_session_config(std::uint64_t seed, int groups_per_treatment = 1) {
  SessionConfig c;
  c.game = GameParams{};
  c.seed = seed;
  c.stage2_periods = 8;
  c.stage2_stake = 14;
  c.exchange_rate = 40.0;
  const auto& g = c.game;
  auto bb = make_schedule(ScheduleKind::BigBang, 14, 14, 0, 6, 12, g);
  auto semi = make_schedule(ScheduleKind::SemiGradualism, 2, 14, 0, 6, 12, g);
  auto grad = make_schedule(ScheduleKind::Gradualism, 2, 14, 2, 6, 12, g);
  c.treatments = {
      {treatment::kBigBang, bb, groups_per_treatment, 400.0},
      {treatment::kSemiGradualism, semi, groups_per_treatment, 400.0},
      {treatment::kGradualism, grad, groups_per_treatment, 400.0},
      {treatment::kHighShowUpFee, bb, groups_per_treatment, 480.0},
  };
  return c;
}

/// All 64 laboratory groups (18/18/18/10) in one reshuffle pool.
inline SessionConfig lab_experiment_config(std::uint64_t seed) {
  auto c = lab_session_config(seed);
  for (auto& t : c.treatments) {
    for (const auto& a : kLabGroups) {
      if (t.name == a.treatment) t.group_count = a.groups;
    }
  }
  return c;
}

struct SynthesisConfig {
  std::vector<BeliefCurve> curves;  // empty: sample one group from the session's beliefs
  int target = 14;
  int max_periods = 12;

  bool operator==(const SynthesisConfig&) const = default;
};

struct ExperimentConfig {
  SessionConfig session = lab_session_config(1);
  int replications = 1;
  std::optional<CalibrationTarget> calibration;  // overrides session.beliefs when present
  int threads = 0;                               // 0: hardware concurrency
  std::string out_dir = "out";
  std::optional<std::string> treatment;          // keep only this stage-1 treatment
  std::string format = "csv";
  int regression_replications = 1000;
  SynthesisConfig synthesis;

  void validate() const {
    session.validate();
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    if (threads < 0) throw ConfigError("threads must be non-negative");
    if (regression_replications < 0) throw ConfigError("regression_replications must be non-negative");
  }

  /// Session with calibration and treatment filter applied.
  SessionConfig effective_session() const {
    SessionConfig s = session;
    if (calibration) s.beliefs = calibrate_beliefs(*calibration, s.game);
    if (treatment) {
      std::vector<TreatmentConfig> kept;
      for (const auto& t : s.treatments) {
        if (t.name == *treatment) kept.push_back(t);
      }
      if (kept.empty()) throw ConfigError("no treatment named '" + *treatment + "'");
      s.treatments = std::move(kept);
    }
    s.validate();
    return s;
  }

  bool operator==(const ExperimentConfig&) const = default;
};

inline void to_json(json& j, const SynthesisConfig& s) {
  j = {{"curves", s.curves}, {"target", s.target}, {"max_periods", s.max_periods}};
}

inline void from_json(const json& j, SynthesisConfig& s) {
  check_keys(j, {"curves", "target", "max_periods"}, "synthesis");
  SynthesisConfig d;
  s.curves = j.value("curves", d.curves);
  s.target = j.value("target", d.target);
  s.max_periods = j.value("max_periods", d.max_periods);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = c.session;
  j["replications"] = c.replications;
  if (c.calibration) j["calibration"] = *c.calibration;
  j["threads"] = c.threads;
  j["out"] = c.out_dir;
  if (c.treatment) j["treatment"] = *c.treatment;
  j["format"] = c.format;
  j["regression_replications"] = c.regression_replications;
  j["synthesis"] = c.synthesis;
}

inline void from_json(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    const bool session_key = std::find_if(kSessionKeys.begin(), kSessionKeys.end(),
                                          [&](const char* k) { return key == k; }) != kSessionKeys.end();
    static const char* extra[] = {"replications", "calibration", "threads", "out", "treatment",
                                  "format", "regression_replications", "synthesis"};
    const bool extra_key =
        std::find_if(std::begin(extra), std::end(extra), [&](const char* k) { return key == k; }) != std::end(extra);
    if (!session_key && !extra_key) throw ConfigError("unknown key '" + key + "' in config");
  }
  ExperimentConfig d;
  c.session = d.session;
  read_session_fields(j, c.session);
  if (!j.contains("treatments")) c.session.treatments = d.session.treatments;
  c.replications = j.value("replications", d.replications);
  c.calibration = j.contains("calibration") ? std::optional(j.at("calibration").get<CalibrationTarget>())
                                            : std::nullopt;
  c.threads = j.value("threads", d.threads);
  c.out_dir = j.value("out", d.out_dir);
  c.treatment = j.contains("treatment") ? std::optional(j.at("treatment").get<std::string>()) : std::nullopt;
  c.format = j.value("format", d.format);
  c.regression_replications = j.value("regression_replications", d.regression_replications);
  c.synthesis = j.value("synthesis", d.synthesis);
}

// ---------------------------------------------------------------------------
// Parallel runner

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// results[i] = fn(first + i); each index is computed exactly once, so output
/// does not depend on the number of workers.
template <typename F>
auto parallel_map(std::uint64_t first, std::size_t count, int threads, F&& fn) {
  using R = decltype(fn(first));
  std::vector<R> results(count);
  const int workers = std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(first + i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          results[i] = fn(first + i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

inline constexpr std::size_t kBatchSize = 512;

/// Runs replications 0..n-1 in batches; sink(record) is called in replication order.
template <typename Sink>
void run_replications(const SessionConfig& session, int replications, int threads, Sink&& sink) {
  for (std::size_t start = 0; start < static_cast<std::size_t>(replications); start += kBatchSize) {
    const std::size_t count = std::min(kBatchSize, replications - start);
    auto batch = parallel_map(start, count, threads, [&](std::uint64_t rep) { return run_session(session, rep); });
    for (auto& rec : batch) sink(std::move(rec));
  }
}

// ---------------------------------------------------------------------------
// Coupled comparison over sampled groups

struct CompareSummary {
  long replications = 0;
  long violations = 0;
  int first_period = 0;
  int last_period = 0;
  std::vector<std::string> schedules;
  std::vector<std::vector<double>> success_rate;  // [schedule][period in window]

  bool chain_holds() const noexcept { return violations == 0; }

  /// Average success rates ordered like the chain.
  bool rates_ordered() const {
    for (std::size_t k = 0; k + 1 < success_rate.size(); ++k) {
      for (std::size_t t = 0; t < success_rate[k].size(); ++t) {
        if (success_rate[k + 1][t] > success_rate[k][t]) return false;
      }
    }
    return true;
  }
};

inline void to_json(json& j, const CompareSummary& s) {
  json rows = json::array();
  for (std::size_t k = 0; k < s.schedules.size(); ++k) {
    rows.push_back({{"schedule", s.schedules[k]}, {"success_rate", s.success_rate[k]}});
  }
  j = {{"replications", s.replications}, {"first_period", s.first_period}, {"last_period", s.last_period},
       {"violations", s.violations},     {"chain_holds", s.chain_holds()},  {"rates_ordered", s.rates_ordered()},
       {"schedules", rows}};
}

/// Schedules ordered gradualism, semi-gradualism, big bang; duplicates by stakes dropped.
inline std::vector<StakeSchedule> chain_schedules(const SessionConfig& session) {
  std::vector<StakeSchedule> out;
  for (auto kind : {ScheduleKind::Gradualism, ScheduleKind::SemiGradualism, ScheduleKind::BigBang,
                    ScheduleKind::Custom}) {
    for (const auto& t : session.treatments) {
      if (t.schedule.kind != kind) continue;
      const bool dup = std::any_of(out.begin(), out.end(),
                                   [&](const StakeSchedule& s) { return s.stakes == t.schedule.stakes; });
      if (!dup) out.push_back(t.schedule);
    }
  }
  return out;
}

inline std::vector<BeliefCurve> sample_group(const SessionConfig& session, std::uint64_t replication,
                                             StreamPurpose purpose) {
  std::vector<BeliefCurve> curves;
  for (int k = 0; k < session.game.group_size; ++k) {
    Stream stream = Stream::for_purpose(session.seed, replication, purpose, static_cast<std::uint64_t>(k));
    curves.push_back(sample_initial(session.beliefs, session.game, stream));
  }
  return curves;
}

inline CompareSummary compare_replications(const SessionConfig& session, int replications, int threads) {
  const auto schedules = chain_schedules(session);
  CompareSummary out;
  for (const auto& s : schedules) out.schedules.push_back(to_string(s.kind));
  std::vector<std::vector<long>> hits;
  for (std::size_t start = 0; start < static_cast<std::size_t>(replications); start += kBatchSize) {
    const std::size_t count = std::min(kBatchSize, replications - start);
    auto reports = parallel_map(start, count, threads, [&](std::uint64_t rep) {
      const auto curves = sample_group(session, rep, StreamPurpose::Compare);
      return coupled_compare(curves, schedules, session.game, session.update);
    });
    for (const auto& r : reports) {
      if (hits.empty()) {
        out.first_period = r.first_period;
        out.last_period = r.last_period;
        hits.assign(r.outcomes.size(), std::vector<long>(r.outcomes.front().success.size(), 0));
      }
      out.violations += r.violations;
      ++out.replications;
      for (std::size_t k = 0; k < r.outcomes.size(); ++k) {
        for (std::size_t t = 0; t < r.outcomes[k].success.size(); ++t) hits[k][t] += r.outcomes[k].success[t];
      }
    }
  }
  for (const auto& h : hits) {
    std::vector<double> rates;
    for (long v : h) rates.push_back(static_cast<double>(v) / out.replications);
    out.success_rate.push_back(std::move(rates));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Laboratory replication

struct CriterionResult {
  std::string id;
  std::string description;
  bool passed = false;
  std::string detail;
};

inline void to_json(json& j, const CriterionResult& c) {
  j = {{"id", c.id}, {"description", c.description}, {"passed", c.passed}, {"detail", c.detail}};
}

struct ReplicationReport {
  RunSummary summary;
  SignReport signs;
  std::vector<CriterionResult> criteria;
  std::map<std::string, MannWhitneyResult> gradualism_vs;  // group-level mean success, periods 7-12
  double seconds = 0.0;
  int replications = 0;

  bool all_passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
  }
};

inline double lab_standard_error(double p, int groups) { return std::sqrt(p * (1.0 - p) / groups); }

inline int lab_groups(const std::string& name) {
  for (const auto& a : kLabGroups) {
    if (name == a.treatment) return a.groups;
  }
  return 0;
}

namespace detail {

inline double cell_value(const RunSummary& s, const std::string& t, int period, double SummaryCell::*field) {
  const auto* c = s.find(t, period);
  if (!c) throw StatsError("summary lacks " + t + " period " + std::to_string(period));
  return c->*field;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

/// Headline criteria evaluated on a simulated replication of the laboratory design.
inline std::vector<CriterionResult> evaluate_lab_criteria(const RunSummary& s, const SignReport& signs,
                                                            int stage2_first) {
  using detail::cell_value;
  using detail::fmt;
  std::vector<CriterionResult> out;
  const auto success = &SummaryCell::success_rate;
  const auto contribution = &SummaryCell::contribution_rate;

  {
    CriterionResult c{"1", "period-7 success within 2 SE of 0.167 / 0.333 / 0.667 and Gradualism > Semi >= Big Bang"};
    const double bb = cell_value(s, treatment::kBigBang, 7, success);
    const double semi = cell_value(s, treatment::kSemiGradualism, 7, success);
    const double grad = cell_value(s, treatment::kGradualism, 7, success);
    bool ok = true;
    for (auto [name, sim, target] : {std::tuple{treatment::kBigBang, bb, 0.167},
                                    std::tuple{treatment::kSemiGradualism, semi, 0.333},
                                    std::tuple{treatment::kGradualism, grad, 0.667}}) {
      const double se = lab_standard_error(target, lab_groups(name));
      const bool within = std::abs(sim - target) <= 2.0 * se;
      ok = ok && within;
      c.detail += std::string(name) + " sim " + fmt(sim) + " target " + fmt(target) + " 2SE " + fmt(2 * se) +
                  (within ? " ok; " : " OUT; ");
    }
    const bool ordered = grad > semi && grad > bb && semi >= bb;
    c.detail += ordered ? "ordering ok" : "ordering violated";
    c.passed = ok && ordered;
    out.push_back(std::move(c));
  }
  {
    CriterionResult c{"2", "Gradualism period-12 success within 2 SE of 0.611"};
    const double grad = cell_value(s, treatment::kGradualism, 12, success);
    const double se = lab_standard_error(0.611, lab_groups(treatment::kGradualism));
    c.passed = std::abs(grad - 0.611) <= 2.0 * se;
    c.detail = "sim " + fmt(grad) + " 2SE " + fmt(2 * se);
    out.push_back(std::move(c));
  }
  {
    CriterionResult c{"3", "period-1 contribution: low-stake >= 0.90, high-stake 0.60 +/- 0.02"};
    const double semi = cell_value(s, treatment::kSemiGradualism, 1, contribution);
    const double grad = cell_value(s, treatment::kGradualism, 1, contribution);
    const double bb = cell_value(s, treatment::kBigBang, 1, contribution);
    bool ok = semi >= 0.90 && grad >= 0.90 && std::abs(bb - 0.60) <= 0.02;
    c.detail = "semi " + fmt(semi) + " grad " + fmt(grad) + " big_bang " + fmt(bb);
    if (const auto* hsf = s.find(treatment::kHighShowUpFee, 1)) {
      ok = ok && std::abs(hsf->contribution_rate - 0.60) <= 0.02;
      c.detail += " high_fee " + fmt(hsf->contribution_rate);
    }
    c.passed = ok;
    out.push_back(std::move(c));
  }
  {
    CriterionResult c{"6", "stage-2: Gradualism-origin contribution exceeds others by >= 5pp in period 1, gap shrinks in period 2"};
    auto gap_at = [&](int period) {
      double others = 0.0, agents = 0.0, grad = 0.0;
      for (const auto& cell : s.cells) {
        if (cell.period != period) continue;
        if (cell.treatment == treatment::kGradualism) {
          grad = cell.contribution_rate;
        } else {
          others += cell.contribution_rate * cell.agents;
          agents += cell.agents;
        }
      }
      return std::pair{grad, agents > 0 ? others / agents : 0.0};
    };
    const auto [g1, o1] = gap_at(stage2_first);
    const auto [g2, o2] = gap_at(stage2_first + 1);
    c.passed = (g1 - o1) >= 0.05 && (g2 - o2) < (g1 - o1);
    c.detail = "period " + std::to_string(stage2_first) + ": " + fmt(g1) + " vs " + fmt(o1) + "; period " +
               std::to_string(stage2_first + 1) + ": " + fmt(g2) + " vs " + fmt(o2);
    out.push_back(std::move(c));
  }
  {
    CriterionResult c{"7", "positive belief, lagged-belief and lagged-success coefficients"};
    c.passed = signs.agrees();
    c.detail = "belief " + std::string(signs.belief_positive ? "+" : "x") + " lag_belief " +
               (signs.lagged_belief_positive ? "+" : "x") + " lag_success " +
               (signs.lagged_success_positive ? "+" : "x");
    out.push_back(std::move(c));
  }
  return out;
}

inline ReplicationReport replicate_lab(const SessionConfig& session, int replications, int threads,
                                         int regression_replications) {
  const auto start = std::chrono::steady_clock::now();
  ReplicationReport report;
  report.replications = replications;

  SummaryBuilder summary;
  std::vector<SessionRecord> regression_sample;
  std::map<std::string, std::vector<double>> high_stake_success;  // per stage-1 group
  int n1 = 0;
  for (const auto& t : session.treatments) {
    if (t.schedule.kind != ScheduleKind::BigBang) n1 = std::max(n1, t.schedule.switch_period);
  }
  const int n = session.stage1_length();

  run_replications(session, replications, threads, [&](SessionRecord rec) {
    summary.add(rec);
    for (const auto& g : rec.groups) {
      if (g.stage != 1 || static_cast<int>(g.periods.size()) <= n1) continue;
      double hits = 0.0;
      for (int t = n1; t < static_cast<int>(g.periods.size()); ++t) hits += g.periods[t].success;
      high_stake_success[g.treatment].push_back(hits / (g.periods.size() - n1));
    }
    if (rec.replication < static_cast<std::uint64_t>(regression_replications)) {
      regression_sample.push_back(std::move(rec));
    }
  });
  report.summary = summary.finish();
  report.signs = elicitation_regressions(regression_sample);
  const auto& grad = high_stake_success[treatment::kGradualism];
  for (const auto& [name, values] : high_stake_success) {
    if (name != treatment::kGradualism && !grad.empty()) report.gradualism_vs[name] = mann_whitney_u(grad, values);
  }
  report.criteria = evaluate_lab_criteria(report.summary, report.signs, n + 1);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline json report_json(const ReplicationReport& r) {
  json mw = json::object();
  for (const auto& [name, res] : r.gradualism_vs) {
    mw[name] = {{"u_gradualism", res.u_a}, {"u_other", res.u_b}, {"p_value", res.p_value}, {"exact", res.exact}};
  }
  return {{"replications", r.replications},
          {"criteria", r.criteria},
          {"all_passed", r.all_passed()},
          {"regressions", r.signs},
          {"mann_whitney_high_stake_success", mw}};
}

inline std::string report_text(const ReplicationReport& r) {
  std::string out;
  for (const auto& c : r.criteria) {
    out += std::string(c.passed ? "PASS" : "FAIL") + " [" + c.id + "] " + c.description + " :: " + c.detail + '\n';
  }
  return out;
}

/// Figure-style CSVs: success by period, cumulative earnings, contribution by period.
inline std::string figure_csv(const RunSummary& s, double SummaryCell::*field, const char* column) {
  std::string out = std::string("treatment,stage,period,") + column + '\n';
  for (const auto& c : s.cells) {
    out += c.treatment + ',' + std::to_string(c.stage) + ',' + std::to_string(c.period) + ',' +
           format_number(c.*field) + '\n';
  }
  return out;
}

}  // namespace coord
