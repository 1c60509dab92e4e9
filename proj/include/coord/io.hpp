#pragma once

// JSON and CSV encodings of configs, records and reports, plus
// write-then-rename file output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coord/beliefs.hpp"
#include "coord/engine.hpp"
#include "coord/error.hpp"
#include "coord/game.hpp"
#include "coord/mechanisms.hpp"
#include "coord/schedule.hpp"
#include "coord/stats.hpp"

namespace coord {

using json = nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError(std::string("unknown key '") + key + "' in " + what);
  }
}

// --- game / beliefs --------------------------------------------------------

inline void to_json(json& j, const GameParams& g) {
  j = {{"group_size", g.group_size}, {"multiplier", g.multiplier}, {"endowment", g.endowment},
       {"grid_max", g.grid_max}};
}

inline void from_json(const json& j, GameParams& g) {
  check_keys(j, {"group_size", "multiplier", "endowment", "grid_max"}, "game");
  GameParams d;
  g.group_size = j.value("group_size", d.group_size);
  g.multiplier = j.value("multiplier", d.multiplier);
  g.endowment = j.value("endowment", d.endowment);
  g.grid_max = j.value("grid_max", d.grid_max);
}

inline void to_json(json& j, Action a) { j = to_string(a); }

inline void from_json(const json& j, Action& a) {
  const auto s = j.get<std::string>();
  if (s == "C") a = Action::Contribute;
  else if (s == "NC") a = Action::NotContribute;
  else throw ConfigError("unknown action '" + s + "'");
}

inline void to_json(json& j, const BeliefCurve& c) { j = c.values(); }

inline void from_json(const json& j, BeliefCurve& c) { c = BeliefCurve(j.get<std::vector<double>>()); }

inline KernelForm kernel_form_from_string(const std::string& s) {
  if (s == "exponential") return KernelForm::Exponential;
  if (s == "linear") return KernelForm::Linear;
  if (s == "step") return KernelForm::Step;
  throw ConfigError("unknown kernel form '" + s + "'");
}

inline void to_json(json& j, const UpdateParams& u) {
  j = {{"kernel_form", to_string(u.kernel_form)}, {"kernel_scale", u.kernel_scale},
       {"failure_cap", u.failure_cap}};
}

inline void from_json(const json& j, UpdateParams& u) {
  check_keys(j, {"kernel_form", "kernel_scale", "failure_cap"}, "update");
  UpdateParams d;
  u.kernel_form = kernel_form_from_string(j.value("kernel_form", std::string(to_string(d.kernel_form))));
  u.kernel_scale = j.value("kernel_scale", d.kernel_scale);
  u.failure_cap = j.value("failure_cap", d.failure_cap);
}

inline void to_json(json& j, const InitialBeliefParams& b) {
  j = {{"location", b.location}, {"spread", b.spread}};
}

inline void from_json(const json& j, InitialBeliefParams& b) {
  check_keys(j, {"location", "spread"}, "beliefs");
  InitialBeliefParams d;
  b.location = j.value("location", d.location);
  b.spread = j.value("spread", d.spread);
}

// --- schedules / sessions --------------------------------------------------

inline void to_json(json& j, const StakeSchedule& s) {
  j = {{"kind", to_string(s.kind)}, {"stakes", s.stakes}, {"high_stake", s.high_stake},
       {"low_stake", s.low_stake}, {"switch_period", s.switch_period}};
}

/// Accepts the explicit form (stakes + bounds) or the generator form (low/high/step/n1/n).
inline void from_json(const json& j, StakeSchedule& s) {
  check_keys(j, {"kind", "stakes", "high_stake", "low_stake", "switch_period", "low", "high", "step", "n1", "n"},
             "schedule");
  const auto kind = schedule_kind_from_string(j.value("kind", std::string("custom")));
  if (j.contains("stakes")) {
    s.kind = kind;
    s.stakes = j.at("stakes").get<std::vector<int>>();
    if (s.stakes.empty()) throw ConfigError("schedule has no periods");
    const int hi = *std::max_element(s.stakes.begin(), s.stakes.end());
    const int lo = *std::min_element(s.stakes.begin(), s.stakes.end());
    int plateau = static_cast<int>(s.stakes.size());
    while (plateau > 0 && s.stakes[plateau - 1] == hi) --plateau;
    s.high_stake = j.value("high_stake", hi);
    s.low_stake = j.value("low_stake", lo);
    s.switch_period = j.value("switch_period", plateau);
    return;
  }
  ScheduleSpec spec;
  spec.kind = kind;
  spec.low = j.value("low", spec.low);
  spec.high = j.value("high", spec.high);
  spec.step = j.value("step", spec.step);
  spec.n1 = j.value("n1", spec.n1);
  spec.n = j.value("n", spec.n);
  s = build_schedule(spec);
}

inline void to_json(json& j, const TreatmentConfig& t) {
  j = {{"name", t.name}, {"schedule", t.schedule}, {"group_count", t.group_count},
       {"show_up_fee", t.show_up_fee}};
}

inline void from_json(const json& j, TreatmentConfig& t) {
  check_keys(j, {"name", "schedule", "group_count", "show_up_fee"}, "treatment");
  TreatmentConfig d;
  t.name = j.at("name").get<std::string>();
  t.schedule = j.at("schedule").get<StakeSchedule>();
  t.group_count = j.value("group_count", d.group_count);
  t.show_up_fee = j.value("show_up_fee", d.show_up_fee);
}

inline void to_json(json& j, const SessionConfig& c) {
  j = {{"game", c.game},
       {"treatments", c.treatments},
       {"stage2_periods", c.stage2_periods},
       {"stage2_stake", c.stage2_stake},
       {"exchange_rate", c.exchange_rate},
       {"seed", c.seed},
       {"beliefs", c.beliefs},
       {"update", c.update},
       {"coupled_treatments", c.coupled_treatments}};
}

inline constexpr std::initializer_list<const char*> kSessionKeys = {
    "game", "treatments", "stage2_periods", "stage2_stake", "exchange_rate",
    "seed", "beliefs", "update", "coupled_treatments"};

/// Reads session fields from j; unknown keys are the caller's concern.
inline void read_session_fields(const json& j, SessionConfig& c) {
  SessionConfig d;
  c.game = j.value("game", d.game);
  c.treatments = j.value("treatments", d.treatments);
  c.stage2_periods = j.value("stage2_periods", d.stage2_periods);
  c.stage2_stake = j.value("stage2_stake", d.stage2_stake);
  c.exchange_rate = j.value("exchange_rate", d.exchange_rate);
  c.seed = j.value("seed", d.seed);
  c.beliefs = j.value("beliefs", d.beliefs);
  c.update = j.value("update", d.update);
  c.coupled_treatments = j.value("coupled_treatments", d.coupled_treatments);
}

inline void from_json(const json& j, SessionConfig& c) {
  check_keys(j, kSessionKeys, "session");
  read_session_fields(j, c);
}

// --- records -----------------------------------------------------------------

inline void to_json(json& j, const PeriodRecord& p) {
  j = {{"period", p.period},   {"stake", p.stake},     {"agent_ids", p.agent_ids},
       {"actions", p.actions}, {"success", p.success}, {"payoffs", p.payoffs},
       {"elicited_beliefs", p.elicited_beliefs}};
}

inline void from_json(const json& j, PeriodRecord& p) {
  p.period = j.at("period").get<int>();
  p.stake = j.at("stake").get<int>();
  p.agent_ids = j.at("agent_ids").get<std::vector<int>>();
  p.actions = j.at("actions").get<std::vector<Action>>();
  p.success = j.at("success").get<bool>();
  p.payoffs = j.at("payoffs").get<std::vector<double>>();
  p.elicited_beliefs = j.at("elicited_beliefs").get<std::vector<double>>();
}

inline void to_json(json& j, const GroupRecord& g) {
  j = {{"stage", g.stage}, {"treatment", g.treatment}, {"group_id", g.group_id},
       {"members", g.members}, {"periods", g.periods}};
}

inline void from_json(const json& j, GroupRecord& g) {
  g.stage = j.at("stage").get<int>();
  g.treatment = j.at("treatment").get<std::string>();
  g.group_id = j.at("group_id").get<int>();
  g.members = j.at("members").get<std::vector<int>>();
  g.periods = j.at("periods").get<std::vector<PeriodRecord>>();
}

inline void to_json(json& j, const AgentOutcome& a) {
  j = {{"id", a.id}, {"origin", a.origin}, {"points", a.points}, {"currency", a.currency}};
}

inline void from_json(const json& j, AgentOutcome& a) {
  a.id = j.at("id").get<int>();
  a.origin = j.at("origin").get<std::string>();
  a.points = j.at("points").get<double>();
  a.currency = j.at("currency").get<double>();
}

inline void to_json(json& j, const SessionRecord& s) {
  j = {{"replication", s.replication}, {"groups", s.groups}, {"agents", s.agents}};
}

inline void from_json(const json& j, SessionRecord& s) {
  s.replication = j.at("replication").get<std::uint64_t>();
  s.groups = j.at("groups").get<std::vector<GroupRecord>>();
  s.agents = j.at("agents").get<std::vector<AgentOutcome>>();
}

// --- reports -----------------------------------------------------------------

inline void to_json(json& j, const DominanceReport& r) {
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    outcomes.push_back({{"schedule", o.name}, {"success", std::vector<bool>(o.success.begin(), o.success.end())}});
  }
  j = {{"first_period", r.first_period}, {"last_period", r.last_period}, {"outcomes", outcomes},
       {"violations", r.violations}, {"chain_holds", r.chain_holds()}};
}

inline void to_json(json& j, const SynthesisResult& r) {
  j = {{"status", to_string(r.status)}, {"schedule", r.schedule}, {"verified", r.verified}};
}

inline void to_json(json& j, const SummaryCell& c) {
  j = {{"treatment", c.treatment},
       {"stage", c.stage},
       {"period", c.period},
       {"success_rate", c.success_rate},
       {"contribution_rate", c.contribution_rate},
       {"mean_payoff", c.mean_payoff},
       {"cumulative_mean_earnings", c.cumulative_mean_earnings},
       {"agents", c.agents},
       {"replications", c.replications}};
}

inline void to_json(json& j, const RunSummary& s) { j = {{"cells", s.cells}}; }

inline void to_json(json& j, const RegressionReport& r) {
  j = {{"names", r.names},           {"coefficients", r.coefficients}, {"std_errors", r.std_errors},
       {"r_squared", r.r_squared},   {"observations", r.observations}, {"degenerate", r.degenerate},
       {"note", r.note}};
}

inline void to_json(json& j, const SignReport& r) {
  j = {{"contribution_on_belief", r.contribution},
       {"belief_updating", r.updating},
       {"belief_positive", r.belief_positive},
       {"lagged_belief_positive", r.lagged_belief_positive},
       {"lagged_success_positive", r.lagged_success_positive},
       {"agrees_with_signs", r.agrees()}};
}

inline void to_json(json& j, const CalibrationTarget& t) {
  j = json::array();
  for (const auto& [stake, p] : t.points) j.push_back({{"stake", stake}, {"probability", p}});
}

inline void from_json(const json& j, CalibrationTarget& t) {
  t.points.clear();
  for (const auto& e : j) {
    check_keys(e, {"stake", "probability"}, "calibration target");
    t.points.emplace_back(e.at("stake").get<int>(), e.at("probability").get<double>());
  }
}

// --- CSV -----------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline constexpr const char* kFlatCsvHeader =
    "replication,treatment,stage,period,group_id,stake,n_contribute,success,mean_payoff,min_payoff";

inline void append_flat_csv(std::string& out, std::span<const FlatPeriodRow> rows) {
  for (const auto& r : rows) {
    out += std::to_string(r.replication) + ',' + r.treatment + ',' + std::to_string(r.stage) + ',' +
           std::to_string(r.period) + ',' + std::to_string(r.group_id) + ',' + std::to_string(r.stake) + ',' +
           std::to_string(r.n_contribute) + ',' + (r.success ? "1" : "0") + ',' + format_number(r.mean_payoff) +
           ',' + format_number(r.min_payoff) + '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::vector<FlatPeriodRow> parse_flat_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("replication,", 0) != 0) {
    throw ConfigError("per-period CSV must start with the header row: " + std::string(kFlatCsvHeader));
  }
  std::vector<FlatPeriodRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      FlatPeriodRow r;
      r.replication = std::stoull(f[0]);
      r.treatment = f[1];
      r.stage = std::stoi(f[2]);
      r.period = std::stoi(f[3]);
      r.group_id = std::stoi(f[4]);
      r.stake = std::stoi(f[5]);
      r.n_contribute = std::stoi(f[6]);
      r.success = f[7] == "1";
      r.mean_payoff = std::stod(f[8]);
      r.min_payoff = std::stod(f[9]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError("CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

inline constexpr const char* kSummaryCsvHeader =
    "treatment,stage,period,success_rate,contribution_rate,mean_payoff,cumulative_mean_earnings";

inline std::string summary_csv(const RunSummary& s) {
  std::string out = std::string(kSummaryCsvHeader) + '\n';
  for (const auto& c : s.cells) {
    out += c.treatment + ',' + std::to_string(c.stage) + ',' + std::to_string(c.period) + ',' +
           format_number(c.success_rate) + ',' + format_number(c.contribution_rate) + ',' +
           format_number(c.mean_payoff) + ',' + format_number(c.cumulative_mean_earnings) + '\n';
  }
  return out;
}

// --- files ---------------------------------------------------------------------

/// Writes to a sibling temporary file and renames it over path.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace coord
