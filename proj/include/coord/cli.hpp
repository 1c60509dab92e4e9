#pragma once

// Command-line front end: simulate | calibrate | compare | synthesize | analyze | replicate-paper.
//
// Exit codes: 0 success, 1 usage, 2 config or output error, 3 acceptance
// failure (replicate-paper only).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coord/error.hpp"
#include "coord/experiment.hpp"
#include "coord/io.hpp"
#include "coord/mechanisms.hpp"
#include "coord/stats.hpp"

namespace coord {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitAcceptance = 3 };

struct CliOptions {
  std::string subcommand;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<std::string> out_dir;
  std::optional<std::string> treatment;
  std::optional<std::string> format;
  std::optional<int> threads;
  std::vector<std::string> inputs;
};

inline ExperimentConfig load_experiment(const CliOptions& opts) {
  ExperimentConfig cfg;
  if (opts.config_path) {
    try {
      cfg = parse_json_file(*opts.config_path).get<ExperimentConfig>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid config: ") + e.what());
    }
  } else if (opts.subcommand == "replicate-paper") {
    cfg.replications = 10000;
  }
  if (opts.seed) cfg.session.seed = *opts.seed;
  if (opts.replications) cfg.replications = *opts.replications;
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  if (opts.treatment) cfg.treatment = *opts.treatment;
  if (opts.format) cfg.format = *opts.format;
  if (opts.threads) cfg.threads = *opts.threads;
  cfg.validate();
  return cfg;
}

namespace cli_detail {

inline std::filesystem::path out_path(const ExperimentConfig& cfg, const char* name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

inline int simulate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto session = cfg.effective_session();
  SummaryBuilder summary;
  std::string csv = std::string(kFlatCsvHeader) + '\n';
  json records = json::array();
  run_replications(session, cfg.replications, cfg.threads, [&](SessionRecord rec) {
    summary.add(rec);
    if (cfg.format == "csv") {
      append_flat_csv(csv, flatten(rec));
    } else {
      records.push_back(rec);
    }
  });
  const auto s = summary.finish();
  ExperimentConfig emitted = cfg;
  emitted.session = session;
  emitted.calibration.reset();
  emitted.treatment.reset();
  write_file_atomic(out_path(cfg, "config.json"), json(emitted).dump(2) + '\n');
  if (cfg.format == "csv") {
    write_file_atomic(out_path(cfg, "periods.csv"), csv);
    write_file_atomic(out_path(cfg, "summary.csv"), summary_csv(s));
  } else {
    write_file_atomic(out_path(cfg, "records.json"), records.dump() + '\n');
    write_file_atomic(out_path(cfg, "summary.json"), json(s).dump(2) + '\n');
  }
  out << "simulated " << cfg.replications << " replication(s) into " << cfg.out_dir << '\n';
  return kExitOk;
}

inline int calibrate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto targets = cfg.calibration.value_or(CalibrationTarget::defaults());
  const auto fitted = calibrate_beliefs(targets, cfg.session.game);
  json j = fitted;
  j["targets"] = targets;
  write_file_atomic(out_path(cfg, "beliefs.json"), j.dump(2) + '\n');
  out << "location " << format_number(fitted.location) << " spread " << format_number(fitted.spread) << '\n';
  return kExitOk;
}

inline int compare(const ExperimentConfig& cfg, std::ostream& out) {
  const auto session = cfg.effective_session();
  const auto summary = compare_replications(session, cfg.replications, cfg.threads);
  write_file_atomic(out_path(cfg, "dominance.json"), json(summary).dump(2) + '\n');
  out << "compared " << summary.replications << " coupled replication(s); chain violations: " << summary.violations
      << '\n';
  return kExitOk;
}

inline int synthesize(const ExperimentConfig& cfg, std::ostream& out) {
  const auto session = cfg.effective_session();
  auto curves = cfg.synthesis.curves;
  if (curves.empty()) curves = sample_group(session, 0, StreamPurpose::Synthesize);
  const auto result =
      synthesize_guaranteed_path(curves, cfg.synthesis.target, cfg.synthesis.max_periods, session.game, session.update);
  json j = result;
  j["curves"] = curves;
  write_file_atomic(out_path(cfg, "synthesis.json"), j.dump(2) + '\n');
  if (result.reached()) {
    write_file_atomic(out_path(cfg, "schedule.json"), json(result.schedule).dump(2) + '\n');
  }
  out << "synthesis " << to_string(result.status) << ", " << result.schedule.stakes.size() << " period(s)"
      << (result.verified ? ", verified" : "") << '\n';
  return kExitOk;
}

inline int analyze(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, std::ostream& out) {
  if (inputs.empty()) throw ConfigError("analyze needs at least one records file (.json or .csv)");
  SummaryBuilder summary;
  std::vector<SessionRecord> sessions;
  for (const auto& path : inputs) {
    if (std::filesystem::path(path).extension() == ".csv") {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot read " + path);
      const auto rows = parse_flat_csv(in);
      for (const auto& o : observations(rows, cfg.session.game.group_size)) summary.add(o);
    } else {
      try {
        auto j = parse_json_file(path);
        auto more = j.get<std::vector<SessionRecord>>();
        for (auto& s : more) {
          summary.add(s);
          sessions.push_back(std::move(s));
        }
      } catch (const json::exception& e) {
        throw ConfigError("invalid records in " + path + ": " + e.what());
      }
    }
  }
  const auto s = summary.finish();
  if (cfg.format == "csv") {
    write_file_atomic(out_path(cfg, "summary.csv"), summary_csv(s));
  } else {
    write_file_atomic(out_path(cfg, "summary.json"), json(s).dump(2) + '\n');
  }
  if (!sessions.empty()) {
    const auto signs = elicitation_regressions(sessions);
    write_file_atomic(out_path(cfg, "signs.json"), json(signs).dump(2) + '\n');
  }
  out << "summarized " << s.cells.size() << " cell(s) into " << cfg.out_dir << '\n';
  return kExitOk;
}

inline int replicate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto session = cfg.effective_session();
  const auto report = replicate_lab(session, cfg.replications, cfg.threads, cfg.regression_replications);
  const auto& s = report.summary;
  write_file_atomic(out_path(cfg, "figure2_success.csv"), figure_csv(s, &SummaryCell::success_rate, "success_rate"));
  write_file_atomic(out_path(cfg, "figure3_earnings.csv"),
                    figure_csv(s, &SummaryCell::cumulative_mean_earnings, "cumulative_mean_earnings"));
  write_file_atomic(out_path(cfg, "figure4_contribution.csv"),
                    figure_csv(s, &SummaryCell::contribution_rate, "contribution_rate"));
  write_file_atomic(out_path(cfg, "summary.csv"), summary_csv(s));
  write_file_atomic(out_path(cfg, "acceptance.json"), report_json(report).dump(2) + '\n');
  write_file_atomic(out_path(cfg, "acceptance.txt"), report_text(report));
  out << report_text(report);
  return report.all_passed() ? kExitOk : kExitAcceptance;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Belief-learning simulator for weakest-link coordination under stake schedules", "coordsim"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOptions opts;
  app.add_option("--config", opts.config_path, "experiment config (JSON)");
  app.add_option("--seed", opts.seed, "master seed");
  app.add_option("--replications", opts.replications, "number of replications")->check(CLI::PositiveNumber);
  app.add_option("--out", opts.out_dir, "output directory");
  app.add_option("--treatment", opts.treatment, "keep only this treatment");
  app.add_option("--format", opts.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", opts.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"simulate", "run sessions and write per-period records and a summary"},
      {"calibrate", "fit the initial-belief distribution to period-1 contribution targets"},
      {"compare", "coupled mechanism comparison over sampled groups"},
      {"synthesize", "construct a stake path with guaranteed success"},
      {"analyze", "re-summarize existing record files"},
      {"replicate-paper", "run the laboratory design and check the headline rates"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (std::string(name) == "analyze") sub->add_option("inputs", opts.inputs, "records (.json) or per-period (.csv)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  opts.subcommand = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = load_experiment(opts);
    if (opts.subcommand == "simulate") return cli_detail::simulate(cfg, out);
    if (opts.subcommand == "calibrate") return cli_detail::calibrate(cfg, out);
    if (opts.subcommand == "compare") return cli_detail::compare(cfg, out);
    if (opts.subcommand == "synthesize") return cli_detail::synthesize(cfg, out);
    if (opts.subcommand == "analyze") return cli_detail::analyze(cfg, opts.inputs, out);
    if (opts.subcommand == "replicate-paper") return cli_detail::replicate(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  err << "error: unknown subcommand\n";
  return kExitUsage;
}

}  // namespace coord
