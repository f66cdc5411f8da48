#pragma once
// Command-line surface. Five commands over the library:
//
//   run           one debate from a config file; transcript + metrics CSV
//   metrics       divergence snapshot of two distribution files
//   simulate-edt  the entropy-pairing Monte-Carlo study
//   eval          batch evaluation of a labeled CSV dataset
//   replay        recompute and verify a transcript's metric snapshots
//
// Exit codes: 0 success; 1 configuration/input problems; 2 a debate that
// aborted on a backend failure (run); 3 a replay mismatch.
//
// Everything here takes explicit streams so tests can drive the full
// command path in-process; main() just forwards argv.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "parley/agents.hpp"
#include "parley/agents_http.hpp"
#include "parley/config.hpp"
#include "parley/edt.hpp"
#include "parley/engine.hpp"
#include "parley/eval.hpp"
#include "parley/transcript.hpp"
#include "parley/util.hpp"

namespace parley {

// Instantiates an agent backend from its config entry. The slot ("a"/"b")
// fixes the default fixture key and the seed-derivation label.
inline AgentPtr make_agent(const AgentSpec& spec, const std::string& slot,
                           std::uint64_t run_seed) {
  std::string id = slot == "a" ? "A" : "B";
  if (spec.kind == "scripted") {
    nlohmann::json fixture;
    try {
      fixture = nlohmann::json::parse(detail::read_file(spec.fixture_path));
    } catch (const nlohmann::json::exception& e) {
      throw config_error("fixture " + spec.fixture_path +
                         " is not valid JSON: " + e.what());
    }
    std::string key = spec.fixture_id.empty() ? id : spec.fixture_id;
    return std::make_unique<ScriptedAgent>(key, std::move(fixture));
  }
  if (spec.kind == "synthetic") {
    std::uint64_t seed =
        spec.seed != 0 ? spec.seed : derive_seed(run_seed, "agent-" + slot);
    return std::make_unique<SyntheticAgent>(id, spec.truth_label,
                                            spec.entropy_target, spec.eta,
                                            seed, spec.p_correct,
                                            spec.truth_affinity);
  }
  if (spec.kind == "http") {
    return std::make_unique<HttpAgent>(id, spec.endpoint);
  }
  throw config_error("unknown agent kind: " + spec.kind);
}

inline std::unique_ptr<Judge> make_judge(const JudgeSpec& spec) {
  if (spec.kind == "constant") {
    return std::make_unique<ConstantJudge>(spec.gamma, spec.theta);
  }
  if (spec.kind == "scripted") {
    nlohmann::json table;
    try {
      table = nlohmann::json::parse(detail::read_file(spec.table_path));
    } catch (const nlohmann::json::exception& e) {
      throw config_error("judge table " + spec.table_path +
                         " is not valid JSON: " + e.what());
    }
    std::optional<JudgeVerdict> fallback;
    if (table.is_object() && table.contains("*")) {
      fallback = table.at("*").get<JudgeVerdict>();
      table.erase("*");
    }
    auto judge = std::make_unique<ScriptedJudge>(std::move(table));
    if (fallback) judge->set_default(*fallback);
    return judge;
  }
  if (spec.kind == "http") {
    return std::make_unique<LlmJudge>(spec.endpoint);
  }
  throw config_error("unknown judge kind: " + spec.kind);
}

// One CSV row per completed round, after a header row.
inline void write_metrics_csv(const std::string& path,
                              const std::vector<RoundRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write metrics csv: " + path);
  out << "round,delta,crit_a,crit_b,wd,kl_ab,kl_ba,js,ce_ab,ce_ba,mi,nmi,"
         "h_a,h_b\n";
  for (const auto& r : history) {
    const MetricSnapshot& s = r.snapshot;
    out << r.round << ',' << format_double(r.delta) << ','
        << format_double(r.crit_a) << ',' << format_double(r.crit_b) << ','
        << format_double(s.wd) << ',' << format_double(s.kl_ab) << ','
        << format_double(s.kl_ba) << ',' << format_double(s.js) << ','
        << format_double(s.ce_ab) << ',' << format_double(s.ce_ba) << ','
        << format_double(s.mi) << ',' << format_double(s.nmi) << ','
        << format_double(s.h_a) << ',' << format_double(s.h_b) << '\n';
  }
}

namespace detail {

// Output paths from the config resolve against --out-dir unless absolute.
inline std::string output_path(const std::string& configured,
                               const std::string& fallback,
                               const std::string& out_dir) {
  std::filesystem::path p(configured.empty() ? fallback : configured);
  if (p.is_relative()) p = std::filesystem::path(out_dir) / p;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p.string();
}

}  // namespace detail

inline int cmd_run(const std::string& config_path,
                   std::optional<std::uint64_t> seed_override,
                   const std::string& out_dir,
                   const std::string& log_level_override, std::ostream& out,
                   std::ostream& err) {
  RunConfig config;
  try {
    if (config_path.empty()) {
      throw config_error("run needs --config <file.json|file.toml>");
    }
    config = load_run_config(config_path);
    if (seed_override) config.debate.seed = *seed_override;
    if (!log_level_override.empty()) config.log_level = log_level_override;
    log_level() = log_level_from_string(config.log_level);
  } catch (const error& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }

  try {
    AgentPtr agent_a = make_agent(config.agent_a, "a", config.debate.seed);
    AgentPtr agent_b = make_agent(config.agent_b, "b", config.debate.seed);
    std::unique_ptr<Judge> judge = make_judge(config.judge);
    std::string transcript_path = detail::output_path(
        config.transcript_path, "transcript.jsonl", out_dir);
    std::string metrics_path =
        detail::output_path(config.metrics_csv_path, "metrics.csv", out_dir);
    JsonlTranscriptWriter writer(transcript_path);

    Engine engine(config.task, config.debate, *agent_a, *agent_b, *judge,
                  &writer);
    DebateOutcome outcome = engine.run();
    write_metrics_csv(metrics_path, outcome.history);

    out << "debate " << outcome.debate_id << '\n';
    out << "rounds used: " << outcome.rounds_used << '\n';
    out << "termination cause: " << to_string(outcome.termination_cause)
        << '\n';
    for (const auto& r : outcome.history) {
      out << "round " << r.round << ": delta " << format_double(r.delta)
          << ", argument quality A " << format_double(r.crit_a) << ", B "
          << format_double(r.crit_b) << '\n';
    }
    out << "final argument quality: A " << format_double(outcome.omega_a)
        << ", B " << format_double(outcome.omega_b)
        << (outcome.weighted ? "" : " (unweighted merge)") << '\n';
    if (outcome.p_final) {
      out << "P_f: " << nlohmann::json(*outcome.p_final).dump() << '\n';
      out << "top label: " << top_label(*outcome.p_final) << '\n';
    } else {
      out << "P_f: unavailable (debate aborted)\n";
    }
    if (!outcome.info_requests.empty()) {
      out << "information requested:\n";
      for (const auto& r : outcome.info_requests) out << "  - " << r << '\n';
    }
    out << "transcript: " << transcript_path << '\n';
    out << "metrics: " << metrics_path << '\n';
    return outcome.termination_cause == TerminationCause::agent_failure ? 2
                                                                        : 0;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_metrics(const std::string& path_a, const std::string& path_b,
                       const std::string& ground_name, double epsilon,
                       std::ostream& out, std::ostream& err) {
  try {
    auto read_dist = [](const std::string& path) {
      return nlohmann::json::parse(detail::read_file(path))
          .get<Categorical>();
    };
    Categorical a = read_dist(path_a);
    Categorical b = read_dist(path_b);
    MetricSnapshot snap =
        snapshot(a, b, ground_from_string(ground_name), epsilon);
    out << nlohmann::json(snap).dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_simulate_edt(const PairingOptions& options, std::ostream& out,
                            std::ostream& err) {
  try {
    PairingReport report = simulate_pairing(options);
    out << nlohmann::json(report).dump(2) << '\n';
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %8.4f %8.4f\n", "contrasting",
                  report.accuracy_contrasting, report.se_contrasting);
    out << "\npairing      accuracy   stderr\n" << line;
    std::snprintf(line, sizeof(line), "%-12s %8.4f %8.4f\n", "matched",
                  report.accuracy_matched, report.se_matched);
    out << line;
    return 0;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_eval(const std::string& dataset_path,
                    const std::string& config_path,
                    std::optional<std::uint64_t> seed_override,
                    int concurrency, bool labels_from_dataset,
                    const std::string& out_dir,
                    const std::string& log_level_override, std::ostream& out,
                    std::ostream& err) {
  RunConfig config;
  std::vector<EvalCase> cases;
  try {
    if (config_path.empty()) {
      throw config_error("eval needs --config for the agent and judge setup");
    }
    config = load_run_config(config_path);
    if (!log_level_override.empty()) config.log_level = log_level_override;
    log_level() = log_level_from_string(config.log_level);
    cases = load_cases_csv(dataset_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    DebateTask base_task = config.task;
    if (labels_from_dataset || base_task.class_labels.empty()) {
      std::set<std::string> seen;
      std::vector<std::string> labels;
      for (const auto& c : cases) {
        if (seen.insert(detail::normalize_label(c.truth_label)).second) {
          labels.push_back(c.truth_label);
        }
      }
      std::sort(labels.begin(), labels.end());
      base_task.class_labels = std::move(labels);
    }

    BatchOptions options;
    options.concurrency = concurrency;
    options.seed = seed_override ? *seed_override : config.debate.seed;
    options.transcript_dir =
        (std::filesystem::path(out_dir) / "transcripts").string();
    std::filesystem::create_directories(out_dir);

    AgentSpec spec_a = config.agent_a;
    AgentSpec spec_b = config.agent_b;
    AgentFactory factory = [spec_a, spec_b](const std::string& slot,
                                            const EvalCase&,
                                            std::uint64_t case_seed) {
      return make_agent(slot == "a" ? spec_a : spec_b, slot, case_seed);
    };
    JudgeSpec judge_spec = config.judge;
    JudgeFactory judge_factory = [judge_spec] {
      return make_judge(judge_spec);
    };

    EvalSummary summary = run_batch(cases, base_task, config.debate, factory,
                                    judge_factory, options);

    std::string summary_path =
        (std::filesystem::path(out_dir) / "eval_summary.json").string();
    std::ofstream summary_file(summary_path, std::ios::binary);
    if (!summary_file) {
      throw error("cannot write summary: " + summary_path);
    }
    summary_file << nlohmann::json(summary).dump(2) << '\n';
    std::string cases_path =
        (std::filesystem::path(out_dir) / "eval_cases.csv").string();
    write_case_csv(cases_path, summary);
    write_confusion_csv(
        (std::filesystem::path(out_dir) / "eval_confusion.csv").string(),
        summary);

    int failed = 0;
    for (const auto& row : summary.rows) failed += row.failed ? 1 : 0;
    out << "cases: " << summary.n_cases << " (" << failed << " failed)\n";
    out << "mean MRR: " << format_double(summary.mean_mrr) << '\n';
    out << "top-1 accuracy: " << format_double(summary.top1_accuracy) << '\n';
    out << "summary: " << summary_path << '\n';
    out << "per-case: " << cases_path << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_replay(const std::string& transcript_path, double tolerance,
                      std::ostream& out, std::ostream& err) {
  ReplayReport report;
  try {
    report = replay_transcript(transcript_path, tolerance);
  } catch (const parse_error& e) {
    err << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& check : report.rounds) {
    if (check.pass) {
      out << "round " << check.round << ": PASS\n";
    } else {
      out << "round " << check.round << ": FAIL\n";
      for (const auto& m : check.mismatches) out << "  " << m << '\n';
    }
  }
  if (report.incomplete_rounds > 0) {
    out << "skipped " << report.incomplete_rounds
        << " incomplete round(s)\n";
  }
  if (!report.pass) {
    for (const auto& check : report.rounds) {
      if (!check.pass) {
        err << "replay mismatch at round " << check.round << ": "
            << check.mismatches.front() << '\n';
        break;
      }
    }
    return 3;
  }
  out << "replay OK: " << report.rounds.size() << " round(s) verified\n";
  return 0;
}

// Full argv-driven entry point; main() forwards here.
inline int run_cli(int argc, const char* const* argv, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"structured two-agent debates with information-theoretic "
               "termination"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string log_level_name;
  app.add_option("--config", config_path,
                 "run configuration (.json or .toml)");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out-dir", out_dir, "directory for output artifacts");
  app.add_option("--log-level", log_level_name,
                 "debug, info, warn, error, or off");

  auto* run_cmd =
      app.add_subcommand("run", "run one debate from a config file");
  run_cmd->fallthrough();

  auto* metrics_cmd = app.add_subcommand(
      "metrics", "divergence snapshot of two distribution JSON files");
  metrics_cmd->fallthrough();
  std::string dist_a, dist_b;
  std::string ground_name = "discrete";
  double epsilon = 1e-4;
  metrics_cmd->add_option("dist_a", dist_a, "first distribution file")
      ->required();
  metrics_cmd->add_option("dist_b", dist_b, "second distribution file")
      ->required();
  metrics_cmd->add_option("--ground", ground_name,
                          "ground metric: discrete or ordinal_unit");
  metrics_cmd->add_option("--epsilon", epsilon, "smoothing floor");

  auto* edt_cmd = app.add_subcommand(
      "simulate-edt", "entropy-pairing Monte-Carlo comparison");
  edt_cmd->fallthrough();
  PairingOptions pairing;
  edt_cmd->add_option("--trials", pairing.n_trials, "number of trials");
  edt_cmd->add_option("--labels", pairing.n_labels, "label count");
  edt_cmd->add_option("--hi", pairing.entropy_hi,
                      "opening entropy of the uncertain agent (bits)");
  edt_cmd->add_option("--lo", pairing.entropy_lo,
                      "opening entropy of the confident agent (bits)");
  edt_cmd->add_option("--eta", pairing.eta, "per-round blend rate");
  edt_cmd->add_option("--p-correct", pairing.p_correct,
                      "chance an opening peak is the truth");
  edt_cmd->add_option("--truth-affinity", pairing.truth_affinity,
                      "scale of the shared evidence pull");

  auto* eval_cmd =
      app.add_subcommand("eval", "batch-evaluate a labeled CSV dataset");
  eval_cmd->fallthrough();
  std::string dataset_path;
  int concurrency = 1;
  bool labels_from_dataset = false;
  eval_cmd->add_option("--dataset", dataset_path, "cases CSV file")
      ->required();
  eval_cmd->add_option("--concurrency", concurrency,
                       "parallel debates (deterministic per case)");
  eval_cmd->add_flag("--labels-from-dataset", labels_from_dataset,
                     "restrict candidate labels to the dataset's truths");

  auto* replay_cmd = app.add_subcommand(
      "replay", "recompute and verify a transcript's metric snapshots");
  replay_cmd->fallthrough();
  std::string transcript_path;
  double tolerance = 1e-9;
  replay_cmd->add_option("transcript", transcript_path, "transcript JSONL")
      ->required();
  replay_cmd->add_option("--tolerance", tolerance,
                         "per-field comparison tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  if (!log_level_name.empty()) {
    try {
      log_level() = log_level_from_string(log_level_name);
    } catch (const error& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }

  if (run_cmd->parsed()) {
    return cmd_run(config_path, seed, out_dir, log_level_name, out, err);
  }
  if (metrics_cmd->parsed()) {
    return cmd_metrics(dist_a, dist_b, ground_name, epsilon, out, err);
  }
  if (edt_cmd->parsed()) {
    if (seed) pairing.seed = *seed;
    return cmd_simulate_edt(pairing, out, err);
  }
  if (eval_cmd->parsed()) {
    return cmd_eval(dataset_path, config_path, seed, concurrency,
                    labels_from_dataset, out_dir, log_level_name, out, err);
  }
  if (replay_cmd->parsed()) {
    return cmd_replay(transcript_path, tolerance, out, err);
  }
  err << "no command given\n";
  return 1;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("parley");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace parley
