#pragma once
// Transcript persistence and replay. A debate is recorded as JSONL: one
// header record (task and configuration, enough to audit the run), one
// record per agent turn, and one final record. Records are written and
// flushed one at a time so an aborted debate keeps every completed turn.
//
// Replay is the audit path: it recomputes every metric snapshot from the
// recorded distributions and checks the stored values, so a transcript
// proves its own numbers.

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "parley/engine.hpp"
#include "parley/metrics.hpp"
#include "parley/util.hpp"

namespace parley {

inline constexpr int kTranscriptSchema = 1;

inline void to_json(nlohmann::json& j, const DebateTask& t) {
  j = nlohmann::json{{"information", t.information},
                     {"class_labels", t.class_labels},
                     {"claim", t.claim},
                     {"prompt_template", t.prompt_template}};
}

inline void from_json(const nlohmann::json& j, DebateTask& t) {
  j.at("information").get_to(t.information);
  t.class_labels = j.value("class_labels", std::vector<std::string>{});
  t.claim = j.value("claim", std::string{});
  t.prompt_template = j.value("prompt_template",
                              std::string(kDefaultPromptTemplate));
}

inline void to_json(nlohmann::json& j, const DebateConfig& c) {
  j = nlohmann::json{{"k", c.k},
                     {"delta0", c.delta0},
                     {"delta_mode", to_string(c.delta_mode)},
                     {"schedule", c.schedule},
                     {"formula_weights", c.formula_weights},
                     {"max_rounds", c.max_rounds},
                     {"epsilon", c.epsilon},
                     {"ground", to_string(c.ground)},
                     {"entropy_request_threshold", c.entropy_request_threshold},
                     {"seed", c.seed},
                     {"crit_max_depth", c.crit_max_depth}};
}

inline void from_json(const nlohmann::json& j, DebateConfig& c) {
  DebateConfig defaults;
  c.k = j.value("k", defaults.k);
  c.delta0 = j.value("delta0", defaults.delta0);
  c.delta_mode = delta_mode_from_string(
      j.value("delta_mode", to_string(defaults.delta_mode)));
  c.schedule = j.value("schedule", defaults.schedule);
  c.formula_weights = j.value("formula_weights", defaults.formula_weights);
  c.max_rounds = j.value("max_rounds", defaults.max_rounds);
  c.epsilon = j.value("epsilon", defaults.epsilon);
  c.ground = ground_from_string(j.value("ground", to_string(defaults.ground)));
  c.entropy_request_threshold =
      j.value("entropy_request_threshold", defaults.entropy_request_threshold);
  c.seed = j.value("seed", defaults.seed);
  c.crit_max_depth = j.value("crit_max_depth", defaults.crit_max_depth);
}

namespace detail {

inline nlohmann::json reasons_json(const std::vector<Argument>& reasons) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reasons) {
    if (r.prediction_index) {
      arr.push_back({{"text", r.text},
                     {"prediction_index", *r.prediction_index}});
    } else {
      arr.push_back(r.text);
    }
  }
  return arr;
}

inline nlohmann::json crit_json(const CritReport& report) {
  nlohmann::json per_reason = nlohmann::json::array();
  for (const auto& s : report.reason_scores) {
    per_reason.push_back(
        {{"gamma", s.gamma},
         {"theta", s.theta},
         {"prediction_index", s.prediction_index
                                  ? nlohmann::json(*s.prediction_index)
                                  : nlohmann::json(nullptr)},
         {"rationale", s.rationale}});
  }
  return {{"gamma_total", report.gamma_total},
          {"per_reason", std::move(per_reason)}};
}

}  // namespace detail

// Writes one debate's records to a JSONL file, flushing after each.
class JsonlTranscriptWriter : public TranscriptSink {
 public:
  explicit JsonlTranscriptWriter(const std::string& path) : out_(path) {
    if (!out_) throw error("cannot open transcript file: " + path);
  }

  void on_header(const HeaderEvent& event) override {
    nlohmann::json j{{"type", "header"},
                     {"schema", kTranscriptSchema},
                     {"debate_id", event.debate_id},
                     {"task", event.task},
                     {"config", event.config},
                     {"timestamp", event.timestamp}};
    write(j);
  }

  void on_turn(const TurnEvent& event) override {
    nlohmann::json j{
        {"type", "turn"},
        {"debate_id", event.debate_id},
        {"round", event.round},
        {"agent", event.agent},
        {"raw_confidences", event.output.raw_confidences},
        {"distribution", event.output.distribution},
        {"reasons", detail::reasons_json(event.output.reasons)},
        {"crit", event.crit ? detail::crit_json(*event.crit)
                            : nlohmann::json(nullptr)},
        {"delta", event.delta},
        {"snapshot", event.snapshot ? nlohmann::json(*event.snapshot)
                                    : nlohmann::json(nullptr)},
        {"timestamp", event.timestamp},
        {"backend_meta", event.backend_meta}};
    write(j);
  }

  void on_final(const FinalEvent& event) override {
    nlohmann::json j{{"type", "final"},
                     {"debate_id", event.debate_id},
                     {"p_final", event.p_final ? nlohmann::json(*event.p_final)
                                               : nlohmann::json(nullptr)},
                     {"termination_cause", event.termination_cause},
                     {"info_requests", event.info_requests},
                     {"rounds_used", event.rounds_used},
                     {"omega_a", event.omega_a},
                     {"omega_b", event.omega_b},
                     {"weighted", event.weighted},
                     {"timestamp", event.timestamp}};
    write(j);
  }

 private:
  void write(const nlohmann::json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
  }

  std::ofstream out_;
};

struct TranscriptLine {
  long line = 0;  // 1-based
  nlohmann::json record;
};

// Reads a JSONL transcript; bad lines fail with their line number.
inline std::vector<TranscriptLine> read_transcript(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open transcript file: " + path);
  std::vector<TranscriptLine> lines;
  std::string text;
  long number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (text.empty()) continue;
    try {
      lines.push_back({number, nlohmann::json::parse(text)});
    } catch (const nlohmann::json::exception& e) {
      throw parse_error("transcript line " + std::to_string(number) +
                            " is not valid JSON: " + e.what(),
                        number);
    }
  }
  return lines;
}

struct ReplayRoundCheck {
  int round = 0;
  bool pass = true;
  std::vector<std::string> mismatches;  // "field wd: stored X recomputed Y"
};

struct ReplayReport {
  bool pass = true;
  std::vector<ReplayRoundCheck> rounds;
  int incomplete_rounds = 0;  // rounds missing a turn, skipped with a warning
};

// Recomputes every round's metric snapshot from the recorded
// distributions and compares it with the stored one.
inline ReplayReport replay_transcript(const std::string& path,
                                      double tolerance = 1e-9) {
  auto lines = read_transcript(path);
  std::optional<DebateConfig> config;
  struct RoundTurns {
    std::optional<Categorical> a;
    std::optional<Categorical> b;
    std::optional<MetricSnapshot> stored;
    long line = 0;
  };
  std::map<int, RoundTurns> rounds;
  for (const auto& entry : lines) {
    const auto& record = entry.record;
    std::string type = record.value("type", "");
    try {
      if (type == "header") {
        config = record.at("config").get<DebateConfig>();
      } else if (type == "turn") {
        int round = record.at("round").get<int>();
        auto& slot = rounds[round];
        slot.line = entry.line;
        Categorical dist = record.at("distribution").get<Categorical>();
        std::string agent = record.at("agent").get<std::string>();
        if (agent == "A") {
          slot.a = std::move(dist);
        } else if (agent == "B") {
          slot.b = std::move(dist);
        } else {
          throw parse_error("transcript line " + std::to_string(entry.line) +
                                ": unknown agent '" + agent + "'",
                            entry.line);
        }
        if (record.contains("snapshot") && !record.at("snapshot").is_null()) {
          slot.stored = record.at("snapshot").get<MetricSnapshot>();
        }
      }
    } catch (const parse_error&) {
      throw;
    } catch (const std::exception& e) {
      throw parse_error("transcript line " + std::to_string(entry.line) +
                            ": " + e.what(),
                        entry.line);
    }
  }
  if (!config) {
    throw parse_error("transcript has no header record", 1);
  }

  ReplayReport report;
  for (const auto& [round, turns] : rounds) {
    if (!turns.a || !turns.b || !turns.stored) {
      ++report.incomplete_rounds;
      log(LogLevel::warn, "round " + std::to_string(round) +
                              " is incomplete; skipping verification");
      continue;
    }
    MetricSnapshot fresh =
        snapshot(*turns.a, *turns.b, config->ground, config->epsilon);
    ReplayRoundCheck check;
    check.round = round;
    auto compare = [&](const char* name, double stored, double recomputed) {
      if (std::abs(stored - recomputed) > tolerance) {
        check.pass = false;
        check.mismatches.push_back(std::string(name) + ": stored " +
                                   format_double(stored) + " recomputed " +
                                   format_double(recomputed));
      }
    };
    const MetricSnapshot& s = *turns.stored;
    compare("wd", s.wd, fresh.wd);
    compare("kl_ab", s.kl_ab, fresh.kl_ab);
    compare("kl_ba", s.kl_ba, fresh.kl_ba);
    compare("js", s.js, fresh.js);
    compare("ce_ab", s.ce_ab, fresh.ce_ab);
    compare("ce_ba", s.ce_ba, fresh.ce_ba);
    compare("mi", s.mi, fresh.mi);
    compare("nmi", s.nmi, fresh.nmi);
    compare("h_a", s.h_a, fresh.h_a);
    compare("h_b", s.h_b, fresh.h_b);
    report.pass = report.pass && check.pass;
    report.rounds.push_back(std::move(check));
  }
  return report;
}

}  // namespace parley
