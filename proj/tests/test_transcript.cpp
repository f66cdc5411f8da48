#include "parley/transcript.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "parley/agents.hpp"
#include "parley/crit.hpp"
#include "parley/engine.hpp"
#include "test_support.hpp"

namespace {

using parley::Categorical;
using parley::ConstantJudge;
using parley::DebateConfig;
using parley::DebateOutcome;
using parley::DebateTask;
using parley::JsonlTranscriptWriter;
using parley::ReplayReport;
using parley::ScriptedAgent;

nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(std::string(PARLEY_TEST_DATA_DIR) + "/" + name);
  EXPECT_TRUE(in.good()) << "missing fixture " << name;
  return nlohmann::json::parse(in);
}

std::string temp_path(const std::string& name) {
  return testing::TempDir() + "parley_" + name;
}

// Records a four-round scripted debate into the given JSONL path.
DebateOutcome record_debate(const std::string& path) {
  auto fixture = load_fixture("wd_regress.json");
  ScriptedAgent a("A", fixture);
  ScriptedAgent b("B", fixture);
  ConstantJudge judge(0.8, 1.0);
  DebateTask task;
  task.information = "adult patient, three days of fever and cough";
  task.class_labels = {"flu", "cold"};
  DebateConfig config;
  config.k = 2;
  config.seed = 5;
  JsonlTranscriptWriter writer(path);
  return parley::run_debate(task, config, a, b, judge, &writer);
}

std::vector<nlohmann::json> file_records(const std::string& path) {
  std::vector<nlohmann::json> records;
  for (const auto& line : parley::read_transcript(path)) {
    records.push_back(line.record);
  }
  return records;
}

void write_records(const std::string& path,
                   const std::vector<nlohmann::json>& records) {
  std::ofstream out(path);
  for (const auto& r : records) out << r.dump() << '\n';
}

TEST(TranscriptWriter, RecordsHeaderTurnsAndFinalInOrder) {
  std::string path = temp_path("writer.jsonl");
  DebateOutcome outcome = record_debate(path);
  auto records = file_records(path);

  // header + two turns per round + final
  ASSERT_EQ(records.size(), 1u + 2u * outcome.history.size() + 1u);
  EXPECT_EQ(records.front().at("type"), "header");
  EXPECT_EQ(records.front().at("schema"), 1);
  EXPECT_EQ(records.front().at("debate_id"), outcome.debate_id);
  EXPECT_EQ(records.back().at("type"), "final");
  EXPECT_EQ(records.back().at("termination_cause"), "metric_regression");
  EXPECT_EQ(records.back().at("rounds_used"), 4);

  // Timestamps are logical ticks: strictly increasing from zero.
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].at("timestamp").get<long>(), static_cast<long>(i));
  }

  // Within a round, A's record has no snapshot and B's carries it.
  const auto& turn_a = records[1];
  const auto& turn_b = records[2];
  EXPECT_EQ(turn_a.at("agent"), "A");
  EXPECT_TRUE(turn_a.at("snapshot").is_null());
  EXPECT_FALSE(turn_a.at("crit").is_null());
  EXPECT_EQ(turn_b.at("agent"), "B");
  ASSERT_FALSE(turn_b.at("snapshot").is_null());
  EXPECT_NEAR(turn_b.at("snapshot").at("wd").get<double>(), 0.8, 1e-12);
  EXPECT_EQ(turn_b.at("round"), 0);
  EXPECT_EQ(turn_a.at("delta"), 90.0);

  // Raw confidences are preserved next to the normalized distribution.
  ASSERT_TRUE(turn_a.contains("raw_confidences"));
  EXPECT_EQ(turn_a.at("raw_confidences").size(),
            turn_a.at("distribution").at("probs").size());
}

TEST(TranscriptReplay, FreshTranscriptVerifiesCleanly) {
  std::string path = temp_path("replay_clean.jsonl");
  DebateOutcome outcome = record_debate(path);
  ReplayReport report = parley::replay_transcript(path);
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.incomplete_rounds, 0);
  ASSERT_EQ(report.rounds.size(), outcome.history.size());
  for (const auto& check : report.rounds) {
    EXPECT_TRUE(check.pass) << "round " << check.round;
    EXPECT_TRUE(check.mismatches.empty());
  }
}

TEST(TranscriptReplay, TamperedDistributionIsNamedByRoundAndField) {
  std::string path = temp_path("replay_tampered.jsonl");
  record_debate(path);
  auto records = file_records(path);
  bool tampered = false;
  for (auto& r : records) {
    if (r.value("type", "") == "turn" && r.at("round") == 1 &&
        r.at("agent") == "B") {
      auto& probs = r.at("distribution").at("probs");
      std::swap(probs[0], probs[1]);  // (0.3, 0.7) -> (0.7, 0.3)
      tampered = true;
    }
  }
  ASSERT_TRUE(tampered);
  write_records(path, records);

  ReplayReport report = parley::replay_transcript(path);
  EXPECT_FALSE(report.pass);
  bool found = false;
  for (const auto& check : report.rounds) {
    if (check.round == 1) {
      found = true;
      EXPECT_FALSE(check.pass);
      ASSERT_FALSE(check.mismatches.empty());
      bool wd_named = false;
      for (const auto& m : check.mismatches) {
        if (m.rfind("wd:", 0) == 0) wd_named = true;
        EXPECT_NE(m.find("stored"), std::string::npos);
        EXPECT_NE(m.find("recomputed"), std::string::npos);
      }
      EXPECT_TRUE(wd_named);
    } else {
      EXPECT_TRUE(check.pass) << "round " << check.round;
    }
  }
  EXPECT_TRUE(found);
}

TEST(TranscriptReplay, GarbageLineFailsWithItsLineNumber) {
  std::string path = temp_path("replay_garbage.jsonl");
  record_debate(path);
  std::ofstream(path, std::ios::app) << "{this is not json\n";
  std::size_t n_good = 0;
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) ++n_good;
  }
  try {
    parley::replay_transcript(path);
    FAIL() << "expected a parse failure";
  } catch (const parley::parse_error& e) {
    EXPECT_EQ(e.line(), static_cast<long>(n_good));
    EXPECT_NE(std::string(e.what()).find(std::to_string(n_good)),
              std::string::npos);
  }
}

TEST(TranscriptReplay, TruncatedRecordFailsWithItsLineNumber) {
  std::string path = temp_path("replay_truncated.jsonl");
  record_debate(path);
  // Chop the final record mid-JSON.
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  lines.back() = lines.back().substr(0, lines.back().size() / 2);
  {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
  }
  try {
    parley::read_transcript(path);
    FAIL() << "expected a parse failure";
  } catch (const parley::parse_error& e) {
    EXPECT_EQ(e.line(), static_cast<long>(lines.size()));
  }
}

TEST(TranscriptReplay, MissingHeaderIsRejected) {
  std::string path = temp_path("replay_headerless.jsonl");
  record_debate(path);
  auto records = file_records(path);
  records.erase(records.begin());
  write_records(path, records);
  EXPECT_THROW(parley::replay_transcript(path), parley::parse_error);
}

TEST(TranscriptReplay, IncompleteRoundIsSkippedNotFailed) {
  std::string path = temp_path("replay_incomplete.jsonl");
  record_debate(path);
  auto records = file_records(path);
  std::vector<nlohmann::json> kept;
  for (const auto& r : records) {
    if (r.value("type", "") == "turn" && r.at("round") == 2 &&
        r.at("agent") == "B") {
      continue;  // drop round 2's closing turn
    }
    kept.push_back(r);
  }
  ASSERT_EQ(kept.size(), records.size() - 1);
  write_records(path, kept);

  ReplayReport report = parley::replay_transcript(path);
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.incomplete_rounds, 1);
  EXPECT_EQ(report.rounds.size(), 3u);
  for (const auto& check : report.rounds) {
    EXPECT_NE(check.round, 2);
  }
}

TEST(TranscriptReplay, AbortedDebateStillReads) {
  std::string path = temp_path("replay_aborted.jsonl");
  auto fixture = load_fixture("failure.json");
  ScriptedAgent a("A", fixture);
  ScriptedAgent b("B", fixture);
  ConstantJudge judge(0.8, 1.0);
  DebateTask task;
  task.information = "adult patient, three days of fever and cough";
  task.class_labels = {"flu", "cold"};
  DebateConfig config;
  config.k = 2;
  JsonlTranscriptWriter writer(path);
  DebateOutcome outcome = parley::run_debate(task, config, a, b, judge,
                                             &writer);
  ASSERT_EQ(outcome.termination_cause,
            parley::TerminationCause::agent_failure);

  auto records = file_records(path);
  // header + round-0 pair + orphaned round-1 A turn + final
  ASSERT_EQ(records.size(), 5u);
  EXPECT_TRUE(records[3].at("crit").is_null());
  EXPECT_TRUE(records[3].at("snapshot").is_null());
  EXPECT_TRUE(records[4].at("p_final").is_null());
  EXPECT_EQ(records[4].at("termination_cause"), "agent_failure");

  ReplayReport report = parley::replay_transcript(path);
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.incomplete_rounds, 1);
  EXPECT_EQ(report.rounds.size(), 1u);
}

TEST(TranscriptJson, DebateConfigSurvivesARoundTrip) {
  DebateConfig config;
  config.k = 5;
  config.delta0 = 75.0;
  config.delta_mode = parley::DeltaMode::formula;
  config.schedule = {80.0, 40.0};
  config.formula_weights = {0.5, 0.25, 0.25};
  config.max_rounds = 6;
  config.epsilon = 1e-3;
  config.ground = parley::Ground::ordinal_unit;
  config.entropy_request_threshold = 0.6;
  config.seed = 42;
  config.crit_max_depth = 2;

  nlohmann::json j = config;
  DebateConfig back = j.get<DebateConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.k, 5);
  EXPECT_EQ(back.delta_mode, parley::DeltaMode::formula);
  EXPECT_EQ(back.ground, parley::Ground::ordinal_unit);
  EXPECT_EQ(back.seed, 42u);
}

TEST(TranscriptJson, DebateTaskSurvivesARoundTrip) {
  DebateTask task;
  task.information = "case text";
  task.class_labels = {"x", "y"};
  task.claim = "the label is x";
  task.prompt_template = "custom {S} {C}";
  nlohmann::json j = task;
  DebateTask back = j.get<DebateTask>();
  EXPECT_EQ(back.information, task.information);
  EXPECT_EQ(back.class_labels, task.class_labels);
  EXPECT_EQ(back.claim, task.claim);
  EXPECT_EQ(back.prompt_template, task.prompt_template);

  // Omitted optional fields fall back to defaults.
  nlohmann::json minimal = {{"information", "just the case"}};
  DebateTask sparse = minimal.get<DebateTask>();
  EXPECT_TRUE(sparse.class_labels.empty());
  EXPECT_EQ(sparse.prompt_template, parley::kDefaultPromptTemplate);
}

TEST(TranscriptJson, UnknownAgentNameIsRejected) {
  std::string path = temp_path("replay_badagent.jsonl");
  record_debate(path);
  auto records = file_records(path);
  for (auto& r : records) {
    if (r.value("type", "") == "turn") {
      r["agent"] = "C";
      break;
    }
  }
  write_records(path, records);
  EXPECT_THROW(parley::replay_transcript(path), parley::parse_error);
}

}  // namespace
