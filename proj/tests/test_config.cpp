#include "parley/config.hpp"

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

using parley::RunConfig;
using parley::config_error;

// A fully populated configuration that references no external files.
RunConfig sample_config() {
  RunConfig config;
  config.task.information = "adult patient, three days of fever and cough";
  config.task.class_labels = {"flu", "cold"};
  config.task.claim = "the diagnosis is influenza";
  config.debate.k = 2;
  config.debate.delta0 = 85.0;
  config.debate.delta_mode = parley::DeltaMode::formula;
  config.debate.schedule = {85.0, 45.0};
  config.debate.formula_weights = {0.5, 0.3, 0.2};
  config.debate.max_rounds = 6;
  config.debate.epsilon = 1e-4;
  config.debate.ground = parley::Ground::ordinal_unit;
  config.debate.entropy_request_threshold = 0.8;
  config.debate.seed = 99;
  config.agent_a.kind = "synthetic";
  config.agent_a.truth_label = "flu";
  config.agent_a.entropy_target = 0.9;
  config.agent_a.eta = 0.25;
  config.agent_a.p_correct = 0.7;
  config.agent_a.truth_affinity = 2.0;
  config.agent_a.seed = 17;
  config.agent_b.kind = "synthetic";
  config.agent_b.truth_label = "flu";
  config.agent_b.entropy_target = 0.4;
  config.agent_b.eta = 0.35;
  config.judge.kind = "constant";
  config.judge.gamma = 0.7;
  config.judge.theta = 0.9;
  config.transcript_path = "out/transcript.jsonl";
  config.metrics_csv_path = "out/metrics.csv";
  config.log_level = "info";
  return config;
}

std::string scratch_dir(const std::string& name) {
  fs::path dir = fs::path(testing::TempDir()) / ("parley_cfg_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

TEST(ConfigRoundTrip, JsonSaveThenLoadIsIdentity) {
  std::string dir = scratch_dir("json_rt");
  std::string path = dir + "/run.json";
  RunConfig original = sample_config();
  parley::save_run_config(path, original);
  RunConfig loaded = parley::load_run_config(path);
  EXPECT_EQ(nlohmann::json(loaded), nlohmann::json(original));
}

TEST(ConfigRoundTrip, TomlSaveThenLoadIsIdentity) {
  std::string dir = scratch_dir("toml_rt");
  std::string path = dir + "/run.toml";
  RunConfig original = sample_config();
  parley::save_run_config(path, original);
  RunConfig loaded = parley::load_run_config(path);
  EXPECT_EQ(nlohmann::json(loaded), nlohmann::json(original));
}

TEST(ConfigRoundTrip, JsonAndTomlLoadTheSameConfig) {
  std::string dir = scratch_dir("cross_rt");
  RunConfig original = sample_config();
  parley::save_run_config(dir + "/run.json", original);
  parley::save_run_config(dir + "/run.toml", original);
  RunConfig from_json = parley::load_run_config(dir + "/run.json");
  RunConfig from_toml = parley::load_run_config(dir + "/run.toml");
  EXPECT_EQ(nlohmann::json(from_json), nlohmann::json(from_toml));
}

TEST(ConfigFiles, ScriptedFixtureResolvesAgainstTheConfigDirectory) {
  std::string dir = scratch_dir("resolve");
  write_file(dir + "/fixture.json", R"({"A": {}, "B": {}})");
  RunConfig config = sample_config();
  config.agent_a.kind = "scripted";
  config.agent_a.fixture_path = "fixture.json";
  parley::save_run_config(dir + "/run.json", config);

  RunConfig loaded = parley::load_run_config(dir + "/run.json");
  EXPECT_TRUE(fs::path(loaded.agent_a.fixture_path).is_absolute());
  EXPECT_TRUE(fs::exists(loaded.agent_a.fixture_path));
}

TEST(ConfigFiles, MissingFixtureNamesTheFieldAndThePath) {
  std::string dir = scratch_dir("missing");
  RunConfig config = sample_config();
  config.agent_b.kind = "scripted";
  config.agent_b.fixture_path = "no_such_fixture.json";
  parley::save_run_config(dir + "/run.json", config);
  try {
    parley::load_run_config(dir + "/run.json");
    FAIL() << "expected a config failure";
  } catch (const config_error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("agents.b.fixture_path"), std::string::npos) << msg;
    EXPECT_NE(msg.find("no_such_fixture.json"), std::string::npos) << msg;
  }
}

TEST(ConfigFiles, PromptTemplateFileReplacesTheBuiltInText) {
  std::string dir = scratch_dir("template");
  write_file(dir + "/prompt.txt", "Case: {S}\nLabels: {C}\n");
  RunConfig config = sample_config();
  config.prompt_template_path = "prompt.txt";
  parley::save_run_config(dir + "/run.json", config);
  RunConfig loaded = parley::load_run_config(dir + "/run.json");
  EXPECT_EQ(loaded.task.prompt_template, "Case: {S}\nLabels: {C}\n");
}

TEST(ConfigShape, ExactlyTwoAgentsRequired) {
  std::string dir = scratch_dir("agents");
  nlohmann::json j = nlohmann::json(sample_config());

  nlohmann::json only_a = j;
  only_a["agents"].erase("b");
  write_file(dir + "/one.json", only_a.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/one.json"), config_error);

  nlohmann::json three = j;
  three["agents"]["c"] = three["agents"]["a"];
  write_file(dir + "/three.json", three.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/three.json"), config_error);

  nlohmann::json renamed = j;
  renamed["agents"]["left"] = renamed["agents"]["a"];
  renamed["agents"].erase("a");
  write_file(dir + "/renamed.json", renamed.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/renamed.json"), config_error);
}

TEST(ConfigShape, UnknownKindsAndLevelsAreRejected) {
  std::string dir = scratch_dir("kinds");
  nlohmann::json j = nlohmann::json(sample_config());

  nlohmann::json bad_agent = j;
  bad_agent["agents"]["a"] = {{"kind", "quantum"}};
  write_file(dir + "/agent.json", bad_agent.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/agent.json"), config_error);

  nlohmann::json bad_judge = j;
  bad_judge["judge"] = {{"kind", "oracle"}};
  write_file(dir + "/judge.json", bad_judge.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/judge.json"), config_error);

  nlohmann::json bad_level = j;
  bad_level["log_level"] = "loud";
  write_file(dir + "/level.json", bad_level.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/level.json"), config_error);

  nlohmann::json bad_ext = j;
  write_file(dir + "/run.yaml", bad_ext.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/run.yaml"), config_error);
}

TEST(ConfigShape, HttpEndpointsAreValidatedAtLoadTime) {
  std::string dir = scratch_dir("http");
  nlohmann::json j = nlohmann::json(sample_config());
  j["agents"]["a"] = {{"kind", "http"},
                      {"endpoint",
                       {{"base_url", ""},
                        {"model", "m"},
                        {"api_key_env", "KEY"}}}};
  write_file(dir + "/run.json", j.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/run.json"), config_error);

  j["agents"]["a"]["endpoint"]["base_url"] = "http://127.0.0.1:1/v1";
  write_file(dir + "/ok.json", j.dump());
  RunConfig loaded = parley::load_run_config(dir + "/ok.json");
  EXPECT_EQ(loaded.agent_a.endpoint.base_url, "http://127.0.0.1:1/v1");
  EXPECT_EQ(loaded.agent_a.endpoint.api_key_env, "KEY");
}

TEST(ConfigShape, DebateSettingsAreValidatedAtLoadTime) {
  std::string dir = scratch_dir("debate");
  nlohmann::json j = nlohmann::json(sample_config());
  j["debate"]["max_rounds"] = 0;
  write_file(dir + "/run.json", j.dump());
  EXPECT_THROW(parley::load_run_config(dir + "/run.json"), config_error);
}

TEST(TomlSubset, ValuesArraysCommentsAndDottedTables) {
  nlohmann::json j = parley::detail::toml_to_json(R"(# leading comment
title = "debate \"quoted\" run"  # trailing comment
count = 12
offset = -3
rate = 0.25
big = 1e3
flag = true
other = false
names = ["a", "b"]
weights = [0.5, 0.25, 0.25]
empty = []

[task]
information = "line one\nline two"

[debate.inner]
depth = 2
)");
  EXPECT_EQ(j.at("title"), "debate \"quoted\" run");
  EXPECT_EQ(j.at("count"), 12);
  EXPECT_EQ(j.at("offset"), -3);
  EXPECT_EQ(j.at("rate"), 0.25);
  EXPECT_EQ(j.at("big"), 1000.0);
  EXPECT_EQ(j.at("flag"), true);
  EXPECT_EQ(j.at("other"), false);
  EXPECT_EQ(j.at("names"), nlohmann::json({"a", "b"}));
  EXPECT_EQ(j.at("weights"), nlohmann::json({0.5, 0.25, 0.25}));
  EXPECT_TRUE(j.at("empty").is_array());
  EXPECT_TRUE(j.at("empty").empty());
  EXPECT_EQ(j.at("task").at("information"), "line one\nline two");
  EXPECT_EQ(j.at("debate").at("inner").at("depth"), 2);
}

TEST(TomlSubset, ParseFailuresCarryTheLineNumber) {
  struct Case {
    const char* text;
    long line;
  };
  const Case cases[] = {
      {"a = 1\nb = \"unterminated\n", 2},
      {"a = 1\nb = [1, [2]]\n", 2},
      {"a = 1\nnot a key value pair\n", 2},
      {"[table\n", 1},
      {"a = 1\nb =\n", 2},
      {"a = 1\nb = 12monkeys\n", 2},
  };
  for (const auto& c : cases) {
    try {
      parley::detail::toml_to_json(c.text);
      FAIL() << "expected parse failure for: " << c.text;
    } catch (const parley::parse_error& e) {
      EXPECT_EQ(e.line(), c.line) << c.text;
      EXPECT_NE(std::string(e.what()).find(std::to_string(c.line)),
                std::string::npos);
    }
  }
}

TEST(TomlSubset, MalformedConfigFileReportsItsPath) {
  std::string dir = scratch_dir("badtoml");
  write_file(dir + "/run.toml", "task = [unclosed\n");
  try {
    parley::load_run_config(dir + "/run.toml");
    FAIL() << "expected a config failure";
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("run.toml"), std::string::npos);
  }
}

TEST(ConfigDefaults, MinimalJsonGetsDocumentedDefaults) {
  std::string dir = scratch_dir("minimal");
  write_file(dir + "/run.json", R"({
    "task": {"information": "case"},
    "agents": {
      "a": {"kind": "synthetic", "truth_label": "x"},
      "b": {"kind": "synthetic", "truth_label": "x"}
    }
  })");
  RunConfig loaded = parley::load_run_config(dir + "/run.json");
  EXPECT_EQ(loaded.debate.k, 3);
  EXPECT_EQ(loaded.debate.max_rounds, 8);
  EXPECT_EQ(loaded.debate.delta_mode, parley::DeltaMode::schedule);
  EXPECT_EQ(loaded.judge.kind, "constant");
  EXPECT_EQ(loaded.log_level, "warn");
  EXPECT_EQ(loaded.agent_a.eta, 0.3);
}

}  // namespace
