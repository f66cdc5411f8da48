#pragma once
// Run configuration: the debate settings plus the two agent backends, the
// judge backend, and output/logging choices. Files load as JSON or TOML
// (picked by extension); any referenced files (fixtures, judge tables,
// prompt templates) are resolved relative to the config file and must
// exist at load time.
//
// The TOML support is a deliberate subset: [dotted.table] headers,
// key = value lines with strings, numbers, booleans, and flat arrays.
// That covers every field this tool defines without pulling in a full
// TOML implementation.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "parley/agents.hpp"
#include "parley/engine.hpp"
#include "parley/transcript.hpp"
#include "parley/util.hpp"

namespace parley {

struct AgentSpec {
  std::string kind;  // "scripted" | "synthetic" | "http"
  // scripted
  std::string fixture_path;
  std::string fixture_id;  // key inside the fixture; defaults to the slot
  // synthetic
  std::string truth_label;
  double entropy_target = 1.0;
  double eta = 0.3;
  double p_correct = 0.5;
  double truth_affinity = 0.0;
  std::uint64_t seed = 0;  // 0 means derive from the run seed and the slot
  // http
  LlmEndpointConfig endpoint;
};

inline void to_json(nlohmann::json& j, const AgentSpec& s) {
  j = nlohmann::json{{"kind", s.kind}};
  if (s.kind == "scripted") {
    j["fixture_path"] = s.fixture_path;
    if (!s.fixture_id.empty()) j["fixture_id"] = s.fixture_id;
  } else if (s.kind == "synthetic") {
    j["truth_label"] = s.truth_label;
    j["entropy_target"] = s.entropy_target;
    j["eta"] = s.eta;
    j["p_correct"] = s.p_correct;
    j["truth_affinity"] = s.truth_affinity;
    j["seed"] = s.seed;
  } else if (s.kind == "http") {
    j["endpoint"] = s.endpoint;
  }
}

inline void from_json(const nlohmann::json& j, AgentSpec& s) {
  j.at("kind").get_to(s.kind);
  if (s.kind == "scripted") {
    if (!j.contains("fixture_path")) {
      throw config_error("scripted agent needs a fixture_path");
    }
    j.at("fixture_path").get_to(s.fixture_path);
    s.fixture_id = j.value("fixture_id", std::string{});
  } else if (s.kind == "synthetic") {
    if (!j.contains("truth_label")) {
      throw config_error("synthetic agent needs a truth_label");
    }
    j.at("truth_label").get_to(s.truth_label);
    s.entropy_target = j.value("entropy_target", 1.0);
    s.eta = j.value("eta", 0.3);
    s.p_correct = j.value("p_correct", 0.5);
    s.truth_affinity = j.value("truth_affinity", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
  } else if (s.kind == "http") {
    if (!j.contains("endpoint")) {
      throw config_error("http agent needs an endpoint table");
    }
    j.at("endpoint").get_to(s.endpoint);
  } else {
    throw config_error("unknown agent kind: " + s.kind);
  }
}

struct JudgeSpec {
  std::string kind = "constant";  // "constant" | "scripted" | "http"
  double gamma = 0.5;             // constant verdict
  double theta = 1.0;
  std::string table_path;  // scripted; a "*" entry becomes the default
  LlmEndpointConfig endpoint;
};

inline void to_json(nlohmann::json& j, const JudgeSpec& s) {
  j = nlohmann::json{{"kind", s.kind}};
  if (s.kind == "constant") {
    j["gamma"] = s.gamma;
    j["theta"] = s.theta;
  } else if (s.kind == "scripted") {
    j["table_path"] = s.table_path;
  } else if (s.kind == "http") {
    j["endpoint"] = s.endpoint;
  }
}

inline void from_json(const nlohmann::json& j, JudgeSpec& s) {
  s.kind = j.value("kind", std::string("constant"));
  if (s.kind == "constant") {
    s.gamma = j.value("gamma", 0.5);
    s.theta = j.value("theta", 1.0);
  } else if (s.kind == "scripted") {
    if (!j.contains("table_path")) {
      throw config_error("scripted judge needs a table_path");
    }
    j.at("table_path").get_to(s.table_path);
  } else if (s.kind == "http") {
    if (!j.contains("endpoint")) {
      throw config_error("http judge needs an endpoint table");
    }
    j.at("endpoint").get_to(s.endpoint);
  } else {
    throw config_error("unknown judge kind: " + s.kind);
  }
}

struct RunConfig {
  DebateTask task;
  DebateConfig debate;
  AgentSpec agent_a;
  AgentSpec agent_b;
  JudgeSpec judge;
  std::string prompt_template_path;  // optional; replaces the built-in text
  std::string transcript_path;       // optional; default under --out-dir
  std::string metrics_csv_path;      // optional; default under --out-dir
  std::string log_level = "warn";
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"task",
                      {{"information", c.task.information},
                       {"class_labels", c.task.class_labels},
                       {"claim", c.task.claim}}},
                     {"debate", c.debate},
                     {"agents", {{"a", c.agent_a}, {"b", c.agent_b}}},
                     {"judge", c.judge},
                     {"log_level", c.log_level}};
  if (!c.prompt_template_path.empty()) {
    j["prompt_template_path"] = c.prompt_template_path;
  }
  if (!c.transcript_path.empty()) j["transcript_path"] = c.transcript_path;
  if (!c.metrics_csv_path.empty()) j["metrics_csv_path"] = c.metrics_csv_path;
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.contains("task") || !j.at("task").contains("information")) {
    throw config_error("config needs task.information");
  }
  j.at("task").at("information").get_to(c.task.information);
  c.task.class_labels = j.at("task").value("class_labels",
                                           std::vector<std::string>{});
  c.task.claim = j.at("task").value("claim", std::string{});
  if (j.contains("debate")) c.debate = j.at("debate").get<DebateConfig>();
  if (!j.contains("agents")) throw config_error("config needs an agents table");
  const auto& agents = j.at("agents");
  if (!agents.is_object() || agents.size() != 2 || !agents.contains("a") ||
      !agents.contains("b")) {
    throw config_error("agents must contain exactly the entries a and b");
  }
  agents.at("a").get_to(c.agent_a);
  agents.at("b").get_to(c.agent_b);
  if (j.contains("judge")) j.at("judge").get_to(c.judge);
  c.prompt_template_path = j.value("prompt_template_path", std::string{});
  c.transcript_path = j.value("transcript_path", std::string{});
  c.metrics_csv_path = j.value("metrics_csv_path", std::string{});
  c.log_level = j.value("log_level", std::string("warn"));
  log_level_from_string(c.log_level);  // validates
}

namespace detail {

inline std::string toml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string toml_scalar(const nlohmann::json& v) {
  if (v.is_string()) return '"' + toml_escape(v.get<std::string>()) + '"';
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) {
    // TOML floats need a decimal point or exponent.
    std::string s = format_double(v.get<double>());
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) {
      s += ".0";
    }
    return s;
  }
  throw error("value cannot be written as a TOML scalar: " + v.dump());
}

inline void write_toml_table(const nlohmann::json& table,
                             const std::string& path, std::string& out) {
  std::vector<std::pair<std::string, const nlohmann::json*>> subtables;
  bool wrote_header = false;
  auto ensure_header = [&] {
    if (!path.empty() && !wrote_header) {
      if (!out.empty()) out += '\n';
      out += '[' + path + "]\n";
      wrote_header = true;
    }
  };
  if (!path.empty() && table.empty()) ensure_header();
  for (auto it = table.begin(); it != table.end(); ++it) {
    if (it.value().is_object()) {
      subtables.emplace_back(it.key(), &it.value());
      continue;
    }
    ensure_header();
    if (it.value().is_array()) {
      std::string items;
      for (const auto& v : it.value()) {
        if (v.is_object() || v.is_array()) {
          throw error("nested arrays/tables in arrays are not supported in "
                      "TOML output");
        }
        if (!items.empty()) items += ", ";
        items += toml_scalar(v);
      }
      out += it.key() + " = [" + items + "]\n";
    } else {
      out += it.key() + " = " + toml_scalar(it.value()) + "\n";
    }
  }
  for (const auto& [key, sub] : subtables) {
    write_toml_table(*sub, path.empty() ? key : path + '.' + key, out);
  }
}

inline std::string json_to_toml(const nlohmann::json& j) {
  if (!j.is_object()) throw error("TOML output needs a top-level table");
  std::string out;
  write_toml_table(j, "", out);
  return out;
}

// Strips a trailing comment, respecting quoted strings.
inline std::string strip_toml_comment(const std::string& line) {
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '#') return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline nlohmann::json parse_toml_value(const std::string& text, long line);

inline std::vector<std::string> split_toml_array(const std::string& body,
                                                 long line) {
  std::vector<std::string> items;
  std::string current;
  bool in_string = false;
  bool escaped = false;
  for (char c : body) {
    if (in_string) {
      current += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      current += c;
    } else if (c == ',') {
      items.push_back(current);
      current.clear();
    } else if (c == '[' || c == ']') {
      throw parse_error("nested arrays are not supported at line " +
                            std::to_string(line),
                        line);
    } else {
      current += c;
    }
  }
  if (in_string) {
    throw parse_error("unterminated string at line " + std::to_string(line),
                      line);
  }
  items.push_back(current);
  if (items.size() == 1 && trim(items[0]).empty()) return {};
  return items;
}

inline nlohmann::json parse_toml_value(const std::string& raw, long line) {
  std::string text = trim(raw);
  if (text.empty()) {
    throw parse_error("missing value at line " + std::to_string(line), line);
  }
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') {
      throw parse_error("unterminated string at line " + std::to_string(line),
                        line);
    }
    std::string out;
    bool escaped = false;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      char c = text[i];
      if (escaped) {
        switch (c) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default:
            throw parse_error("unsupported escape \\" + std::string(1, c) +
                                  " at line " + std::to_string(line),
                              line);
        }
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        throw parse_error("unexpected quote inside value at line " +
                              std::to_string(line),
                          line);
      } else {
        out += c;
      }
    }
    return out;
  }
  if (text.front() == '[') {
    if (text.back() != ']') {
      throw parse_error("unterminated array at line " + std::to_string(line),
                        line);
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& item :
         split_toml_array(text.substr(1, text.size() - 2), line)) {
      arr.push_back(parse_toml_value(item, line));
    }
    return arr;
  }
  if (text == "true") return true;
  if (text == "false") return false;
  bool looks_float = text.find('.') != std::string::npos ||
                     text.find('e') != std::string::npos ||
                     text.find('E') != std::string::npos;
  if (!looks_float) {
    if (text.front() == '-') {
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                       value);
      if (ec == std::errc{} && ptr == text.data() + text.size()) return value;
    } else {
      std::uint64_t value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                       value);
      if (ec == std::errc{} && ptr == text.data() + text.size()) return value;
    }
  }
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw parse_error("cannot parse value '" + text + "' at line " +
                        std::to_string(line),
                    line);
}

inline nlohmann::json toml_to_json(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* current = &root;
  std::istringstream in(text);
  std::string raw;
  long number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::string line = trim(strip_toml_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw parse_error("malformed table header at line " +
                              std::to_string(number),
                          number);
      }
      std::string path = trim(line.substr(1, line.size() - 2));
      if (path.empty()) {
        throw parse_error("empty table header at line " +
                              std::to_string(number),
                          number);
      }
      current = &root;
      std::size_t start = 0;
      while (start <= path.size()) {
        std::size_t dot = path.find('.', start);
        std::string part = trim(path.substr(
            start, dot == std::string::npos ? std::string::npos
                                            : dot - start));
        if (part.empty()) {
          throw parse_error("empty table name component at line " +
                                std::to_string(number),
                            number);
        }
        current = &(*current)[part];
        if (current->is_null()) *current = nlohmann::json::object();
        if (dot == std::string::npos) break;
        start = dot + 1;
      }
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw parse_error("expected key = value at line " +
                            std::to_string(number),
                        number);
    }
    std::string key = trim(line.substr(0, eq));
    if (!key.empty() && key.front() == '"') {
      nlohmann::json parsed = parse_toml_value(key, number);
      key = parsed.get<std::string>();
    }
    if (key.empty()) {
      throw parse_error("empty key at line " + std::to_string(number), number);
    }
    (*current)[key] = parse_toml_value(line.substr(eq + 1), number);
  }
  return root;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Resolves a config-referenced file against the config's directory and
// requires it to exist.
inline std::string resolve_existing(const std::string& raw,
                                    const std::filesystem::path& base,
                                    const std::string& field) {
  std::filesystem::path p(raw);
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::exists(p)) {
    throw config_error(field + " references a missing file: " + p.string());
  }
  return p.string();
}

}  // namespace detail

// Loads a run configuration from JSON or TOML (by extension), resolving
// and checking every referenced file.
inline RunConfig load_run_config(const std::string& path) {
  std::string text = detail::read_file(path);
  nlohmann::json j;
  if (detail::ends_with(path, ".json")) {
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw config_error("config " + path + " is not valid JSON: " + e.what());
    }
  } else if (detail::ends_with(path, ".toml")) {
    try {
      j = detail::toml_to_json(text);
    } catch (const parse_error& e) {
      throw config_error("config " + path + ": " + e.what());
    }
  } else {
    throw config_error("config files must end in .json or .toml: " + path);
  }
  RunConfig config;
  try {
    config = j.get<RunConfig>();
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error("config " + path + ": " + e.what());
  }
  validate(config.debate);
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve_agent = [&base](AgentSpec& spec, const std::string& slot) {
    if (spec.kind == "scripted") {
      spec.fixture_path = detail::resolve_existing(
          spec.fixture_path, base, "agents." + slot + ".fixture_path");
    } else if (spec.kind == "http") {
      validate(spec.endpoint);
    }
  };
  resolve_agent(config.agent_a, "a");
  resolve_agent(config.agent_b, "b");
  if (config.judge.kind == "scripted") {
    config.judge.table_path = detail::resolve_existing(
        config.judge.table_path, base, "judge.table_path");
  } else if (config.judge.kind == "http") {
    validate(config.judge.endpoint);
  }
  if (!config.prompt_template_path.empty()) {
    config.prompt_template_path = detail::resolve_existing(
        config.prompt_template_path, base, "prompt_template_path");
    config.task.prompt_template =
        detail::read_file(config.prompt_template_path);
  }
  return config;
}

// Writes a run configuration next to the format implied by the extension.
inline void save_run_config(const std::string& path, const RunConfig& config) {
  nlohmann::json j = config;
  std::string text;
  if (detail::ends_with(path, ".json")) {
    text = j.dump(2) + "\n";
  } else if (detail::ends_with(path, ".toml")) {
    text = detail::json_to_toml(j);
  } else {
    throw config_error("config files must end in .json or .toml: " + path);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write config file: " + path);
  out << text;
}

}  // namespace parley
