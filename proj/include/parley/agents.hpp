#pragma once
// Debate participants. An agent sees a context (case information, candidate
// labels, the running argument pool, the opponent's latest position, and a
// contentiousness level) and answers with a confidence distribution plus
// the reasons behind it. Three backends live here: a scripted agent that
// replays recorded outputs, and a synthetic agent with a controllable
// entropy profile for simulation studies. The HTTP-backed agent is in
// agents_http.hpp so that tests without network plumbing compile faster.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "parley/categorical.hpp"
#include "parley/crit.hpp"
#include "parley/util.hpp"

namespace parley {

struct AgentOutput {
  std::vector<double> raw_confidences;  // as reported, before normalization
  Categorical distribution;             // normalized, same label order
  std::vector<Argument> reasons;        // optionally tagged to predictions
  std::vector<std::string> info_requests;
};

// Everything an agent may condition on for one turn.
struct AgentContext {
  std::string information;                  // the case being debated
  std::vector<std::string> class_labels;    // candidate labels, may be empty
  std::string prompt_template;              // see render_prompt
  std::vector<std::string> accumulated_reasons;  // attributed, both speakers
  std::optional<AgentOutput> opponent_output;
  double delta = 90.0;  // contentiousness in [0, 100]
  int k = 1;            // how many predictions to ask for
  int round = 0;
};

inline void to_json(nlohmann::json& j, const AgentOutput& out) {
  nlohmann::json predictions = nlohmann::json::array();
  for (std::size_t i = 0; i < out.distribution.size(); ++i) {
    predictions.push_back({{"label", out.distribution.labels[i]},
                           {"confidence", out.raw_confidences[i]}});
  }
  nlohmann::json reasons = nlohmann::json::array();
  for (const auto& r : out.reasons) {
    if (r.prediction_index) {
      reasons.push_back(
          {{"text", r.text}, {"prediction_index", *r.prediction_index}});
    } else {
      reasons.push_back(r.text);
    }
  }
  j = nlohmann::json{{"predictions", std::move(predictions)},
                     {"reasons", std::move(reasons)},
                     {"requests", out.info_requests}};
}

inline void from_json(const nlohmann::json& j, AgentOutput& out) {
  if (!j.contains("predictions") || !j.at("predictions").is_array() ||
      j.at("predictions").empty()) {
    throw parse_error(
        "agent reply breaks rule: predictions must be a non-empty array");
  }
  std::vector<std::string> labels;
  std::vector<double> confidences;
  for (const auto& p : j.at("predictions")) {
    if (!p.is_object() || !p.contains("label") || !p.contains("confidence")) {
      throw parse_error(
          "agent reply breaks rule: each prediction needs a label and a "
          "confidence");
    }
    if (!p.at("label").is_string()) {
      throw parse_error("agent reply breaks rule: labels must be strings");
    }
    std::string label = p.at("label").get<std::string>();
    if (!p.at("confidence").is_number()) {
      throw parse_error("agent reply breaks rule: confidence for '" + label +
                        "' must be a number");
    }
    double c = p.at("confidence").get<double>();
    if (!std::isfinite(c) || c < 0.0) {
      throw parse_error("agent reply breaks rule: confidence for '" + label +
                        "' must be finite and non-negative");
    }
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      throw parse_error("agent reply breaks rule: duplicate label '" + label +
                        "'");
    }
    labels.push_back(std::move(label));
    confidences.push_back(c);
  }
  out.raw_confidences = confidences;
  try {
    out.distribution = new_categorical(std::move(labels), std::move(confidences));
  } catch (const error& e) {
    throw parse_error(std::string("agent reply breaks rule: ") + e.what());
  }
  out.reasons.clear();
  if (j.contains("reasons")) {
    for (const auto& r : j.at("reasons")) {
      if (r.is_string()) {
        out.reasons.emplace_back(r.get<std::string>());
      } else if (r.is_object() && r.contains("text")) {
        Argument arg(r.at("text").get<std::string>());
        if (r.contains("prediction_index") &&
            !r.at("prediction_index").is_null()) {
          arg.prediction_index = r.at("prediction_index").get<int>();
        }
        out.reasons.push_back(std::move(arg));
      } else {
        throw parse_error(
            "agent reply breaks rule: each reason must be a string or an "
            "object with a text field");
      }
    }
  }
  out.info_requests.clear();
  if (j.contains("requests")) {
    j.at("requests").get_to(out.info_requests);
  }
}

namespace detail {

// Pulls the first balanced JSON object out of free-form text, which copes
// with fenced code blocks and trailing prose around the payload.
inline std::string extract_json_object(const std::string& text) {
  std::size_t start = text.find('{');
  if (start == std::string::npos) {
    throw parse_error("no JSON object found in agent reply");
  }
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
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
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
      if (depth == 0) return text.substr(start, i - start + 1);
    }
  }
  throw parse_error("unterminated JSON object in agent reply");
}

}  // namespace detail

// Parses a raw model reply into an AgentOutput. Accepts the JSON object
// bare, inside a fenced block, or surrounded by prose.
inline AgentOutput parse_agent_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::extract_json_object(text));
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("agent reply is not valid JSON: ") +
                      e.what());
  }
  try {
    return j.get<AgentOutput>();
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("agent reply breaks rule: ") + e.what());
  }
}

inline std::string serialize_agent_output(const AgentOutput& out) {
  nlohmann::json j = out;
  return j.dump();
}

// Fills the placeholders {S} {C} {R} {OPPONENT} {DELTA} {K} in a prompt
// template from the context. Unknown text is left untouched, so literal
// braces in the template (the JSON schema example, say) are safe.
inline std::string render_prompt(const AgentContext& ctx) {
  auto replace_all = [](std::string text, const std::string& token,
                        const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
      text.replace(pos, token.size(), value);
      pos += value.size();
    }
    return text;
  };
  std::string labels;
  for (std::size_t i = 0; i < ctx.class_labels.size(); ++i) {
    if (i) labels += ", ";
    labels += ctx.class_labels[i];
  }
  if (labels.empty()) labels = "(open: propose your own labels)";
  std::string pool;
  for (const auto& r : ctx.accumulated_reasons) pool += "- " + r + "\n";
  if (pool.empty()) pool = "(none yet)\n";
  std::string opponent = "(not shown this turn)";
  if (ctx.opponent_output) {
    opponent = serialize_agent_output(*ctx.opponent_output);
  }
  std::string text = ctx.prompt_template;
  text = replace_all(std::move(text), "{S}", ctx.information);
  text = replace_all(std::move(text), "{C}", labels);
  text = replace_all(std::move(text), "{R}", pool);
  text = replace_all(std::move(text), "{OPPONENT}", opponent);
  text = replace_all(std::move(text), "{DELTA}", format_double(ctx.delta));
  text = replace_all(std::move(text), "{K}", std::to_string(ctx.k));
  return text;
}

// Connection details for a chat-completions endpoint (used by the HTTP
// backends in agents_http.hpp; declared here so configuration code does
// not need the HTTP client).
struct LlmEndpointConfig {
  std::string base_url;     // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key_env;  // name of the env var holding the key
  double temperature = 1.0;
  int timeout_s = 30;
  int max_retries = 2;      // transport retries beyond the first attempt
  int backoff_base_ms = 250;
};

inline void validate(const LlmEndpointConfig& cfg) {
  if (cfg.base_url.empty()) throw config_error("endpoint base_url is empty");
  if (cfg.model.empty()) throw config_error("endpoint model is empty");
  if (cfg.api_key_env.empty()) {
    throw config_error("endpoint api_key_env is empty");
  }
  if (cfg.temperature < 0.0) {
    throw config_error("endpoint temperature must be >= 0");
  }
  if (cfg.timeout_s <= 0) throw config_error("endpoint timeout_s must be > 0");
  if (cfg.max_retries < 0) {
    throw config_error("endpoint max_retries must be >= 0");
  }
  if (cfg.backoff_base_ms < 0) {
    throw config_error("endpoint backoff_base_ms must be >= 0");
  }
}

inline void to_json(nlohmann::json& j, const LlmEndpointConfig& c) {
  j = nlohmann::json{{"base_url", c.base_url},
                     {"model", c.model},
                     {"api_key_env", c.api_key_env},
                     {"temperature", c.temperature},
                     {"timeout_s", c.timeout_s},
                     {"max_retries", c.max_retries},
                     {"backoff_base_ms", c.backoff_base_ms}};
}

inline void from_json(const nlohmann::json& j, LlmEndpointConfig& c) {
  j.at("base_url").get_to(c.base_url);
  j.at("model").get_to(c.model);
  j.at("api_key_env").get_to(c.api_key_env);
  c.temperature = j.value("temperature", 1.0);
  c.timeout_s = j.value("timeout_s", 30);
  c.max_retries = j.value("max_retries", 2);
  c.backoff_base_ms = j.value("backoff_base_ms", 250);
}

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string id() const = 0;
  virtual AgentOutput respond(const AgentContext& ctx) = 0;

  // One extra ask when the merged verdict stays too uncertain. The default
  // re-reads the current turn's volunteered requests; interactive backends
  // override this with a dedicated call.
  virtual std::vector<std::string> request_information(
      const AgentContext& ctx) {
    return respond(ctx).info_requests;
  }

  // Provenance details for the transcript (backend kind, retry counts).
  virtual nlohmann::json backend_meta() const {
    return nlohmann::json::object();
  }
};

using AgentPtr = std::unique_ptr<Agent>;

// Replays recorded outputs from a fixture: {"<agent id>": {"<round>":
// <agent reply object>, ...}, ...}. Each reply uses the same schema
// parse_agent_json accepts.
class ScriptedAgent : public Agent {
 public:
  ScriptedAgent(std::string id, nlohmann::json fixture)
      : id_(std::move(id)), fixture_(std::move(fixture)) {
    if (!fixture_.is_object() || !fixture_.contains(id_)) {
      throw config_error("fixture has no entry for agent '" + id_ + "'");
    }
    if (!fixture_.at(id_).is_object()) {
      throw config_error("fixture rounds for agent '" + id_ +
                         "' must be an object keyed by round");
    }
  }

  std::string id() const override { return id_; }

  AgentOutput respond(const AgentContext& ctx) override {
    const auto& rounds = fixture_.at(id_);
    auto it = rounds.find(std::to_string(ctx.round));
    if (it == rounds.end()) {
      throw agent_error("fixture for agent '" + id_ +
                        "' has no round " + std::to_string(ctx.round));
    }
    try {
      return it->get<AgentOutput>();
    } catch (const agent_error&) {
      throw;
    } catch (const std::exception& e) {
      throw agent_error("fixture for agent '" + id_ + "' round " +
                        std::to_string(ctx.round) + ": " + e.what());
    }
  }

  nlohmann::json backend_meta() const override {
    return {{"backend", "scripted"}};
  }

 private:
  std::string id_;
  nlohmann::json fixture_;
};

namespace detail {

// Entropy (bits) of the peaked family: weight 1 on the peak and `off` on
// each of the other n-1 labels, normalized. Monotone in `off` on [0, 1],
// from 0 up to log2(n).
inline double peaked_entropy(double off, std::size_t n) {
  double z = 1.0 + static_cast<double>(n - 1) * off;
  double h = -(1.0 / z) * std::log2(1.0 / z);
  if (off > 0.0) {
    double p = off / z;
    h -= static_cast<double>(n - 1) * p * std::log2(p);
  }
  return h;
}

inline double solve_off_weight(double target_bits, std::size_t n) {
  double max_bits = std::log2(static_cast<double>(n));
  if (target_bits < 0.0 || target_bits > max_bits + 1e-9) {
    throw error("entropy target " + format_double(target_bits) +
                    " is outside [0, log2(n)] for n=" + std::to_string(n),
                "bad_entropy_target");
  }
  if (target_bits <= 1e-12) return 0.0;
  if (target_bits >= max_bits - 1e-12) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (peaked_entropy(mid, n) < target_bits ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Simulation stand-in with a controllable starting entropy. Round 0 is a
// peaked distribution whose peak lands on the truth label with probability
// p_correct (otherwise uniformly on another label) and whose entropy hits
// entropy_target within 0.01 bits. Later rounds blend toward the
// opponent's previous position:
//
//   new_i proportional to (1-eta)*own_i + eta*opp_i*(1 + kappa*[i==truth])
//
// With truth_affinity kappa = 0 (the default) this is a plain convex
// blend; kappa > 0 models a debater who verifies the opponent's point
// before adopting it, amplifying agreement that favors the true label.
class SyntheticAgent : public Agent {
 public:
  SyntheticAgent(std::string id, std::string truth_label,
                 double entropy_target, double eta, std::uint64_t seed,
                 double p_correct = 0.5, double truth_affinity = 0.0)
      : id_(std::move(id)),
        truth_label_(std::move(truth_label)),
        entropy_target_(entropy_target),
        eta_(eta),
        p_correct_(p_correct),
        truth_affinity_(truth_affinity),
        rng_(seed) {
    if (eta_ < 0.0 || eta_ > 1.0) {
      throw config_error("blend rate eta must lie in [0, 1]");
    }
    if (p_correct_ < 0.0 || p_correct_ > 1.0) {
      throw config_error("p_correct must lie in [0, 1]");
    }
    if (truth_affinity_ < 0.0) {
      throw config_error("truth_affinity must be non-negative");
    }
  }

  std::string id() const override { return id_; }

  AgentOutput respond(const AgentContext& ctx) override {
    if (ctx.class_labels.empty()) {
      throw agent_error("synthetic agent needs a fixed label set");
    }
    if (ctx.round == 0) {
      own_ = initial(ctx.class_labels);
    } else {
      if (!ctx.opponent_output) {
        throw agent_error("synthetic agent expects the opponent's previous "
                          "output after round 0");
      }
      own_ = blend(*own_, ctx.opponent_output->distribution);
    }
    AgentOutput out;
    out.distribution = *own_;
    out.raw_confidences = own_->probs;
    return out;
  }

  std::vector<std::string> request_information(const AgentContext&) override {
    return {};
  }

  nlohmann::json backend_meta() const override {
    return {{"backend", "synthetic"},
            {"entropy_target", entropy_target_},
            {"eta", eta_}};
  }

 private:
  Categorical initial(const std::vector<std::string>& labels) {
    std::size_t n = labels.size();
    // Draw the peak before any entropy arithmetic so that two agents
    // seeded alike pick the same peak whatever their entropy targets;
    // paired simulation arms rely on that.
    std::size_t truth = 0;
    auto it = std::find(labels.begin(), labels.end(), truth_label_);
    if (it == labels.end()) {
      throw agent_error("truth label '" + truth_label_ +
                        "' is not among the class labels");
    }
    truth = static_cast<std::size_t>(it - labels.begin());
    std::size_t peak = truth;
    if (rng_.uniform() >= p_correct_ && n > 1) {
      std::size_t other = rng_.below(n - 1);
      peak = other < truth ? other : other + 1;
    }
    double off = detail::solve_off_weight(entropy_target_, n);
    std::vector<double> w(n, off);
    w[peak] = 1.0;
    return new_categorical(labels, std::move(w));
  }

  Categorical blend(const Categorical& own, const Categorical& opp) {
    auto [a, b] = align(own, opp);
    std::size_t truth = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.labels[i] == truth_label_) truth = i;
    }
    std::vector<double> w(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      double pull = eta_ * b.probs[i];
      if (i == truth) pull *= 1.0 + truth_affinity_;
      w[i] = (1.0 - eta_) * a.probs[i] + pull;
    }
    return new_categorical(a.labels, std::move(w));
  }

  std::string id_;
  std::string truth_label_;
  double entropy_target_;
  double eta_;
  double p_correct_;
  double truth_affinity_;
  Rng rng_;
  std::optional<Categorical> own_;
};

}  // namespace parley
