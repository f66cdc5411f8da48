#pragma once
// HTTP-backed agent and judge speaking the common chat-completions wire
// format. Kept apart from agents.hpp because httplib is a heavy include.
//
// Secret handling: the API key is read from the environment at call time,
// sent only in the Authorization header, and never stored, logged, or
// serialized. Transcripts and metadata carry the environment variable's
// NAME, never its value.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "parley/agents.hpp"
#include "parley/crit.hpp"
#include "parley/util.hpp"

namespace parley {

namespace detail {

// Splits "http://host:port/prefix" into the origin httplib wants and the
// path prefix to prepend to request paths.
inline std::pair<std::string, std::string> split_base_url(
    const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw config_error("base_url needs a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string origin = base_url.substr(0, path_start);
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {origin, prefix};
}

}  // namespace detail

// One chat-completions conversation leg with retry and backoff. The
// sleeper is injectable so tests can observe delays instead of waiting.
class HttpChat {
 public:
  using Sleeper = std::function<void(int /*ms*/)>;

  explicit HttpChat(LlmEndpointConfig cfg, Sleeper sleeper = {})
      : cfg_(std::move(cfg)),
        sleeper_(sleeper ? std::move(sleeper) : default_sleeper()),
        jitter_rng_(derive_seed(fnv1a64(cfg_.base_url), cfg_.model)) {
    validate(cfg_);
  }

  const LlmEndpointConfig& config() const { return cfg_; }
  int transport_retries() const { return transport_retries_; }
  void reset_counters() { transport_retries_ = 0; }

  // Sends the messages and returns the assistant's content. Transport
  // failures and non-200 statuses are retried with exponential backoff
  // (base * 2^attempt, jittered by +-20%) up to max_retries extra tries.
  std::string complete(const nlohmann::json& messages) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw agent_error("environment variable " + cfg_.api_key_env +
                        " is not set; it must hold the API key");
    }
    nlohmann::json body = {{"model", cfg_.model},
                           {"messages", messages},
                           {"temperature", cfg_.temperature}};
    auto [origin, prefix] = detail::split_base_url(cfg_.base_url);
    std::string path = prefix + "/chat/completions";
    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        ++transport_retries_;
        double jitter = jitter_rng_.uniform(0.8, 1.2);
        int delay = static_cast<int>(
            static_cast<double>(cfg_.backoff_base_ms) *
            static_cast<double>(1 << (attempt - 1)) * jitter);
        sleeper_(delay);
      }
      httplib::Client client(origin);
      client.set_connection_timeout(cfg_.timeout_s, 0);
      client.set_read_timeout(cfg_.timeout_s, 0);
      client.set_write_timeout(cfg_.timeout_s, 0);
      httplib::Headers headers = {
          {"Authorization", std::string("Bearer ") + key}};
      auto res = client.Post(path, headers, body.dump(), "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        log(LogLevel::warn, "chat call failed (" + last_failure + ")");
        continue;
      }
      if (res->status != 200) {
        last_failure = "HTTP status " + std::to_string(res->status);
        log(LogLevel::warn, "chat call failed (" + last_failure + ")");
        continue;
      }
      try {
        nlohmann::json reply = nlohmann::json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content")
            .get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        last_failure = std::string("malformed response envelope: ") + e.what();
        log(LogLevel::warn, "chat call failed (" + last_failure + ")");
        continue;
      }
    }
    throw agent_error("chat endpoint " + cfg_.base_url + " failed after " +
                      std::to_string(cfg_.max_retries + 1) + " attempts (" +
                      last_failure + ")");
  }

 private:
  static Sleeper default_sleeper() {
    return [](int ms) {
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };
  }

  LlmEndpointConfig cfg_;
  Sleeper sleeper_;
  Rng jitter_rng_;
  int transport_retries_ = 0;
};

// Live debater. Renders the context into a prompt, calls the endpoint,
// and parses the reply; an unparseable reply earns exactly one repair
// nudge before the turn fails. A live debater must argue, so a reply
// without reasons counts as unparseable here (scripted and synthetic
// backends may stay silent).
class HttpAgent : public Agent {
 public:
  HttpAgent(std::string id, LlmEndpointConfig cfg,
            HttpChat::Sleeper sleeper = {})
      : id_(std::move(id)), chat_(std::move(cfg), std::move(sleeper)) {}

  std::string id() const override { return id_; }

  AgentOutput respond(const AgentContext& ctx) override {
    chat_.reset_counters();
    repair_retries_ = 0;
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "user"}, {"content", render_prompt(ctx)}});
    std::string content = chat_.complete(messages);
    auto parse_live = [](const std::string& reply) {
      AgentOutput out = parse_agent_json(reply);
      if (out.reasons.empty()) {
        throw parse_error(
            "agent reply breaks rule: at least one reason is required");
      }
      return out;
    };
    try {
      return parse_live(content);
    } catch (const parse_error& first) {
      repair_retries_ = 1;
      messages.push_back({{"role", "assistant"}, {"content", content}});
      messages.push_back(
          {{"role", "user"},
           {"content",
            "Reply with only the JSON object matching the schema."}});
      std::string repaired = chat_.complete(messages);
      try {
        return parse_live(repaired);
      } catch (const parse_error& second) {
        throw agent_error("agent '" + id_ +
                          "' returned unparseable output twice: " +
                          second.what());
      }
    }
  }

  std::vector<std::string> request_information(
      const AgentContext& ctx) override {
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "user"}, {"content", render_prompt(ctx)}});
    messages.push_back(
        {{"role", "user"},
         {"content",
          "The merged prediction is still uncertain. List, as a JSON array "
          "of strings, the additional information that would most change "
          "your confidence. Reply with only the array."}});
    std::string content;
    try {
      content = chat_.complete(messages);
    } catch (const agent_error& e) {
      log(LogLevel::warn, std::string("information request failed: ") +
                              e.what());
      return {};
    }
    auto start = content.find('[');
    auto end = content.rfind(']');
    if (start == std::string::npos || end == std::string::npos ||
        end < start) {
      return {content};
    }
    try {
      auto arr = nlohmann::json::parse(content.substr(start, end - start + 1));
      std::vector<std::string> requests;
      for (const auto& item : arr) {
        if (item.is_string()) requests.push_back(item.get<std::string>());
      }
      return requests;
    } catch (const nlohmann::json::exception&) {
      return {content};
    }
  }

  nlohmann::json backend_meta() const override {
    return {{"backend", "http"},
            {"model", chat_.config().model},
            {"api_key_env", chat_.config().api_key_env},
            {"transport_retries", chat_.transport_retries()},
            {"repair_retries", repair_retries_}};
  }

 private:
  std::string id_;
  HttpChat chat_;
  int repair_retries_ = 0;
};

// Argument judge over the same wire format. Non-finite scores are the
// caller's concern (the evaluator retries once); this class only turns a
// judge request into a prompt and the reply into a verdict.
class LlmJudge : public Judge {
 public:
  explicit LlmJudge(LlmEndpointConfig cfg, HttpChat::Sleeper sleeper = {})
      : chat_(std::move(cfg), std::move(sleeper)) {}

  JudgeVerdict assess(const JudgeRequest& request) override {
    std::string prompt =
        "You are scoring a single argument from a debate.\n"
        "Claim under discussion: " + request.claim + "\n"
        "Argument to score (offered as a " + request.role + "): " +
        request.argument + "\n"
        "Reply with only a JSON object: {\"gamma\": <validity 0-1>, "
        "\"theta\": <source credibility 0-1>, \"is_claim\": <true if the "
        "argument is itself a claim needing its own support>, "
        "\"prediction_index\": <integer slot the argument supports, or "
        "null>, \"rationale\": \"<one sentence>\"}";
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "user"}, {"content", prompt}});
    std::string content = chat_.complete(messages);
    try {
      auto j = nlohmann::json::parse(detail::extract_json_object(content));
      return j.get<JudgeVerdict>();
    } catch (const std::exception& first) {
      messages.push_back({{"role", "assistant"}, {"content", content}});
      messages.push_back(
          {{"role", "user"},
           {"content",
            "Reply with only the JSON object matching the schema."}});
      std::string repaired = chat_.complete(messages);
      try {
        auto j = nlohmann::json::parse(detail::extract_json_object(repaired));
        return j.get<JudgeVerdict>();
      } catch (const std::exception& second) {
        throw judge_error(std::string("judge returned unparseable output "
                                      "twice: ") + second.what());
      }
    }
  }

 private:
  HttpChat chat_;
};

}  // namespace parley
