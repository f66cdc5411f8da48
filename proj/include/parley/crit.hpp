#pragma once
// Argument-quality scoring. A document is a claim plus supporting reasons
// and rival (counter) reasons; a pluggable judge assigns each reason a
// validation score gamma and a source-credibility score theta, and the
// aggregate Gamma rewards strong support and punishes strong unrebutted
// rivals:
//
//   Gamma = (sum_r gamma*theta + sum_r' (1 - gamma'*theta')) / (N + N')
//
// A judge may flag a reason as itself being a claim; if recursion depth
// remains, that reason is resolved into a sub-document and scored by its
// own aggregate. Rivals are always scored directly.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "parley/util.hpp"

namespace parley {

// One argument. `credibility` is an optional caller-supplied source hint
// that overrides the judge's theta when present. `prediction_index` ties
// the argument to one of the speaker's predictions for calibration; the
// judge may also supply the tie, but an explicit tag wins.
struct Argument {
  std::string text;
  std::optional<double> credibility;
  std::optional<int> prediction_index;

  Argument() = default;
  Argument(std::string t) : text(std::move(t)) {}  // NOLINT: convenience
  bool operator==(const Argument&) const = default;
};

struct ArgumentDoc {
  std::string claim;
  std::vector<Argument> reasons;
  std::vector<Argument> rivals;
};

inline void validate(const ArgumentDoc& doc) {
  if (doc.claim.empty()) {
    throw error("argument document needs a non-empty claim", "empty_claim");
  }
  if (doc.reasons.empty() && doc.rivals.empty()) {
    throw error("argument document needs at least one reason or rival",
                "empty_doc");
  }
}

struct ReasonScore {
  double gamma = 0.0;
  double theta = 1.0;
  std::string rationale;
  bool scored_as_claim = false;
  std::optional<int> prediction_index;
};

struct CritReport {
  std::string claim;
  std::vector<ReasonScore> reason_scores;
  std::vector<ReasonScore> rival_scores;
  double gamma_total = 0.0;
  int depth_used = 0;
  std::string narrative;
};

struct JudgeRequest {
  std::string claim;
  std::string argument;
  std::string role;  // "reason" or "rival"
};

struct JudgeVerdict {
  double gamma = 0.0;
  double theta = 1.0;
  bool is_claim = false;
  std::optional<int> prediction_index;
  std::string rationale;
};

inline void to_json(nlohmann::json& j, const JudgeRequest& r) {
  j = nlohmann::json{
      {"claim", r.claim}, {"argument", r.argument}, {"role", r.role}};
}

inline void from_json(const nlohmann::json& j, JudgeRequest& r) {
  j.at("claim").get_to(r.claim);
  j.at("argument").get_to(r.argument);
  j.at("role").get_to(r.role);
}

inline void to_json(nlohmann::json& j, const JudgeVerdict& v) {
  j = nlohmann::json{{"gamma", v.gamma},
                     {"theta", v.theta},
                     {"is_claim", v.is_claim},
                     {"prediction_index", v.prediction_index
                                              ? nlohmann::json(*v.prediction_index)
                                              : nlohmann::json(nullptr)},
                     {"rationale", v.rationale}};
}

inline void from_json(const nlohmann::json& j, JudgeVerdict& v) {
  j.at("gamma").get_to(v.gamma);
  j.at("theta").get_to(v.theta);
  v.is_claim = j.value("is_claim", false);
  if (j.contains("prediction_index") && !j.at("prediction_index").is_null()) {
    v.prediction_index = j.at("prediction_index").get<int>();
  } else {
    v.prediction_index.reset();
  }
  v.rationale = j.value("rationale", "");
}

class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeVerdict assess(const JudgeRequest& request) = 0;
};

// Fixed verdict for every argument; handy as a neutral stand-in.
class ConstantJudge : public Judge {
 public:
  ConstantJudge(double gamma, double theta) : gamma_(gamma), theta_(theta) {}
  JudgeVerdict assess(const JudgeRequest&) override {
    return JudgeVerdict{gamma_, theta_, false, std::nullopt, ""};
  }

 private:
  double gamma_;
  double theta_;
};

// Table lookup keyed by argument text. Table JSON: {"<argument text>":
// {"gamma":...,"theta":...,"is_claim":...,"prediction_index":...,
//  "rationale":...}}. Missing entries fall back to the default verdict
// when one is set, otherwise fail.
class ScriptedJudge : public Judge {
 public:
  explicit ScriptedJudge(nlohmann::json table) : table_(std::move(table)) {
    if (!table_.is_object()) {
      throw config_error("scripted judge table must be a JSON object");
    }
  }

  void set_default(JudgeVerdict verdict) { default_ = std::move(verdict); }

  JudgeVerdict assess(const JudgeRequest& request) override {
    auto it = table_.find(request.argument);
    if (it == table_.end()) {
      if (default_) return *default_;
      throw judge_error("scripted judge has no entry for argument: " +
                        request.argument);
    }
    return it->get<JudgeVerdict>();
  }

 private:
  nlohmann::json table_;
  std::optional<JudgeVerdict> default_;
};

// Resolves a reason's text into the sub-document a recursive evaluation
// scores. The identity resolver treats the text as its own one-reason
// document with full credibility.
class DocResolver {
 public:
  virtual ~DocResolver() = default;
  struct Resolution {
    ArgumentDoc doc;
    double credibility = 1.0;
  };
  virtual Resolution resolve(const std::string& reason_text) = 0;
};

class IdentityResolver : public DocResolver {
 public:
  Resolution resolve(const std::string& reason_text) override {
    ArgumentDoc doc;
    doc.claim = reason_text;
    doc.reasons.emplace_back(reason_text);
    return Resolution{std::move(doc), 1.0};
  }
};

// Weighted aggregate over reasons and rivals; clamped to [0,1], which is a
// no-op when the judge respects its score range.
inline double gamma_total(const std::vector<ReasonScore>& reasons,
                          const std::vector<ReasonScore>& rivals) {
  if (reasons.empty() && rivals.empty()) {
    throw error("gamma_total needs at least one score", "empty_scores");
  }
  double total = 0.0;
  for (const auto& r : reasons) total += r.gamma * r.theta;
  for (const auto& r : rivals) total += 1.0 - r.gamma * r.theta;
  total /= static_cast<double>(reasons.size() + rivals.size());
  return std::clamp(total, 0.0, 1.0);
}

namespace detail {

// One judge call with the non-finite-score retry. Scores outside [0,1]
// are clamped with a warning rather than rejected.
inline JudgeVerdict checked_assess(Judge& judge, const JudgeRequest& request,
                                   std::size_t index) {
  auto finite = [](const JudgeVerdict& v) {
    return std::isfinite(v.gamma) && std::isfinite(v.theta);
  };
  JudgeVerdict v;
  try {
    v = judge.assess(request);
    if (!finite(v)) {
      log(LogLevel::warn, "judge returned a non-finite score; retrying once");
      v = judge.assess(request);
    }
  } catch (const judge_error&) {
    throw;
  } catch (const std::exception& e) {
    throw judge_error("judge failed on " + request.role + " #" +
                      std::to_string(index) + ": " + e.what());
  }
  if (!finite(v)) {
    throw judge_error("judge returned a non-finite score for " + request.role +
                      " #" + std::to_string(index));
  }
  if (v.gamma < 0.0 || v.gamma > 1.0 || v.theta < 0.0 || v.theta > 1.0) {
    log(LogLevel::warn, "judge score outside [0,1]; clamping");
    v.gamma = std::clamp(v.gamma, 0.0, 1.0);
    v.theta = std::clamp(v.theta, 0.0, 1.0);
  }
  return v;
}

}  // namespace detail

CritReport evaluate(const ArgumentDoc& doc, Judge& judge, int max_depth,
                    DocResolver* resolver);

namespace detail {

inline ReasonScore score_reason(const std::string& claim, const Argument& arg,
                                Judge& judge, int max_depth,
                                DocResolver* resolver, std::size_t index,
                                int* depth_used) {
  JudgeVerdict v =
      checked_assess(judge, JudgeRequest{claim, arg.text, "reason"}, index);
  ReasonScore score;
  score.prediction_index = arg.prediction_index ? arg.prediction_index
                                                : v.prediction_index;
  if (v.is_claim && max_depth > 0) {
    // The reason is itself a claim: resolve it and let the sub-document's
    // aggregate stand in for gamma, with the resolver vouching for theta.
    IdentityResolver identity;
    DocResolver& r = resolver ? *resolver : identity;
    auto resolution = r.resolve(arg.text);
    CritReport sub = evaluate(resolution.doc, judge, max_depth - 1, resolver);
    score.gamma = sub.gamma_total;
    score.theta = arg.credibility.value_or(resolution.credibility);
    score.scored_as_claim = true;
    score.rationale = v.rationale;
    *depth_used = std::max(*depth_used, sub.depth_used + 1);
    return score;
  }
  score.gamma = v.gamma;
  score.theta = arg.credibility.value_or(v.theta);
  score.rationale = v.rationale;
  return score;
}

}  // namespace detail

// Scores a document. Reasons may recurse (judge-flagged, depth permitting);
// rivals never do. The returned narrative is a readable synthesis of the
// per-argument rationales; it carries no numeric weight.
inline CritReport evaluate(const ArgumentDoc& doc, Judge& judge,
                           int max_depth = 1,
                           DocResolver* resolver = nullptr) {
  validate(doc);
  if (max_depth < 0) throw error("max_depth must be >= 0", "bad_depth");
  CritReport report;
  report.claim = doc.claim;
  for (std::size_t i = 0; i < doc.reasons.size(); ++i) {
    report.reason_scores.push_back(
        detail::score_reason(doc.claim, doc.reasons[i], judge, max_depth,
                             resolver, i, &report.depth_used));
  }
  for (std::size_t i = 0; i < doc.rivals.size(); ++i) {
    JudgeVerdict v = detail::checked_assess(
        judge, JudgeRequest{doc.claim, doc.rivals[i].text, "rival"}, i);
    ReasonScore score;
    score.gamma = v.gamma;
    score.theta = doc.rivals[i].credibility.value_or(v.theta);
    score.rationale = v.rationale;
    score.prediction_index = doc.rivals[i].prediction_index
                                 ? doc.rivals[i].prediction_index
                                 : v.prediction_index;
    report.rival_scores.push_back(std::move(score));
  }
  report.gamma_total = gamma_total(report.reason_scores, report.rival_scores);
  std::string narrative = "Claim: " + doc.claim + "\n";
  for (std::size_t i = 0; i < report.reason_scores.size(); ++i) {
    const auto& s = report.reason_scores[i];
    narrative += "reason #" + std::to_string(i) + " scored " +
                 format_double(s.gamma * s.theta);
    if (!s.rationale.empty()) narrative += ": " + s.rationale;
    narrative += "\n";
  }
  for (std::size_t i = 0; i < report.rival_scores.size(); ++i) {
    const auto& s = report.rival_scores[i];
    narrative += "rival #" + std::to_string(i) + " scored " +
                 format_double(s.gamma * s.theta);
    if (!s.rationale.empty()) narrative += ": " + s.rationale;
    narrative += "\n";
  }
  narrative +=
      "aggregate validation " + format_double(report.gamma_total) + "\n";
  report.narrative = std::move(narrative);
  return report;
}

// Per-prediction argument strength for confidence calibration: the mean
// gamma*theta of the reasons tagged to each prediction slot, with
// untagged slots defaulting to a neutral strength. Rival scores never
// contribute. Tags outside [0, k) are an error.
inline std::vector<double> strengths_for_calibration(
    const CritReport& report, int k, double default_strength = 0.5) {
  if (k < 1) throw error("calibration needs at least one slot", "bad_k");
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (const auto& s : report.reason_scores) {
    if (!s.prediction_index) continue;
    int idx = *s.prediction_index;
    if (idx < 0 || idx >= k) {
      throw error("reason tagged with prediction index " +
                      std::to_string(idx) + " but only " + std::to_string(k) +
                      " predictions exist",
                  "bad_prediction_index");
    }
    sums[static_cast<std::size_t>(idx)] += s.gamma * s.theta;
    counts[static_cast<std::size_t>(idx)] += 1;
  }
  std::vector<double> strengths(static_cast<std::size_t>(k), default_strength);
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    if (counts[i] > 0) strengths[i] = sums[i] / counts[i];
  }
  return strengths;
}

}  // namespace parley
