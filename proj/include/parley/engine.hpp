#pragma once
// The debate state machine. One engine instance drives one debate between
// two agents:
//
//   1. asymmetric opening: A answers from the case alone, B answers with
//      A's fresh output in view;
//   2. gated iteration: another round is played only while the positions
//      keep converging (Wasserstein distance non-increasing), keep sharing
//      information (mutual information non-decreasing), and keep arguing
//      well (round CRIT score non-decreasing), all compared inclusively
//      against the previous round, up to a hard round cap;
//   3. contentiousness: each round's prompts carry a "how hard to argue"
//      level, either from a fixed schedule or recomputed from the previous
//      round's divergence metrics;
//   4. finish: each side's distribution is calibrated by the judged
//      strength of its arguments, then the two are merged weighted by
//      their argument-quality totals. If the merged answer is still too
//      uncertain, both agents are asked once what extra information they
//      would want.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "parley/agents.hpp"
#include "parley/categorical.hpp"
#include "parley/crit.hpp"
#include "parley/metrics.hpp"
#include "parley/util.hpp"

namespace parley {

inline constexpr const char* kDefaultPromptTemplate =
    R"(You are one of two debaters asked to label a case.
Information set: {S}
Candidate labels: {C}
Arguments so far:
{R}
Opponent's latest position: {OPPONENT}
Contentiousness level: {DELTA} out of 100. High means attack the weakest points of the opposing position; low means reconcile toward the best joint answer.
Predict a top-{K} confidence distribution on the candidate labels given the information and arguments above at contentiousness level {DELTA}.
Reply with only JSON: {"predictions": [{"label": "...", "confidence": 0.0}], "reasons": ["..."], "requests": ["..."]})";

struct DebateTask {
  std::string information;                // the case under debate
  std::vector<std::string> class_labels;  // may be empty (open label set)
  std::string claim;  // optional; defaults to each agent's top label
  std::string prompt_template = kDefaultPromptTemplate;
};

enum class DeltaMode { schedule, formula };

inline std::string to_string(DeltaMode mode) {
  return mode == DeltaMode::schedule ? "schedule" : "formula";
}

inline DeltaMode delta_mode_from_string(const std::string& s) {
  if (s == "schedule") return DeltaMode::schedule;
  if (s == "formula") return DeltaMode::formula;
  throw config_error("unknown contentiousness mode: " + s);
}

struct DebateConfig {
  int k = 3;
  double delta0 = 90.0;
  DeltaMode delta_mode = DeltaMode::schedule;
  std::vector<double> schedule = {90.0, 70.0, 30.0, 10.0};
  std::vector<double> formula_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  int max_rounds = 8;
  double epsilon = 1e-4;
  Ground ground = Ground::discrete;
  double entropy_request_threshold = 0.75;  // fraction of log2(k)
  std::uint64_t seed = 0;
  int crit_max_depth = 1;
};

inline void validate(const DebateConfig& config) {
  if (config.k < 1) throw config_error("k must be >= 1");
  if (config.delta0 < 0.0 || config.delta0 > 100.0) {
    throw config_error("delta0 must lie in [0, 100]");
  }
  if (config.delta_mode == DeltaMode::schedule && config.schedule.empty()) {
    throw config_error("schedule mode needs a non-empty schedule");
  }
  if (config.formula_weights.size() != 3) {
    throw config_error("formula_weights needs exactly three entries");
  }
  double sum = 0.0;
  for (double w : config.formula_weights) {
    if (w < 0.0) throw config_error("formula weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw config_error("formula weights must sum to 1");
  }
  if (config.max_rounds < 1) throw config_error("max_rounds must be >= 1");
  if (config.epsilon <= 0.0 || config.epsilon >= 1.0) {
    throw config_error("epsilon must lie in (0, 1)");
  }
  if (config.entropy_request_threshold < 0.0) {
    throw config_error("entropy_request_threshold must be >= 0");
  }
  if (config.crit_max_depth < 0) {
    throw config_error("crit_max_depth must be >= 0");
  }
}

struct RoundRecord {
  int round = 0;
  MetricSnapshot snapshot;
  double delta = 0.0;
  double crit_a = 0.0;
  double crit_b = 0.0;
};

inline void to_json(nlohmann::json& j, const RoundRecord& r) {
  j = nlohmann::json{{"round", r.round},
                     {"snapshot", r.snapshot},
                     {"delta", r.delta},
                     {"crit_a", r.crit_a},
                     {"crit_b", r.crit_b}};
}

struct DebateState {
  int t = 0;
  AgentOutput last_a;
  AgentOutput last_b;
  std::vector<std::string> accumulated_reasons;  // attributed, append-only
  double wd_old = 0.0;
  double mi_old = 0.0;
  double crit_old = 0.0;
  double delta = 90.0;  // level used by the latest round's prompts
  std::vector<RoundRecord> history;
  CritReport last_report_a;  // final-round argument scores, for calibration
  CritReport last_report_b;
};

enum class TerminationCause { metric_regression, max_rounds, agent_failure };

inline std::string to_string(TerminationCause cause) {
  switch (cause) {
    case TerminationCause::metric_regression: return "metric_regression";
    case TerminationCause::max_rounds: return "max_rounds";
    case TerminationCause::agent_failure: return "agent_failure";
  }
  return "unknown";
}

struct DebateOutcome {
  std::optional<Categorical> p_final;  // absent when the debate aborted
  std::vector<std::string> reasons;
  int rounds_used = 0;
  TerminationCause termination_cause = TerminationCause::max_rounds;
  std::vector<std::string> info_requests;
  std::vector<RoundRecord> history;
  double omega_a = 0.0;
  double omega_b = 0.0;
  bool weighted = true;  // false when both quality scores were zero
  std::string debate_id;
};

// Transcript hooks. Round-level fields (crit, snapshot) only exist once
// both agents have spoken, so the two turn records of a round are emitted
// together when it completes; on an abort, whatever turns exist are
// emitted with those fields null so the partial transcript survives.
struct HeaderEvent {
  std::string debate_id;
  DebateTask task;
  DebateConfig config;
  long timestamp = 0;
};

struct TurnEvent {
  std::string debate_id;
  int round = 0;
  std::string agent;  // "A" or "B"
  AgentOutput output;
  std::optional<CritReport> crit;
  double delta = 0.0;
  std::optional<MetricSnapshot> snapshot;  // on the round's closing turn
  long timestamp = 0;
  nlohmann::json backend_meta;
};

struct FinalEvent {
  std::string debate_id;
  std::optional<Categorical> p_final;
  std::string termination_cause;
  std::vector<std::string> info_requests;
  int rounds_used = 0;
  double omega_a = 0.0;
  double omega_b = 0.0;
  bool weighted = true;
  long timestamp = 0;
};

class TranscriptSink {
 public:
  virtual ~TranscriptSink() = default;
  virtual void on_header(const HeaderEvent&) {}
  virtual void on_turn(const TurnEvent&) {}
  virtual void on_final(const FinalEvent&) {}
};

// Gate for playing another round: candidate metrics must not regress
// against the state's baselines (inclusive comparisons) and the round
// budget must allow one more.
inline bool should_continue(const DebateState& state,
                            const MetricSnapshot& new_snapshot,
                            double new_crit, const DebateConfig& config) {
  return new_snapshot.wd <= state.wd_old && new_snapshot.mi >= state.mi_old &&
         new_crit >= state.crit_old && state.t + 1 < config.max_rounds;
}

// Contentiousness for a given round. Schedule mode indexes the schedule
// (sticking to its last entry past the end); formula mode rescales the
// previous round's divergences against their attainable maxima:
//
//   delta = 100 * (alpha*KL/KL_max + beta*JS/JS_max + gamma*WD/WD_max)
//
// with KL = max of the two directions, KL_max = log2(1/epsilon) (the
// smoothing floor caps how large KL can get), JS_max = 1 bit, and WD_max
// the ground-metric diameter.
inline double contentiousness_for_round(int round,
                                        const MetricSnapshot* previous,
                                        std::size_t n_labels,
                                        const DebateConfig& config) {
  if (config.delta_mode == DeltaMode::schedule) {
    std::size_t last = config.schedule.size() - 1;
    std::size_t i = std::min(static_cast<std::size_t>(round), last);
    return config.schedule[i];
  }
  if (previous == nullptr) return config.delta0;
  double kl = std::max(previous->kl_ab, previous->kl_ba);
  double kl_max = std::log2(1.0 / config.epsilon);
  double wd_max = ground_diameter(config.ground, n_labels);
  double a = config.formula_weights[0];
  double b = config.formula_weights[1];
  double g = config.formula_weights[2];
  double delta = 100.0 * (a * kl / kl_max + b * previous->js +
                          g * (wd_max > 0.0 ? previous->wd / wd_max : 0.0));
  return std::clamp(delta, 0.0, 100.0);
}

// The level for the round about to start, from the latest completed
// round's metrics.
inline double update_contentiousness(const DebateState& state,
                                     const DebateConfig& config) {
  const MetricSnapshot* previous =
      state.history.empty() ? nullptr : &state.history.back().snapshot;
  auto aligned = align(state.last_a.distribution, state.last_b.distribution);
  return contentiousness_for_round(state.t + 1, previous,
                                   aligned.first.size(), config);
}

// Element-wise reweighting by argument strength, then back to the simplex.
// Uniformly scaling the strengths cancels out, so only their ratios matter.
inline Categorical calibrate(const Categorical& p,
                             const std::vector<double>& strengths) {
  if (strengths.size() != p.size()) {
    throw error("calibration needs one strength per probability (" +
                    std::to_string(strengths.size()) + " vs " +
                    std::to_string(p.size()) + ")",
                "calibration_mismatch");
  }
  std::vector<double> w(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (strengths[i] < 0.0) {
      throw error("strengths must be non-negative", "bad_strength");
    }
    w[i] = p.probs[i] * strengths[i];
  }
  try {
    return new_categorical(p.labels, std::move(w));
  } catch (const error&) {
    throw error("calibration zeroed out every entry", "calibration_all_zero");
  }
}

// Highest-probability label, ties broken lexicographically.
inline std::string top_label(const Categorical& c) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c.probs[i] > c.probs[best] ||
        (c.probs[i] == c.probs[best] && c.labels[i] < c.labels[best])) {
      best = i;
    }
  }
  return c.labels[best];
}

class Engine {
 public:
  Engine(DebateTask task, DebateConfig config, Agent& agent_a, Agent& agent_b,
         Judge& judge, TranscriptSink* sink = nullptr)
      : task_(std::move(task)),
        config_(std::move(config)),
        a_(agent_a),
        b_(agent_b),
        judge_(judge),
        sink_(sink) {
    validate(config_);
    if (task_.information.empty()) {
      throw error("debate task needs a non-empty information set",
                  "empty_information");
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "run-%016llx",
                  static_cast<unsigned long long>(
                      derive_seed(config_.seed, task_.information)));
    debate_id_ = buf;
  }

  const std::string& debate_id() const { return debate_id_; }

  // Round 0. A sees nothing of B; B sees A's fresh output.
  DebateState open_round() {
    emit_header();
    DebateState state;
    state.delta = config_.delta0;
    play_round(state, 0, config_.delta0);
    state.t = 0;
    const RoundRecord& record = state.history.back();
    state.wd_old = record.snapshot.wd;
    state.mi_old = record.snapshot.mi;
    state.crit_old = 0.5 * (record.crit_a + record.crit_b);
    return state;
  }

  // Plays round t+1. Returns the gate verdict for continuing afterwards;
  // baselines advance to the fresh round either way (the caller stops on
  // false, so they are only consulted again when the gate passed).
  bool step(DebateState& state) {
    int round = state.t + 1;
    double delta = update_contentiousness(state, config_);
    state.delta = delta;
    play_round(state, round, delta);
    const RoundRecord& record = state.history.back();
    double new_crit = 0.5 * (record.crit_a + record.crit_b);
    bool go = should_continue(state, record.snapshot, new_crit, config_);
    state.t = round;
    state.wd_old = record.snapshot.wd;
    state.mi_old = record.snapshot.mi;
    state.crit_old = new_crit;
    return go;
  }

  // Calibrated, quality-weighted merge plus the one-shot uncertainty ask.
  DebateOutcome finalize(DebateState& state, TerminationCause cause) {
    DebateOutcome outcome;
    outcome.debate_id = debate_id_;
    outcome.termination_cause = cause;
    outcome.reasons = state.accumulated_reasons;
    outcome.history = state.history;
    outcome.rounds_used = static_cast<int>(state.history.size());

    Categorical cal_a = calibrated(state.last_a, state.last_report_a);
    Categorical cal_b = calibrated(state.last_b, state.last_report_b);
    double omega_a = state.last_report_a.gamma_total;
    double omega_b = state.last_report_b.gamma_total;
    outcome.omega_a = omega_a;
    outcome.omega_b = omega_b;
    double total = omega_a + omega_b;
    outcome.weighted = total > 0.0;
    double alpha = outcome.weighted ? omega_a / total : 0.5;
    outcome.p_final = mix(cal_a, cal_b, alpha);

    double uncertainty = entropy(*outcome.p_final);
    double budget = config_.entropy_request_threshold *
                    std::log2(static_cast<double>(config_.k));
    if (uncertainty > budget) {
      outcome.info_requests = gather_info_requests(state);
    }
    emit_final(outcome);
    return outcome;
  }

  DebateOutcome run() {
    DebateState state;
    try {
      state = open_round();
      while (true) {
        if (state.t + 1 >= config_.max_rounds) {
          return finalize(state, TerminationCause::max_rounds);
        }
        if (!step(state)) {
          return finalize(state, TerminationCause::metric_regression);
        }
      }
    } catch (const agent_error& e) {
      log(LogLevel::error, std::string("debate aborted: ") + e.what());
    } catch (const judge_error& e) {
      log(LogLevel::error, std::string("debate aborted: ") + e.what());
    }
    // Abort path: whatever completed stays on the record.
    DebateOutcome outcome;
    outcome.debate_id = debate_id_;
    outcome.termination_cause = TerminationCause::agent_failure;
    outcome.reasons = state.accumulated_reasons;
    outcome.history = state.history;
    outcome.rounds_used = static_cast<int>(state.history.size());
    outcome.weighted = false;
    emit_final(outcome);
    return outcome;
  }

 private:
  AgentContext context_for(const DebateState& state, int round, double delta,
                           const std::optional<AgentOutput>& opponent) const {
    AgentContext ctx;
    ctx.information = task_.information;
    ctx.class_labels = task_.class_labels;
    ctx.prompt_template = task_.prompt_template;
    ctx.accumulated_reasons = state.accumulated_reasons;
    ctx.opponent_output = opponent;
    ctx.delta = delta;
    ctx.k = config_.k;
    ctx.round = round;
    return ctx;
  }

  void append_reasons(DebateState& state, const std::string& speaker,
                      const std::vector<Argument>& reasons) {
    for (const auto& r : reasons) {
      state.accumulated_reasons.push_back(speaker + ": " + r.text);
    }
  }

  std::string claim_for(const AgentOutput& output) const {
    if (!task_.claim.empty()) return task_.claim;
    return "The best-supported label is '" + top_label(output.distribution) +
           "'.";
  }

  // Scores one agent's fresh arguments against the opponent's as rivals.
  // A round where neither side argued scores a neutral 0.5 without
  // consulting the judge.
  std::pair<CritReport, CritReport> round_crit(const AgentOutput& a_out,
                                               const AgentOutput& b_out) {
    auto neutral = [](const std::string& claim) {
      CritReport report;
      report.claim = claim;
      report.gamma_total = 0.5;
      report.narrative = "no arguments offered this round";
      return report;
    };
    if (a_out.reasons.empty() && b_out.reasons.empty()) {
      return {neutral(claim_for(a_out)), neutral(claim_for(b_out))};
    }
    auto report_for = [this](const AgentOutput& own, const AgentOutput& opp) {
      ArgumentDoc doc;
      doc.claim = claim_for(own);
      doc.reasons = own.reasons;
      doc.rivals = opp.reasons;
      return evaluate(doc, judge_, config_.crit_max_depth);
    };
    return {report_for(a_out, b_out), report_for(b_out, a_out)};
  }

  // One full round: A speaks, B answers with A's output in view, the
  // round is measured and judged, and both turn records are emitted.
  void play_round(DebateState& state, int round, double delta) {
    std::optional<AgentOutput> a_opponent;
    if (round > 0) a_opponent = state.last_b;
    AgentOutput a_out = a_.respond(context_for(state, round, delta,
                                               a_opponent));
    nlohmann::json a_meta = a_.backend_meta();
    append_reasons(state, "A", a_out.reasons);

    AgentOutput b_out;
    nlohmann::json b_meta;
    try {
      b_out = b_.respond(context_for(state, round, delta, a_out));
      b_meta = b_.backend_meta();
    } catch (...) {
      emit_turn(round, "A", a_out, std::nullopt, delta, std::nullopt, a_meta);
      throw;
    }
    append_reasons(state, "B", b_out.reasons);

    MetricSnapshot snap = snapshot(a_out.distribution, b_out.distribution,
                                   config_.ground, config_.epsilon);
    CritReport report_a, report_b;
    try {
      std::tie(report_a, report_b) = round_crit(a_out, b_out);
    } catch (...) {
      emit_turn(round, "A", a_out, std::nullopt, delta, std::nullopt, a_meta);
      emit_turn(round, "B", b_out, std::nullopt, delta, snap, b_meta);
      throw;
    }

    emit_turn(round, "A", a_out, report_a, delta, std::nullopt, a_meta);
    emit_turn(round, "B", b_out, report_b, delta, snap, b_meta);

    RoundRecord record;
    record.round = round;
    record.snapshot = snap;
    record.delta = delta;
    record.crit_a = report_a.gamma_total;
    record.crit_b = report_b.gamma_total;
    state.history.push_back(record);
    state.last_a = std::move(a_out);
    state.last_b = std::move(b_out);
    state.last_report_a = std::move(report_a);
    state.last_report_b = std::move(report_b);
  }

  Categorical calibrated(const AgentOutput& output,
                         const CritReport& report) const {
    auto strengths = strengths_for_calibration(
        report, static_cast<int>(output.distribution.size()));
    return calibrate(output.distribution, strengths);
  }

  std::vector<std::string> gather_info_requests(const DebateState& state) {
    std::vector<std::string> requests;
    auto ask = [&](Agent& agent, const std::optional<AgentOutput>& opponent) {
      try {
        auto got = agent.request_information(
            context_for(state, state.t, state.delta, opponent));
        requests.insert(requests.end(), got.begin(), got.end());
      } catch (const std::exception& e) {
        log(LogLevel::warn,
            "information request from agent '" + agent.id() +
                "' failed: " + e.what());
      }
    };
    ask(a_, state.last_b);
    ask(b_, state.last_a);
    return requests;
  }

  void emit_header() {
    if (sink_ == nullptr || !emit_header_once_) return;
    HeaderEvent event;
    event.debate_id = debate_id_;
    event.task = task_;
    event.config = config_;
    event.timestamp = tick_++;
    sink_->on_header(event);
    emit_header_once_ = false;
  }

  void emit_turn(int round, const std::string& agent, const AgentOutput& out,
                 std::optional<CritReport> crit, double delta,
                 std::optional<MetricSnapshot> snap, nlohmann::json meta) {
    if (sink_ == nullptr) return;
    TurnEvent event;
    event.debate_id = debate_id_;
    event.round = round;
    event.agent = agent;
    event.output = out;
    event.crit = std::move(crit);
    event.delta = delta;
    event.snapshot = snap;
    event.timestamp = tick_++;
    event.backend_meta = std::move(meta);
    sink_->on_turn(event);
  }

  void emit_final(const DebateOutcome& outcome) {
    if (sink_ == nullptr) return;
    FinalEvent event;
    event.debate_id = debate_id_;
    event.p_final = outcome.p_final;
    event.termination_cause = to_string(outcome.termination_cause);
    event.info_requests = outcome.info_requests;
    event.rounds_used = outcome.rounds_used;
    event.omega_a = outcome.omega_a;
    event.omega_b = outcome.omega_b;
    event.weighted = outcome.weighted;
    event.timestamp = tick_++;
    sink_->on_final(event);
  }

  DebateTask task_;
  DebateConfig config_;
  Agent& a_;
  Agent& b_;
  Judge& judge_;
  TranscriptSink* sink_;
  std::string debate_id_;
  long tick_ = 0;
  bool emit_header_once_ = true;
};

// Convenience wrapper matching the shape "run a whole debate".
inline DebateOutcome run_debate(const DebateTask& task,
                                const DebateConfig& config, Agent& a, Agent& b,
                                Judge& judge, TranscriptSink* sink = nullptr) {
  Engine engine(task, config, a, b, judge, sink);
  return engine.run();
}

}  // namespace parley
