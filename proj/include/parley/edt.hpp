#pragma once
// Entropy-duality lab: bound checks for mixtures of two prediction
// distributions, plus a Monte-Carlo simulator that contrasts a
// high/low-entropy agent pairing against a matched-entropy pairing on the
// same trials.
//
// The bound being exercised: for P_C = alpha*P_A + (1-alpha)*P_B,
//
//   H(P_C) >= alpha*H(P_A) + (1-alpha)*H(P_B)          (concavity)
//           = H(P_B) + alpha*(H(P_A) - H(P_B))         (same thing, gap form)
//
// so when the pair straddles a wide entropy gap, the combined prediction
// keeps a high entropy floor (it hedges) while a matched pair's floor sits
// at their common entropy. The simulator measures what that buys in truth
// recovery when both agents are equally well informed.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "parley/agents.hpp"
#include "parley/categorical.hpp"
#include "parley/crit.hpp"
#include "parley/engine.hpp"
#include "parley/util.hpp"

namespace parley {

struct EdtCheck {
  double h_a = 0.0;
  double h_b = 0.0;
  double h_c = 0.0;  // entropy of the alpha-mixture
  double alpha = 0.0;
  double jensen_bound = 0.0;  // alpha*h_a + (1-alpha)*h_b
  double gap_bound = 0.0;     // h_b + alpha*entropy_gap, algebraically equal
  double entropy_gap = 0.0;   // h_a - h_b
  bool jensen_satisfied = false;
  bool gap_satisfied = false;

  bool satisfied() const { return jensen_satisfied && gap_satisfied; }
};

inline void to_json(nlohmann::json& j, const EdtCheck& c) {
  j = nlohmann::json{{"h_a", c.h_a},
                     {"h_b", c.h_b},
                     {"h_c", c.h_c},
                     {"alpha", c.alpha},
                     {"jensen_bound", c.jensen_bound},
                     {"gap_bound", c.gap_bound},
                     {"entropy_gap", c.entropy_gap},
                     {"jensen_satisfied", c.jensen_satisfied},
                     {"gap_satisfied", c.gap_satisfied}};
}

inline constexpr double kEdtTolerance = 1e-9;

// Evaluates both forms of the mixture-entropy lower bound at one alpha.
inline EdtCheck edt_check(const Categorical& p_a, const Categorical& p_b,
                          double alpha) {
  EdtCheck check;
  check.alpha = alpha;
  check.h_a = entropy(p_a);
  check.h_b = entropy(p_b);
  check.h_c = entropy(mix(p_a, p_b, alpha));  // mix validates alpha
  check.entropy_gap = check.h_a - check.h_b;
  check.jensen_bound = alpha * check.h_a + (1.0 - alpha) * check.h_b;
  check.gap_bound = check.h_b + alpha * check.entropy_gap;
  check.jensen_satisfied = check.h_c >= check.jensen_bound - kEdtTolerance;
  check.gap_satisfied = check.h_c >= check.gap_bound - kEdtTolerance;
  return check;
}

// Bound checks across an even alpha grid from 0 to 1 inclusive.
inline std::vector<EdtCheck> sweep_alpha(const Categorical& p_a,
                                         const Categorical& p_b, int steps) {
  if (steps < 2) throw error("alpha sweep needs at least 2 steps", "bad_steps");
  std::vector<EdtCheck> checks;
  checks.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    double alpha = static_cast<double>(i) / static_cast<double>(steps - 1);
    checks.push_back(edt_check(p_a, p_b, alpha));
  }
  return checks;
}

struct PairingOptions {
  int n_trials = 2000;
  int n_labels = 5;
  double entropy_hi = 2.0;  // bits, opening entropy of agent A
  double entropy_lo = 0.5;  // bits, opening entropy of agent B
  double eta = 0.3;         // per-round blend rate toward the opponent
  std::uint64_t seed = 7;
  double p_correct = 0.5;      // chance each agent's opening peak is the truth
  double truth_affinity = 10.0;  // scale of the shared evidence pull
};

struct PairingReport {
  int trials = 0;
  double accuracy_contrasting = 0.0;
  double accuracy_matched = 0.0;
  double se_contrasting = 0.0;  // binomial standard errors
  double se_matched = 0.0;
  double mean_entropy_gap = 0.0;  // realized opening gap, contrasting arm
  std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const PairingReport& r) {
  j = nlohmann::json{{"trials", r.trials},
                     {"accuracy_contrasting", r.accuracy_contrasting},
                     {"accuracy_matched", r.accuracy_matched},
                     {"se_contrasting", r.se_contrasting},
                     {"se_matched", r.se_matched},
                     {"mean_entropy_gap", r.mean_entropy_gap},
                     {"seed", r.seed}};
}

namespace detail {

// One full synthetic debate; returns whether the merged answer recovers
// the truth, and the opening entropy gap.
struct ArmResult {
  bool hit = false;
  double opening_gap = 0.0;
};

inline ArmResult run_pairing_arm(const std::vector<std::string>& labels,
                                 const std::string& truth, double target_a,
                                 double target_b, double eta, double kappa,
                                 double p_correct, std::uint64_t seed_a,
                                 std::uint64_t seed_b,
                                 const DebateConfig& config) {
  SyntheticAgent a("A", truth, target_a, eta, seed_a, p_correct, kappa);
  SyntheticAgent b("B", truth, target_b, eta, seed_b, p_correct, kappa);
  ConstantJudge judge(0.5, 1.0);  // never consulted: synthetic turns are bare
  DebateTask task;
  task.information = "synthetic pairing trial";
  task.class_labels = labels;
  Engine engine(task, config, a, b, judge);
  DebateOutcome outcome = engine.run();
  ArmResult result;
  result.hit = outcome.p_final && top_label(*outcome.p_final) == truth;
  result.opening_gap = outcome.history.front().snapshot.h_a -
                       outcome.history.front().snapshot.h_b;
  return result;
}

}  // namespace detail

// Monte-Carlo comparison of a contrasting-entropy pairing against a
// matched-entropy pairing. Per trial, a hidden truth is drawn, each agent
// draws its opening peak (right with probability p_correct), and a shared
// evidence-strength draw v~U(0,1) scales the pull toward the truth during
// blending. Both arms reuse the same truth, peaks, and evidence strength,
// so the only difference is how the opening entropies are split.
inline PairingReport simulate_pairing(const PairingOptions& options = {}) {
  if (options.n_trials < 1) {
    throw error("n_trials must be >= 1", "bad_trials");
  }
  if (options.n_labels < 2) {
    throw error("pairing needs at least 2 labels", "bad_labels");
  }
  double h_max = std::log2(static_cast<double>(options.n_labels));
  if (options.entropy_hi <= options.entropy_lo) {
    throw error("entropy_hi must exceed entropy_lo", "bad_entropy_target");
  }
  if (options.entropy_lo < 0.0 || options.entropy_hi > h_max + 1e-9) {
    throw error("entropy targets must lie in [0, log2(n_labels)]",
                "bad_entropy_target");
  }

  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(options.n_labels));
  for (int i = 0; i < options.n_labels; ++i) {
    labels.push_back("d" + std::to_string(i + 1));
  }
  double mean_target = 0.5 * (options.entropy_hi + options.entropy_lo);

  int hits_contrasting = 0;
  int hits_matched = 0;
  double gap_sum = 0.0;
  for (int trial = 0; trial < options.n_trials; ++trial) {
    std::uint64_t trial_seed =
        derive_seed(options.seed, static_cast<std::uint64_t>(trial));
    Rng rng(trial_seed);
    const std::string& truth =
        labels[rng.below(static_cast<std::uint64_t>(options.n_labels))];
    double kappa = options.truth_affinity * rng.uniform();
    std::uint64_t seed_a = derive_seed(trial_seed, "agent-a");
    std::uint64_t seed_b = derive_seed(trial_seed, "agent-b");

    DebateConfig config;
    config.k = options.n_labels;
    config.seed = trial_seed;

    auto contrasting = detail::run_pairing_arm(
        labels, truth, options.entropy_hi, options.entropy_lo, options.eta,
        kappa, options.p_correct, seed_a, seed_b, config);
    auto matched = detail::run_pairing_arm(labels, truth, mean_target,
                                           mean_target, options.eta, kappa,
                                           options.p_correct, seed_a, seed_b,
                                           config);
    hits_contrasting += contrasting.hit ? 1 : 0;
    hits_matched += matched.hit ? 1 : 0;
    gap_sum += contrasting.opening_gap;
  }

  PairingReport report;
  report.trials = options.n_trials;
  report.seed = options.seed;
  double n = static_cast<double>(options.n_trials);
  report.accuracy_contrasting = hits_contrasting / n;
  report.accuracy_matched = hits_matched / n;
  auto binomial_se = [n](double p) { return std::sqrt(p * (1.0 - p) / n); };
  report.se_contrasting = binomial_se(report.accuracy_contrasting);
  report.se_matched = binomial_se(report.accuracy_matched);
  report.mean_entropy_gap = gap_sum / n;
  return report;
}

}  // namespace parley
