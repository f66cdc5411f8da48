#pragma once
// Batch evaluation over labeled cases. Each case runs one full debate; the
// final distribution is read as a ranking (probability descending, ties
// broken lexicographically) and scored with mean reciprocal rank against
// the case's truth label, with top-1 accuracy reported alongside. Failed
// cases score zero and are flagged; they never abort the batch.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "parley/agents.hpp"
#include "parley/crit.hpp"
#include "parley/engine.hpp"
#include "parley/transcript.hpp"
#include "parley/util.hpp"

namespace parley {

struct EvalCase {
  std::string case_id;
  std::vector<std::string> features;  // e.g. symptoms
  std::string truth_label;
};

struct EvalCaseResult {
  std::string case_id;
  std::optional<int> rank_of_truth;  // 1-based; absent when not ranked
  double mrr = 0.0;
  int rounds_used = 0;
  bool failed = false;
  std::string termination_cause;
  std::string truth_label;
  std::string predicted;  // top-1 label, empty on failure
};

struct EvalSummary {
  int n_cases = 0;
  double mean_mrr = 0.0;
  double top1_accuracy = 0.0;
  std::vector<EvalCaseResult> rows;
};

inline void to_json(nlohmann::json& j, const EvalCaseResult& r) {
  j = nlohmann::json{{"case_id", r.case_id},
                     {"rank_of_truth", r.rank_of_truth
                                           ? nlohmann::json(*r.rank_of_truth)
                                           : nlohmann::json(nullptr)},
                     {"mrr", r.mrr},
                     {"rounds_used", r.rounds_used},
                     {"failed", r.failed},
                     {"termination_cause", r.termination_cause},
                     {"truth_label", r.truth_label},
                     {"predicted", r.predicted}};
}

inline void to_json(nlohmann::json& j, const EvalSummary& s) {
  j = nlohmann::json{{"n_cases", s.n_cases},
                     {"mean_mrr", s.mean_mrr},
                     {"top1_accuracy", s.top1_accuracy},
                     {"cases", s.rows}};
}

namespace detail {

// Trimmed, lowercased form used for all label matching.
inline std::string normalize_label(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace detail

// Reciprocal rank of the truth inside a ranking: 1 for first, 1/2 for
// second, and so on; 0 when absent. Matching ignores case and surrounding
// whitespace.
inline double mrr(const std::vector<std::string>& ranking,
                  const std::string& truth) {
  std::string want = detail::normalize_label(truth);
  std::unordered_set<std::string> seen;
  double found = 0.0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::string label = detail::normalize_label(ranking[i]);
    if (!seen.insert(label).second) {
      throw error("ranking contains duplicate label: " + ranking[i],
                  "duplicate_label");
    }
    if (found == 0.0 && label == want) {
      found = 1.0 / static_cast<double>(i + 1);
    }
  }
  return found;
}

// Labels ordered by probability descending; equal probabilities fall back
// to lexicographic order so the ranking is total and reproducible.
inline std::vector<std::string> ranking_from(const Categorical& p) {
  std::vector<std::size_t> order(p.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&p](std::size_t a, std::size_t b) {
    if (p.probs[a] != p.probs[b]) return p.probs[a] > p.probs[b];
    return p.labels[a] < p.labels[b];
  });
  std::vector<std::string> ranking;
  ranking.reserve(order.size());
  for (std::size_t i : order) ranking.push_back(p.labels[i]);
  return ranking;
}

// case_id,truth_label,then feature columns. Blank cells are dropped;
// rows repeating an already-seen (truth, feature-set) pair are skipped.
inline std::vector<EvalCase> load_cases_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open cases file: " + path);
  std::string line;
  long number = 0;
  auto split = [](const std::string& text) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(text);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) {
    throw parse_error("cases file is empty: " + path, 1);
  }
  ++number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line);
  if (header.size() < 2 || detail::normalize_label(header[0]) != "case_id" ||
      detail::normalize_label(header[1]) != "truth_label") {
    throw parse_error(
        "cases file must start with columns case_id,truth_label", 1);
  }

  std::vector<EvalCase> cases;
  std::set<std::pair<std::string, std::set<std::string>>> seen;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() < 2) {
      throw parse_error("line " + std::to_string(number) +
                            " needs case_id and truth_label",
                        number);
    }
    EvalCase c;
    c.case_id = detail::normalize_label(cells[0]);
    c.truth_label = cells[1];
    if (c.case_id.empty() || detail::normalize_label(c.truth_label).empty()) {
      throw parse_error("line " + std::to_string(number) +
                            " has an empty case_id or truth_label",
                        number);
    }
    std::set<std::string> key_features;
    for (std::size_t i = 2; i < cells.size(); ++i) {
      std::string norm = detail::normalize_label(cells[i]);
      if (norm.empty()) continue;  // blank symptom cell
      if (key_features.insert(norm).second) {
        c.features.push_back(cells[i]);
      }
    }
    if (c.features.empty()) {
      throw parse_error("line " + std::to_string(number) +
                            " has no feature cells",
                        number);
    }
    auto key = std::make_pair(detail::normalize_label(c.truth_label),
                              std::move(key_features));
    if (!seen.insert(std::move(key)).second) continue;  // duplicate case
    cases.push_back(std::move(c));
  }
  if (cases.empty()) {
    throw parse_error("cases file has no usable rows: " + path, number);
  }
  return cases;
}

// Backends are built fresh per case (agents and judges hold per-debate
// state). The factory receives the slot ("a" or "b"), the case, and the
// case's derived seed.
using AgentFactory = std::function<AgentPtr(
    const std::string& slot, const EvalCase& c, std::uint64_t case_seed)>;
using JudgeFactory = std::function<std::unique_ptr<Judge>()>;

struct BatchOptions {
  int concurrency = 1;
  std::uint64_t seed = 0;       // per-case seeds derive from this and case_id
  std::string transcript_dir;   // when set, one JSONL transcript per case
};

namespace detail {

inline std::string sanitize_filename(const std::string& s) {
  std::string out;
  for (char c : s) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
              c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "case" : out;
}

}  // namespace detail

// One debate per case, optionally across threads. Results land in a
// pre-sized vector indexed by case position and every case gets its own
// derived seed, so the outcome is independent of scheduling order.
inline EvalSummary run_batch(const std::vector<EvalCase>& cases,
                             const DebateTask& base_task,
                             const DebateConfig& config,
                             const AgentFactory& make_agent,
                             const JudgeFactory& make_judge,
                             const BatchOptions& options = {}) {
  if (cases.empty()) throw error("batch needs at least one case");
  if (options.concurrency < 1) throw error("concurrency must be >= 1");
  if (!options.transcript_dir.empty()) {
    std::filesystem::create_directories(options.transcript_dir);
  }

  std::vector<EvalCaseResult> rows(cases.size());
  std::atomic<std::size_t> cursor{0};
  auto run_case = [&](const EvalCase& c) {
    EvalCaseResult row;
    row.case_id = c.case_id;
    row.truth_label = c.truth_label;
    std::uint64_t case_seed = derive_seed(options.seed, c.case_id);
    try {
      DebateTask task = base_task;
      std::string joined;
      for (const auto& f : c.features) {
        if (!joined.empty()) joined += "; ";
        joined += f;
      }
      task.information = joined;
      DebateConfig case_config = config;
      case_config.seed = case_seed;

      AgentPtr a = make_agent("a", c, case_seed);
      AgentPtr b = make_agent("b", c, case_seed);
      std::unique_ptr<Judge> judge = make_judge();
      std::unique_ptr<JsonlTranscriptWriter> writer;
      if (!options.transcript_dir.empty()) {
        writer = std::make_unique<JsonlTranscriptWriter>(
            options.transcript_dir + "/" +
            detail::sanitize_filename(c.case_id) + ".jsonl");
      }
      Engine engine(task, case_config, *a, *b, *judge, writer.get());
      DebateOutcome outcome = engine.run();
      row.rounds_used = outcome.rounds_used;
      row.termination_cause = to_string(outcome.termination_cause);
      if (!outcome.p_final) {
        row.failed = true;
        return row;
      }
      auto ranking = ranking_from(*outcome.p_final);
      row.predicted = ranking.front();
      row.mrr = mrr(ranking, c.truth_label);
      std::string want = detail::normalize_label(c.truth_label);
      for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (detail::normalize_label(ranking[i]) == want) {
          row.rank_of_truth = static_cast<int>(i + 1);
          break;
        }
      }
    } catch (const std::exception& e) {
      log(LogLevel::warn, "case '" + c.case_id + "' failed: " + e.what());
      row.failed = true;
      row.mrr = 0.0;
      row.rank_of_truth.reset();
      if (row.termination_cause.empty()) {
        row.termination_cause = to_string(TerminationCause::agent_failure);
      }
    }
    return row;
  };
  auto worker = [&] {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= cases.size()) return;
      rows[i] = run_case(cases[i]);
    }
  };

  int n_threads = std::min<int>(options.concurrency,
                                static_cast<int>(cases.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalSummary summary;
  summary.n_cases = static_cast<int>(rows.size());
  double mrr_sum = 0.0;
  int top1_hits = 0;
  for (const auto& row : rows) {
    mrr_sum += row.mrr;
    if (!row.failed && detail::normalize_label(row.predicted) ==
                           detail::normalize_label(row.truth_label)) {
      ++top1_hits;
    }
  }
  summary.mean_mrr = mrr_sum / static_cast<double>(rows.size());
  summary.top1_accuracy =
      static_cast<double>(top1_hits) / static_cast<double>(rows.size());
  summary.rows = std::move(rows);
  return summary;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

// Per-case results as CSV, one row per case in batch order.
inline void write_case_csv(const std::string& path,
                           const EvalSummary& summary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write case csv: " + path);
  out << "case_id,rank,mrr,rounds_used,termination_cause\n";
  for (const auto& row : summary.rows) {
    out << detail::csv_field(row.case_id) << ','
        << (row.rank_of_truth ? std::to_string(*row.rank_of_truth) : "") << ','
        << format_double(row.mrr) << ',' << row.rounds_used << ','
        << row.termination_cause << '\n';
  }
}

// (truth, predicted) pairs for external confusion analysis.
inline void write_confusion_csv(const std::string& path,
                                const EvalSummary& summary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write confusion csv: " + path);
  out << "truth,predicted\n";
  for (const auto& row : summary.rows) {
    out << detail::csv_field(row.truth_label) << ','
        << detail::csv_field(row.predicted) << '\n';
  }
}

}  // namespace parley
