#pragma once
// Categorical distributions over explicit label sets. This is the numeric
// substrate for the whole library: construction validates and normalizes,
// align() puts two distributions on a shared support, smooth() lifts zeros
// for the divergences that need strictly positive denominators, and
// entropy()/mix() are the Shannon and convex-combination primitives.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "parley/util.hpp"

namespace parley {

// Ground distance between categories, used by the transport metric.
// discrete: 0 if equal else 1. ordinal_unit: |i - j| in list order, for
// label sets that carry a natural order (severity scales and the like).
enum class Ground { discrete, ordinal_unit };

inline std::string to_string(Ground g) {
  return g == Ground::discrete ? "discrete" : "ordinal_unit";
}

inline Ground ground_from_string(const std::string& s) {
  if (s == "discrete") return Ground::discrete;
  if (s == "ordinal_unit") return Ground::ordinal_unit;
  throw config_error("unknown ground metric: " + s);
}

struct Categorical {
  std::vector<std::string> labels;
  std::vector<double> probs;

  std::size_t size() const { return labels.size(); }

  bool operator==(const Categorical& other) const {
    return labels == other.labels && probs == other.probs;
  }
};

// Validates labels/weights and returns the normalized distribution.
// Weights may be arbitrary non-negative reals (agent "confidences"); they
// are scaled to sum to 1. Rejects duplicates, negatives, non-finite
// entries, and all-zero weight vectors.
inline Categorical new_categorical(std::vector<std::string> labels,
                                   std::vector<double> weights) {
  if (labels.empty()) {
    throw error("categorical needs at least one label", "empty_labels");
  }
  if (labels.size() != weights.size()) {
    throw error("labels/weights length mismatch: " +
                    std::to_string(labels.size()) + " vs " +
                    std::to_string(weights.size()),
                "length_mismatch");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) {
      throw error("duplicate label: " + l, "duplicate_label");
    }
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw error("non-finite weight", "bad_weight");
    if (w < 0.0) throw error("negative weight", "bad_weight");
    total += w;
  }
  if (total <= 0.0) throw error("weights sum to zero", "bad_weight");
  for (double& w : weights) w /= total;
  return Categorical{std::move(labels), std::move(weights)};
}

// Puts both distributions on the union label set: a's labels first, then
// b's novel labels in b's order, zero-filling absent entries. Mass per
// label is unchanged, so this is idempotent on already-aligned pairs.
inline std::pair<Categorical, Categorical> align(const Categorical& a,
                                                 const Categorical& b) {
  std::vector<std::string> united = a.labels;
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(a.size() + b.size());
  for (std::size_t i = 0; i < united.size(); ++i) index[united[i]] = i;
  for (const auto& l : b.labels) {
    if (index.find(l) == index.end()) {
      index[l] = united.size();
      united.push_back(l);
    }
  }
  std::vector<double> pa(united.size(), 0.0), pb(united.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) pa[index[a.labels[i]]] = a.probs[i];
  for (std::size_t i = 0; i < b.size(); ++i) pb[index[b.labels[i]]] = b.probs[i];
  return {Categorical{united, std::move(pa)},
          Categorical{std::move(united), std::move(pb)}};
}

// Lifts every probability to at least epsilon and rescales the remaining
// mass proportionally over the entries that stay above the floor. The
// pinning set grows until a fixed point, so the floor holds exactly and
// the result still sums to 1. A distribution already interior everywhere
// comes back with at most renormalization jitter.
inline Categorical smooth(const Categorical& p, double epsilon) {
  const std::size_t n = p.size();
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / static_cast<double>(n))) {
    throw error("smoothing epsilon must lie in (0, 1/n)", "bad_epsilon");
  }
  std::vector<char> pinned(n, 0);
  std::vector<double> q(n, 0.0);
  for (;;) {
    std::size_t n_pinned = 0;
    double free_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pinned[i]) {
        ++n_pinned;
      } else {
        free_mass += p.probs[i];
      }
    }
    const double scale =
        (1.0 - epsilon * static_cast<double>(n_pinned)) / free_mass;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (pinned[i]) {
        q[i] = epsilon;
      } else if (p.probs[i] * scale < epsilon) {
        pinned[i] = 1;
        changed = true;
      } else {
        q[i] = p.probs[i] * scale;
      }
    }
    if (!changed) break;
  }
  return Categorical{p.labels, std::move(q)};
}

// Shannon entropy in bits; 0 log 0 taken as 0 by continuity.
inline double entropy(const Categorical& p) {
  double h = 0.0;
  for (double v : p.probs) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

// Convex combination alpha*a + (1-alpha)*b on the union support.
inline Categorical mix(const Categorical& a, const Categorical& b,
                       double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw error("mix alpha must lie in [0,1]", "bad_alpha");
  }
  auto [pa, pb] = align(a, b);
  std::vector<double> out(pa.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * pa.probs[i] + (1.0 - alpha) * pb.probs[i];
  }
  return Categorical{pa.labels, std::move(out)};
}

// JSON form used by every downstream artifact: {"labels":[...],"probs":[...]}.
inline void to_json(nlohmann::json& j, const Categorical& c) {
  j = nlohmann::json{{"labels", c.labels}, {"probs", c.probs}};
}

inline void from_json(const nlohmann::json& j, Categorical& c) {
  std::vector<std::string> labels = j.at("labels").get<std::vector<std::string>>();
  std::vector<double> probs = j.at("probs").get<std::vector<double>>();
  c = new_categorical(std::move(labels), std::move(probs));
}

}  // namespace parley
