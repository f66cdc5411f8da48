#pragma once
// Divergence and dependence measures over pairs of categorical
// distributions: KL (both directions), Jensen-Shannon, cross entropy,
// transport distance under a discrete or ordinal ground metric, and mutual
// information through a maximal coupling. snapshot() evaluates the whole
// family consistently (one alignment, one smoothing epsilon) and is the
// unit the debate loop and transcripts work in.
//
// Conventions: all logarithms are base 2, so JS tops out at exactly 1 bit.
// Smoothing applies to the second argument of kl/cross_entropy only; JS and
// the transport distance never smooth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "parley/categorical.hpp"
#include "parley/util.hpp"

namespace parley {

inline constexpr double kDefaultEpsilon = 1e-4;

// D(p || smooth(q, eps)) in bits. Zero-mass p entries contribute nothing.
inline double kl(const Categorical& p, const Categorical& q,
                 double epsilon = kDefaultEpsilon) {
  auto [pa, qa] = align(p, q);
  Categorical qs = smooth(qa, epsilon);
  double d = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa.probs[i] > 0.0) {
      d += pa.probs[i] * std::log2(pa.probs[i] / qs.probs[i]);
    }
  }
  return d;
}

// Jensen-Shannon divergence in bits, in [0, 1]. The mixture is strictly
// positive wherever either input is, so no smoothing is involved.
inline double js(const Categorical& p, const Categorical& q) {
  auto [pa, qa] = align(p, q);
  double d = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double m = 0.5 * (pa.probs[i] + qa.probs[i]);
    if (pa.probs[i] > 0.0) d += 0.5 * pa.probs[i] * std::log2(pa.probs[i] / m);
    if (qa.probs[i] > 0.0) d += 0.5 * qa.probs[i] * std::log2(qa.probs[i] / m);
  }
  return d;
}

// H(p, q) = -sum p log2 smooth(q); equals entropy(p) + kl(p, q) up to
// floating-point noise.
inline double cross_entropy(const Categorical& p, const Categorical& q,
                            double epsilon = kDefaultEpsilon) {
  auto [pa, qa] = align(p, q);
  Categorical qs = smooth(qa, epsilon);
  double h = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa.probs[i] > 0.0) h -= pa.probs[i] * std::log2(qs.probs[i]);
  }
  return h;
}

// Earth mover's distance. Under the 0/1 discrete ground this is total
// variation, half the L1 difference. Under the ordinal-unit ground (unit
// spacing in label-list order) the 1-D closed form is the L1 distance of
// the CDFs.
inline double wasserstein(const Categorical& p, const Categorical& q,
                          Ground ground) {
  auto [pa, qa] = align(p, q);
  if (ground == Ground::discrete) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      l1 += std::abs(pa.probs[i] - qa.probs[i]);
    }
    return 0.5 * l1;
  }
  double cdf_gap = 0.0, cp = 0.0, cq = 0.0;
  for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
    cp += pa.probs[i];
    cq += qa.probs[i];
    cdf_gap += std::abs(cp - cq);
  }
  return cdf_gap;
}

// Diameter of the ground metric over n labels; the transport distance
// normalizer used by the contentiousness formula.
inline double ground_diameter(Ground ground, std::size_t n) {
  if (ground == Ground::discrete) return 1.0;
  return n > 1 ? static_cast<double>(n - 1) : 1.0;
}

// Joint distribution over the shared label set whose marginals are the two
// inputs. Built as the maximal coupling: put min(p_i, q_i) on the diagonal
// and spread the leftovers as a product. This is the coupling that
// maximizes agreement probability omega, and the joint MI below uses.
struct Joint {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> cells;  // cells[i][j] = P(X=i, Y=j)
  double omega = 0.0;                      // total diagonal (agreement) mass
};

inline Joint maximal_coupling(const Categorical& p, const Categorical& q) {
  auto [pa, qa] = align(p, q);
  const std::size_t n = pa.size();
  Joint joint;
  joint.labels = pa.labels;
  joint.cells.assign(n, std::vector<double>(n, 0.0));
  double omega = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    omega += std::min(pa.probs[i], qa.probs[i]);
  }
  joint.omega = omega;
  const double residual = 1.0 - omega;
  for (std::size_t i = 0; i < n; ++i) {
    const double mi = std::min(pa.probs[i], qa.probs[i]);
    joint.cells[i][i] = mi;
    if (residual > 1e-15) {
      const double pr = pa.probs[i] - mi;
      if (pr > 0.0) {
        for (std::size_t j = 0; j < n; ++j) {
          const double qr = qa.probs[j] - std::min(pa.probs[j], qa.probs[j]);
          joint.cells[i][j] += pr * qr / residual;
        }
      }
    }
  }
  return joint;
}

// Mutual information of the maximal coupling, in bits. For identical
// inputs the coupling is diagonal and this reduces to the entropy; for
// disjoint supports the leftover product makes the variables independent
// and the value is 0.
inline double mutual_information(const Categorical& p, const Categorical& q) {
  auto [pa, qa] = align(p, q);
  Joint joint = maximal_coupling(pa, qa);
  double info = 0.0;
  const std::size_t n = pa.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = joint.cells[i][j];
      if (c > 0.0) {
        info += c * std::log2(c / (pa.probs[i] * qa.probs[j]));
      }
    }
  }
  return info;
}

// MI normalized by the larger marginal entropy. When both entropies are
// zero the pair is two point masses: 1 if they sit on the same label,
// otherwise 0.
inline double nmi(const Categorical& p, const Categorical& q) {
  auto [pa, qa] = align(p, q);
  const double ha = entropy(pa), hb = entropy(qa);
  const double denom = std::max(ha, hb);
  if (denom <= 0.0) {
    const auto peak = [](const Categorical& c) {
      return static_cast<std::size_t>(
          std::max_element(c.probs.begin(), c.probs.end()) - c.probs.begin());
    };
    return peak(pa) == peak(qa) ? 1.0 : 0.0;
  }
  return std::clamp(mutual_information(pa, qa) / denom, 0.0, 1.0);
}

// One round's full metric readout. Field names are the serialization
// contract for transcripts, CSV, and the metrics command.
struct MetricSnapshot {
  double wd = 0.0;
  double kl_ab = 0.0;
  double kl_ba = 0.0;
  double js = 0.0;
  double ce_ab = 0.0;
  double ce_ba = 0.0;
  double mi = 0.0;
  double nmi = 0.0;
  double h_a = 0.0;
  double h_b = 0.0;
};

inline MetricSnapshot snapshot(const Categorical& a, const Categorical& b,
                               Ground ground,
                               double epsilon = kDefaultEpsilon) {
  auto [pa, pb] = align(a, b);
  MetricSnapshot s;
  s.wd = wasserstein(pa, pb, ground);
  s.kl_ab = kl(pa, pb, epsilon);
  s.kl_ba = kl(pb, pa, epsilon);
  s.js = js(pa, pb);
  s.ce_ab = cross_entropy(pa, pb, epsilon);
  s.ce_ba = cross_entropy(pb, pa, epsilon);
  s.mi = mutual_information(pa, pb);
  s.nmi = nmi(pa, pb);
  s.h_a = entropy(pa);
  s.h_b = entropy(pb);
  return s;
}

inline void to_json(nlohmann::json& j, const MetricSnapshot& s) {
  j = nlohmann::json{{"wd", s.wd},       {"kl_ab", s.kl_ab},
                     {"kl_ba", s.kl_ba}, {"js", s.js},
                     {"ce_ab", s.ce_ab}, {"ce_ba", s.ce_ba},
                     {"mi", s.mi},       {"nmi", s.nmi},
                     {"h_a", s.h_a},     {"h_b", s.h_b}};
}

inline void from_json(const nlohmann::json& j, MetricSnapshot& s) {
  j.at("wd").get_to(s.wd);
  j.at("kl_ab").get_to(s.kl_ab);
  j.at("kl_ba").get_to(s.kl_ba);
  j.at("js").get_to(s.js);
  j.at("ce_ab").get_to(s.ce_ab);
  j.at("ce_ba").get_to(s.ce_ba);
  j.at("mi").get_to(s.mi);
  j.at("nmi").get_to(s.nmi);
  j.at("h_a").get_to(s.h_a);
  j.at("h_b").get_to(s.h_b);
}

inline std::string metrics_csv_header() {
  return "round,wd,kl_ab,kl_ba,js,ce_ab,ce_ba,mi,nmi,h_a,h_b,delta";
}

inline std::string metrics_csv_row(int round, const MetricSnapshot& s,
                                   double delta) {
  std::string row = std::to_string(round);
  for (double v : {s.wd, s.kl_ab, s.kl_ba, s.js, s.ce_ab, s.ce_ba, s.mi, s.nmi,
                   s.h_a, s.h_b, delta}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

}  // namespace parley
