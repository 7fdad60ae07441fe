#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "iol/optics.hpp"
#include "iol/random.hpp"

namespace iol::test {

/// The reference eye used across the optics tests (metres).
inline EyeBiometry reference_eye() { return {0.0236, 0.00055, 0.0045, 0.0077, 0.0077}; }

inline LensModel constant_lens() { return {}; }

/// Random eye inside the default sampling box, with room for the lens.
inline EyeBiometry random_eye(Rng& rng) {
  EyeBiometry e;
  e.al = rng.uniform(0.021, 0.028);
  e.cct = rng.uniform(0.00045, 0.00065);
  e.acd_iol = rng.uniform(0.0035, 0.0055);
  e.k_min = rng.uniform(0.0070, 0.0085);
  e.k_max = rng.uniform(e.k_min, 0.009);
  return e;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Fourth-order central difference; truncation error O(h^4).
inline double five_point_difference(const std::function<double(double)>& f, double x, double h) {
  // Differences first, so a function that ignores x gives exactly zero.
  return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h);
}

/// Five-point difference with the step chosen from a ladder, largest first: the first
/// step that agrees with its half step to 1e-6 wins, else the best-agreeing pair.
/// Large steps avoid roundoff; a kink inside the stencil breaks the agreement and
/// pushes the choice to smaller steps. The answer under test is never consulted.
inline double adaptive_difference(const std::function<double(double)>& f, double x, double scale) {
  double best = 0.0, best_gap = std::numeric_limits<double>::infinity();
  for (double h = 1e-3 * scale; h >= 1e-7 * scale; h /= 4.0) {
    const double a = five_point_difference(f, x, h), b = five_point_difference(f, x, 0.5 * h);
    const double gap = std::abs(a - b);
    if (gap <= 1e-6 * std::max(std::abs(a), std::abs(b))) return b;
    if (gap < best_gap) {
      best_gap = gap;
      best = b;
    }
  }
  return best;
}

/// |a - b| within rel * max(|a|, |b|) or abs_tol.
inline bool close(double a, double b, double rel, double abs_tol = 0.0) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_tol);
}

/// Two-sided signed-rank p by enumerating every sign assignment of the
/// mid-ranks: P(min(W+, W-) <= observed).
inline double brute_force_signed_rank_p(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0.0) d.push_back(x);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) below += 1.0;
      if (std::abs(d[j]) == std::abs(d[i])) equal += 1.0;
    }
    rank[i] = below + (equal + 1.0) / 2.0;
    total += rank[i];
  }
  double plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) plus += d[i] > 0.0 ? rank[i] : 0.0;
  const double observed = std::min(plus, total - plus);
  std::size_t hits = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1U) ? rank[i] : 0.0;
    if (std::min(s, total - s) <= observed + 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::size_t{1} << n);
}

/// One row of the independently generated classical-formula vectors.
struct FormulaVector {
  double al_mm, k_max_mm, k_min_mm, acd_mm, ref_target;
  double srkt, hofferq, holladay1, haigis;
};

inline std::vector<FormulaVector> load_formula_vectors() {
  std::ifstream in(std::string(IOL_TEST_DATA_DIR) + "/formula_vectors.csv");
  std::vector<FormulaVector> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> v;
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
    if (v.size() != 9) continue;
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return rows;
}

/// Constants the vectors were generated with: everything derived from A = 118.4.
inline constexpr double kVectorA = 118.4;
inline constexpr double kVectorPacd = 0.58357 * kVectorA - 63.896;
inline constexpr double kVectorSf = 0.5663 * kVectorA - 65.6;
inline constexpr double kVectorA0 = 0.62467 * kVectorA - 72.434;

}  // namespace iol::test
