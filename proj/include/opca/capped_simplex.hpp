#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "opca/errors.hpp"

namespace opca {

// A point of the capped simplex {w in [0,1]^n : sum_i w_i = m}.
// Mixture semantics: w_i is the probability that item i belongs to a randomly
// drawn m-element subset, so w is a fractional m-subset.
struct WeightVector {
  Eigen::VectorXd w;
  int m = 0;

  WeightVector() = default;

  WeightVector(Eigen::VectorXd values, int subset_size)
      : w(std::move(values)), m(subset_size) {
    const int n = size();
    if (n == 0) throw std::invalid_argument("WeightVector: empty vector");
    if (m < 1 || m > n)
      throw std::invalid_argument("WeightVector: subset size out of range");
    if (!w.allFinite())
      throw std::invalid_argument("WeightVector: non-finite entry");
    if (w.minCoeff() < -1e-10 || w.maxCoeff() > 1.0 + 1e-10)
      throw std::invalid_argument("WeightVector: entry outside [0,1]");
    if (std::abs(w.sum() - static_cast<double>(m)) > 1e-9)
      throw std::invalid_argument("WeightVector: entries must sum to m");
  }

  int size() const { return static_cast<int>(w.size()); }

  static WeightVector uniform(int n, int subset_size) {
    if (n < 1 || subset_size < 1 || subset_size > n)
      throw std::invalid_argument("WeightVector::uniform: bad dimensions");
    return WeightVector(
        Eigen::VectorXd::Constant(n, static_cast<double>(subset_size) / n),
        subset_size);
  }
};

// Convex combination of m-subsets ("corners" of the capped simplex): a list of
// (sorted index set, probability) pairs with at most n entries.
struct CornerDecomposition {
  std::vector<std::pair<std::vector<int>, double>> entries;
};

// Euclidean projection onto the capped simplex. The KKT conditions give
// w_i = clip(v_i + tau, 0, 1) for a single shift tau; g(tau) = sum_i w_i is
// piecewise linear and nondecreasing, so tau is found exactly by scanning the
// sorted breakpoints -v_i (coordinate activates) and 1 - v_i (saturates).
inline WeightVector euclidean_project(const Eigen::VectorXd& v, int m) {
  const int n = static_cast<int>(v.size());
  if (n == 0) throw std::invalid_argument("euclidean_project: empty input");
  if (m < 1 || m > n)
    throw std::invalid_argument("euclidean_project: need 1 <= m <= n");
  if (!v.allFinite())
    throw std::invalid_argument("euclidean_project: non-finite input");

  struct Event {
    double tau;
    bool saturates;  // false: coordinate enters the active set at tau
    double value;
  };
  std::vector<Event> events;
  events.reserve(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    events.push_back({-v[i], false, v[i]});
    events.push_back({1.0 - v[i], true, v[i]});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.tau < b.tau; });

  double num_one = 0.0;     // coordinates clipped at 1
  double num_active = 0.0;  // coordinates strictly inside (0,1)
  double sum_active = 0.0;  // sum of v_i over the active set
  const double target = static_cast<double>(m);
  double tau = 0.0;
  bool found = false;

  std::size_t i = 0;
  while (i < events.size()) {
    const double t0 = events[i].tau;
    while (i < events.size() && events[i].tau == t0) {
      const Event& e = events[i];
      if (e.saturates) {
        num_active -= 1.0;
        sum_active -= e.value;
        num_one += 1.0;
      } else {
        num_active += 1.0;
        sum_active += e.value;
      }
      ++i;
    }
    const double t1 =
        (i < events.size()) ? events[i].tau : std::numeric_limits<double>::infinity();
    if (num_active > 0.5) {
      const double cand = (target - num_one - sum_active) / num_active;
      if (cand >= t0 - 1e-12 && cand <= t1 + 1e-12) {
        tau = std::clamp(cand, t0, t1);
        found = true;
        break;
      }
    } else if (num_one == target) {
      tau = t0;
      found = true;
      break;
    }
  }
  if (!found)
    throw NumericFailure("euclidean_project: no feasible shift found");

  Eigen::VectorXd w(n);
  for (int j = 0; j < n; ++j) w[j] = std::clamp(v[j] + tau, 0.0, 1.0);
  return WeightVector(std::move(w), m);
}

// Relative-entropy (Bregman) projection onto the capped simplex: minimizes
// sum_i w_i log(w_i / v_i) subject to w in [0,1]^n, sum_i w_i = m. The
// minimizer scales the input by a common factor and caps coordinates at 1;
// the cap set is built greedily from the largest coordinate down, rescaling
// the remainder after each cap. Invariant to positive rescaling of v.
inline WeightVector entropic_project(const Eigen::VectorXd& v_in, int m) {
  const int n = static_cast<int>(v_in.size());
  if (n == 0) throw std::invalid_argument("entropic_project: empty input");
  if (m < 1 || m > n)
    throw std::invalid_argument("entropic_project: need 1 <= m <= n");
  if (!v_in.allFinite())
    throw std::invalid_argument("entropic_project: non-finite input");
  if (v_in.minCoeff() < 0.0)
    throw std::invalid_argument("entropic_project: negative entry");
  if (v_in.maxCoeff() <= 0.0)
    throw std::invalid_argument("entropic_project: all entries zero");

  const Eigen::VectorXd v = v_in.cwiseMax(1e-300);

  std::vector<int> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&v](int a, int b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  });

  // suffix[j] = sum of the sorted values from rank j to the end
  std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = n - 1; j >= 0; --j) suffix[j] = suffix[j + 1] + v[ord[j]];

  int ncap = 0;
  double scale = static_cast<double>(m) / suffix[0];
  while (ncap < n && ncap < m) {
    const double c = static_cast<double>(m - ncap) / suffix[ncap];
    if (c * v[ord[ncap]] > 1.0) {
      ++ncap;
    } else {
      scale = c;
      break;
    }
  }
  if (ncap == m) scale = 0.0;  // everything kept is capped

  Eigen::VectorXd w(n);
  for (int j = 0; j < n; ++j) {
    const int idx = ord[j];
    w[idx] = (j < ncap) ? 1.0 : std::min(1.0, scale * v[idx]);
  }
  return WeightVector(std::move(w), m);
}

// Decomposes w into a convex combination of at most n corners (m-subsets).
// Greedy: repeatedly pick the m largest remaining weights (lowest index on
// ties) and peel off the largest feasible probability. Feasibility of the
// remainder requires every weight to stay in [0, remaining probability], which
// caps the peel at min(smallest picked weight, remaining - largest unpicked).
inline CornerDecomposition decompose_corners(const WeightVector& wv) {
  const int n = wv.size();
  const int m = wv.m;
  Eigen::VectorXd r = wv.w.cwiseMax(0.0).cwiseMin(1.0);
  for (int i = 0; i < n; ++i) {
    if (r[i] <= 1e-12)
      r[i] = 0.0;
    else if (std::abs(r[i] - 1.0) <= 1e-12)
      r[i] = 1.0;
  }

  CornerDecomposition out;
  std::vector<int> ord(n);
  for (int iter = 0; iter < n + 4; ++iter) {
    const double remaining = r.sum() / m;
    if (remaining <= 1e-12) return out;

    // keep every weight within the remaining probability mass
    for (int i = 0; i < n; ++i) r[i] = std::min(r[i], remaining);

    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&r](int a, int b) {
      if (r[a] != r[b]) return r[a] > r[b];
      return a < b;
    });

    const double smallest_picked = r[ord[m - 1]];
    const double slack_unpicked =
        (m < n) ? remaining - r[ord[m]] : remaining;
    double p = std::min({smallest_picked, slack_unpicked, remaining});
    if (p <= 0.0)
      throw NumericFailure("decompose_corners: stalled on infeasible weights");

    std::vector<int> corner(ord.begin(), ord.begin() + m);
    std::sort(corner.begin(), corner.end());
    for (int idx : corner) r[idx] -= p;
    out.entries.emplace_back(std::move(corner), p);
  }
  throw NumericFailure("decompose_corners: did not terminate in n steps");
}

// Draws one m-subset from the corner decomposition of w. Marginal inclusion
// probabilities equal the weights: E[1{i in S}] = w_i.
inline std::vector<int> sample_mset(const WeightVector& wv,
                                    std::mt19937_64& rng) {
  const CornerDecomposition d = decompose_corners(wv);
  if (d.entries.empty())
    throw NumericFailure("sample_mset: empty decomposition");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  for (const auto& [corner, p] : d.entries) {
    acc += p;
    if (u < acc) return corner;
  }
  return d.entries.back().first;
}

}  // namespace opca
