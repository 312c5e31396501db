#pragma once

// Reference implementations used only by tests. They deliberately take
// different routes than the library (bisection instead of breakpoint
// scanning, generic descent instead of the cap-and-rescale rule, exhaustive
// enumeration instead of closed forms) so that agreement is meaningful.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

inline double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

inline double clip_sum(const Eigen::VectorXd& v, double tau) {
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += clip01(v[i] + tau);
  return s;
}

// Euclidean projection onto {w in [0,1]^n : sum w = m} by bisection on the
// shift tau in w_i = clip(v_i + tau, 0, 1).
inline Eigen::VectorXd bisect_project(const Eigen::VectorXd& v, int m) {
  double lo = -v.maxCoeff() - 1.0;       // clip sum is 0 here
  double hi = 1.0 - v.minCoeff() + 1.0;  // clip sum is n here
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clip_sum(v, mid) < static_cast<double>(m))
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  Eigen::VectorXd w(v.size());
  for (int i = 0; i < v.size(); ++i) w[i] = clip01(v[i] + tau);
  return w;
}

// sum_i w_i log(w_i / v_i) with 0 log 0 = 0.
inline double relative_entropy(const Eigen::VectorXd& w,
                               const Eigen::VectorXd& v) {
  double s = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) s += w[i] * std::log(w[i] / v[i]);
  }
  return s;
}

// Generic constrained minimizer of the relative entropy over the capped
// simplex: projected gradient descent with a backtracking line search, using
// bisect_project for the feasibility step. Knows nothing about the
// cap-and-rescale structure of the solution.
inline Eigen::VectorXd min_relative_entropy(const Eigen::VectorXd& v, int m) {
  const int n = static_cast<int>(v.size());
  Eigen::VectorXd w =
      Eigen::VectorXd::Constant(n, static_cast<double>(m) / n);
  double f = relative_entropy(w, v);
  for (int iter = 0; iter < 20000; ++iter) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i)
      g[i] = std::log(std::max(w[i], 1e-15) / v[i]) + 1.0;

    double alpha = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 70; ++bt) {
      const Eigen::VectorXd cand = bisect_project(w - alpha * g, m);
      const double fc = relative_entropy(cand, v);
      const double model = g.dot(w - cand);  // >= 0 for a projected step
      if (fc <= f - 1e-4 * model && fc < f) {
        if ((cand - w).lpNorm<Eigen::Infinity>() < 1e-14) {
          return cand;
        }
        w = cand;
        f = fc;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  return w;
}

// Golden-section search for the minimizer of a unimodal function on [lo, hi].
template <typename F>
double golden_min(F f, double lo, double hi, int iters = 200) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Bracket semantics by recursion over subtrees: the representative of the
// size-2^level subtree rooted at row `lo` is decided in round `level` by
// comparing the two half-subtree representatives on the (level-1)-th trial
// block of `block_len` columns; ties keep the lower row index.
inline int bracket_rep(const Eigen::MatrixXd& l, int lo, int level, long block_len,
                       bool lower_wins) {
  if (level == 0) return lo;
  const int a = bracket_rep(l, lo, level - 1, block_len, lower_wins);
  const int b = bracket_rep(l, lo + (1 << (level - 1)), level - 1, block_len, lower_wins);
  const double la = l.row(a).segment((level - 1) * block_len, block_len).sum();
  const double lb = l.row(b).segment((level - 1) * block_len, block_len).sum();
  if (la == lb) return a < b ? a : b;
  return (la < lb) == lower_wins ? a : b;
}

// Smallest sum over all size-m subsets of the entries (exhaustive).
inline double min_subset_sum(const Eigen::VectorXd& vals, int m) {
  const int n = static_cast<int>(vals.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    double s = 0.0;
    for (int i : idx) s += vals[i];
    best = std::min(best, s);
    int j = m - 1;
    while (j >= 0 && idx[j] == n - m + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int t = j + 1; t < m; ++t) idx[t] = idx[t - 1] + 1;
  }
  return best;
}

}  // namespace oracle
