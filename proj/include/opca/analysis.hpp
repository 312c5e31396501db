#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opca/errors.hpp"

namespace opca {

// Per-expert, per-trial losses: rows are experts, columns are trials.
struct LossMatrix {
  Eigen::MatrixXd losses;

  explicit LossMatrix(Eigen::MatrixXd l) : losses(std::move(l)) {
    if (losses.rows() < 1 || losses.cols() < 1) {
      throw std::invalid_argument("loss matrix needs at least one expert and one trial");
    }
    if (!losses.allFinite()) {
      throw std::invalid_argument("loss matrix entries must be finite");
    }
    if (losses.minCoeff() < -1e-12 || losses.maxCoeff() > 1.0 + 1e-12) {
      throw std::invalid_argument("loss matrix entries must lie in [0, 1]");
    }
  }

  int experts() const { return static_cast<int>(losses.rows()); }
  long trials() const { return static_cast<long>(losses.cols()); }
  Eigen::VectorXd row_totals() const { return losses.rowwise().sum(); }
};

// Total loss of the best m-subset of experts: the sum of the m smallest row
// totals.
inline double best_mset_loss(const LossMatrix& l, int m) {
  const int n = l.experts();
  if (m < 1 || m > n) throw std::invalid_argument("subset size must satisfy 1 <= m <= n");
  Eigen::VectorXd totals = l.row_totals();
  std::vector<double> t(totals.data(), totals.data() + n);
  std::nth_element(t.begin(), t.begin() + m - 1, t.end());
  return std::accumulate(t.begin(), t.begin() + m, 0.0);
}

// Winner of a two-expert game: the smaller of the two row totals.
inline double two_expert_winner_loss(const LossMatrix& l) {
  if (l.experts() != 2) {
    throw std::invalid_argument("two-expert winner needs exactly two rows");
  }
  Eigen::VectorXd totals = l.row_totals();
  return std::min(totals[0], totals[1]);
}

namespace detail {

inline bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

// Single-elimination bracket over the rows of `l`: round s (1-based)
// compares the surviving adjacent pairs on the trial block
// ((s-1)*T/S, s*T/S]; with lower_wins the smaller block loss advances,
// otherwise the larger; ties advance the lower index. Returns the last
// surviving row.
inline int bracket_survivor(const Eigen::MatrixXd& l, int rounds, bool lower_wins) {
  const int n = static_cast<int>(l.rows());
  const long t = l.cols();
  if (rounds < 0) throw std::invalid_argument("rounds must be nonnegative");
  if (n != (1L << rounds)) {
    throw std::invalid_argument("bracket needs exactly 2^rounds experts");
  }
  if (rounds == 0) return 0;
  if (t % rounds != 0) {
    throw std::invalid_argument("rounds must divide the number of trials");
  }
  const long block = t / rounds;
  std::vector<int> cand(n);
  std::iota(cand.begin(), cand.end(), 0);
  for (int s = 1; s <= rounds; ++s) {
    std::vector<int> next;
    next.reserve(cand.size() / 2);
    for (std::size_t i = 0; i + 1 < cand.size(); i += 2) {
      const int a = cand[i], b = cand[i + 1];
      const double la = l.row(a).segment((s - 1) * block, block).sum();
      const double lb = l.row(b).segment((s - 1) * block, block).sum();
      // a < b throughout, so a advances on ties either way.
      bool a_advances;
      if (la == lb) {
        a_advances = true;
      } else {
        a_advances = (la < lb) == lower_wins;
      }
      next.push_back(a_advances ? a : b);
    }
    cand = std::move(next);
  }
  return cand.front();
}

}  // namespace detail

// Loss over all trials of the expert that survives the S-round
// lowest-block-loss bracket.
inline double tournament_winner_loss(const LossMatrix& l, int rounds) {
  const int idx = detail::bracket_survivor(l.losses, rounds, true);
  return l.losses.row(idx).sum();
}

// Loss over all trials of the expert that survives the reversed bracket
// (largest block loss advances).
inline double tournament_loser_loss(const LossMatrix& l, int rounds) {
  const int idx = detail::bracket_survivor(l.losses, rounds, false);
  return l.losses.row(idx).sum();
}

// Partition the experts into equal groups of 2^rounds, run the winner
// bracket inside each group, and sum the group winners' losses. The result
// upper-bounds the best m-set loss with m equal to the number of groups.
inline double grouped_comparator_bound(const LossMatrix& l,
                                       const std::vector<std::vector<int>>& groups,
                                       int rounds) {
  const int n = l.experts();
  if (rounds < 0) throw std::invalid_argument("rounds must be nonnegative");
  if (groups.empty()) throw std::invalid_argument("partition must have at least one group");
  const long size = 1L << rounds;
  std::vector<bool> seen(n, false);
  for (const auto& g : groups) {
    if (static_cast<long>(g.size()) != size) {
      throw std::invalid_argument("every group must have exactly 2^rounds experts");
    }
    for (int i : g) {
      if (i < 0 || i >= n) throw std::invalid_argument("group index out of range");
      if (seen[i]) throw std::invalid_argument("group index repeated");
      seen[i] = true;
    }
  }
  if (static_cast<long>(groups.size()) * size != n) {
    throw std::invalid_argument("groups must cover all experts");
  }
  double total = 0.0;
  for (const auto& g : groups) {
    Eigen::MatrixXd sub(size, l.losses.cols());
    for (long r = 0; r < size; ++r) sub.row(r) = l.losses.row(g[r]);
    total += tournament_winner_loss(LossMatrix(sub), rounds);
  }
  const double floor = best_mset_loss(l, static_cast<int>(groups.size()));
  if (total < floor - 1e-9) {
    throw NumericFailure("grouped comparator fell below the best subset loss");
  }
  return total;
}

// Two-expert winner loss under the hit-one-of-two generator, sampled without
// materializing the sequence: with probability 2p a trial hits one of the
// two experts (fair coin which). Conditioned on the number of hit trials H,
// the first expert's count is Binomial(H, 1/2), so the winner's loss is
// min(X, H - X) in distribution.
inline long two_expert_game_winner_sample(long trials, double p, std::mt19937_64& rng) {
  if (trials < 1) throw std::invalid_argument("sampler needs at least one trial");
  if (!(p > 0.0) || p > 0.5) {
    throw std::invalid_argument("per-expert hit probability must lie in (0, 1/2]");
  }
  std::binomial_distribution<long> hits(trials, 2.0 * p);
  const long h = hits(rng);
  if (h == 0) return 0;
  std::binomial_distribution<long> split(h, 0.5);
  const long x = split(rng);
  return std::min(x, h - x);
}

// Materialized generators for the same family of games.

// Each trial, with probability hit_prob, one uniformly chosen expert
// suffers loss 1; otherwise the column is zero.
inline LossMatrix single_hit_matrix(int n, long trials, double hit_prob,
                                    std::mt19937_64& rng) {
  if (n < 1 || trials < 1) throw std::invalid_argument("matrix dimensions must be positive");
  if (hit_prob < 0.0 || hit_prob > 1.0) {
    throw std::invalid_argument("hit probability must lie in [0, 1]");
  }
  std::bernoulli_distribution hit(hit_prob);
  std::uniform_int_distribution<int> pick(0, n - 1);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, trials);
  for (long t = 0; t < trials; ++t) {
    if (hit(rng)) l(pick(rng), t) = 1.0;
  }
  return LossMatrix(std::move(l));
}

// Every entry an independent Bernoulli(p).
inline LossMatrix bernoulli_matrix(int n, long trials, double p, std::mt19937_64& rng) {
  if (n < 1 || trials < 1) throw std::invalid_argument("matrix dimensions must be positive");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("probability must lie in [0, 1]");
  std::bernoulli_distribution coin(p);
  Eigen::MatrixXd l(n, trials);
  for (int i = 0; i < n; ++i) {
    for (long t = 0; t < trials; ++t) l(i, t) = coin(rng) ? 1.0 : 0.0;
  }
  return LossMatrix(std::move(l));
}

}  // namespace opca
