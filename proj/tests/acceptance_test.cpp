#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "opca/adversaries.hpp"
#include "opca/algorithms.hpp"
#include "opca/analysis.hpp"
#include "opca/capped_simplex.hpp"
#include "opca/game.hpp"
#include "opca/matrix_core.hpp"
#include "oracles.hpp"

namespace {

using opca::AdversaryId;
using opca::AlgorithmId;
using opca::BoundSpec;
using opca::EtaPolicy;
using opca::GameConfig;
using opca::GameMode;
using opca::GenDensityMatrix;
using opca::Instance;
using opca::LearnerState;
using opca::Regime;
using opca::WeightVector;

void report(int id, bool pass) {
  std::printf("[criterion %d] %s\n", id, pass ? "PASS" : "FAIL");
  std::fflush(stdout);
  EXPECT_TRUE(pass) << "acceptance criterion " << id;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<std::uint64_t> seed_range(std::uint64_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::uint64_t s = 0; s < count; ++s) seeds[s] = s;
  return seeds;
}

GameConfig killer_game(AlgorithmId alg, int k, long budget) {
  GameConfig c;
  c.n = 2 * k;
  c.k = k;
  c.mode = GameMode::kBudget;
  c.budget = budget;
  c.algorithm = alg;
  c.adversary = AdversaryId::kGdKiller;
  c.seeds = {1, 2};
  return c;
}

// Exhaustive box-constrained QP: enumerate every clipped-low / interior /
// clipped-high pattern, build each pattern's stationary point, and keep the
// feasible candidate with the smallest distance to the input. Exact for
// small n; knows nothing about the breakpoint sweep under test.
Eigen::VectorXd qp_project_enumerate(const Eigen::VectorXd& v, int m) {
  const int n = static_cast<int>(v.size());
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  std::vector<int> code(n);
  for (long pat = 0; pat < total; ++pat) {
    long p = pat;
    int capped = 0, interior = 0;
    double interior_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      code[i] = static_cast<int>(p % 3);
      p /= 3;
      if (code[i] == 2) ++capped;
      if (code[i] == 1) {
        ++interior;
        interior_sum += v[i];
      }
    }
    Eigen::VectorXd w(n);
    if (interior == 0) {
      if (capped != m) continue;
      for (int i = 0; i < n; ++i) w[i] = code[i] == 2 ? 1.0 : 0.0;
    } else {
      const double tau = (interior_sum - (m - capped)) / interior;
      bool feasible = true;
      for (int i = 0; i < n; ++i) {
        w[i] = code[i] == 2 ? 1.0 : code[i] == 0 ? 0.0 : v[i] - tau;
        if (code[i] == 1 && (w[i] < -1e-11 || w[i] > 1.0 + 1e-11)) {
          feasible = false;
          break;
        }
      }
      if (!feasible) continue;
    }
    const double obj = (w - v).squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best = w.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return best;
}

TEST(AcceptanceGate, Criterion1ProjectionsMatchIndependentSolvers) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> spread(-0.75, 1.75);
  std::uniform_real_distribution<double> positive(0.02, 2.5);

  int euclidean_failures = 0;
  for (int c = 0; c < 1000; ++c) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m = 1 + static_cast<int>(rng() % (n - 1));
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = spread(rng);
    const Eigen::VectorXd got = opca::euclidean_project(v, m).w;
    const Eigen::VectorXd want = qp_project_enumerate(v, m);
    if ((got - want).lpNorm<Eigen::Infinity>() > 1e-8) ++euclidean_failures;
  }
  EXPECT_EQ(euclidean_failures, 0);

  int entropic_failures = 0;
  for (int c = 0; c < 1000; ++c) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m = 1 + static_cast<int>(rng() % (n - 1));
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = positive(rng);
    const Eigen::VectorXd got = opca::entropic_project(v, m).w;
    const Eigen::VectorXd want = oracle::min_relative_entropy(v, m);
    if ((got - want).lpNorm<Eigen::Infinity>() > 1e-6) ++entropic_failures;
  }
  EXPECT_EQ(entropic_failures, 0);

  const double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 30.0);
  report(1, euclidean_failures == 0 && entropic_failures == 0 && elapsed < 30.0);
}

TEST(AcceptanceGate, Criterion2AdditiveUpdateWorkedExamples) {
  bool ok = true;

  LearnerState interior(AlgorithmId::kGd, GenDensityMatrix::uniform(4, 3), 0.2);
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(4);
  e0[0] = 1.0;
  const Eigen::VectorXd after =
      opca::gd_step(interior, Instance::sparse_dyad(e0)).parameter.dense().diagonal();
  const Eigen::Vector4d want_interior(0.6, 0.8, 0.8, 0.8);
  ok = ok && (after - want_interior).lpNorm<Eigen::Infinity>() <= 1e-12;
  EXPECT_NEAR((after - want_interior).lpNorm<Eigen::Infinity>(), 0.0, 1e-12);

  Eigen::VectorXd w(5);
  w << 0.43, 0.43, 0.2, 0.97, 0.97;
  Eigen::VectorXd e2 = Eigen::VectorXd::Zero(5);
  e2[2] = 1.0;
  const WeightVector clipped =
      opca::vec_gd_step(WeightVector(w, 3), e2, 0.5);
  Eigen::VectorXd want_clipped(5);
  want_clipped << 0.5, 0.5, 0.0, 1.0, 1.0;
  ok = ok && (clipped.w - want_clipped).lpNorm<Eigen::Infinity>() <= 1e-12;
  EXPECT_NEAR((clipped.w - want_clipped).lpNorm<Eigen::Infinity>(), 0.0, 1e-12);

  report(2, ok);
}

TEST(AcceptanceGate, Criterion3MatrixPathReducesToVectorPath) {
  std::mt19937_64 rng(301);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const AlgorithmId algs[] = {AlgorithmId::kLossMeg, AlgorithmId::kGainMeg,
                              AlgorithmId::kGd};
  int failures = 0;
  for (int c = 0; c < 500; ++c) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int trace = 1 + static_cast<int>(rng() % (n - 1));
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw[i] = unit(rng) * 1.5 - 0.25;
    const WeightVector start = opca::euclidean_project(raw, trace);
    const double eta = 0.05 + unit(rng);

    Eigen::VectorXd l(n);
    Instance inst = Instance::sparse_dyad(Eigen::VectorXd::Unit(n, 0));
    if (c % 2 == 0) {
      l = Eigen::VectorXd::Zero(n);
      l[static_cast<int>(rng() % n)] = 1.0;
      int hot = 0;
      l.maxCoeff(&hot);
      inst = Instance::sparse_dyad(Eigen::VectorXd::Unit(n, hot));
    } else {
      for (int i = 0; i < n; ++i) l[i] = unit(rng);
      inst = Instance::dense_psd(Eigen::MatrixXd(l.asDiagonal()));
    }

    for (AlgorithmId alg : algs) {
      const WeightVector vec = opca::vec_learner_step(alg, start, l, eta);
      GenDensityMatrix diag(Eigen::MatrixXd::Identity(n, n), start);
      const LearnerState stepped =
          opca::learner_step(LearnerState(alg, diag, eta), inst);
      const Eigen::VectorXd mat = stepped.parameter.dense().diagonal();
      if ((vec.w - mat).lpNorm<Eigen::Infinity>() > 1e-8) ++failures;
    }
  }
  EXPECT_EQ(failures, 0);
  report(3, failures == 0);
}

TEST(AcceptanceGate, Criterion4TunedRegretsStayUnderGuarantees) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  try {
    GameConfig c;
    c.n = 16;
    c.k = 4;
    c.mode = GameMode::kHorizon;
    c.horizon = 10000;
    c.algorithm = AlgorithmId::kLossMeg;
    c.adversary = AdversaryId::kFirst2k;
    c.seeds = seed_range(50);

    const double meg_mean = opca::estimate_regret(c).mean_regret;
    EXPECT_LE(meg_mean, 231.1);
    ok = ok && meg_mean <= 231.1;

    c.algorithm = AlgorithmId::kGd;
    const double gd_mean = opca::estimate_regret(c).mean_regret;
    EXPECT_LE(gd_mean, 173.20508075688772);
    ok = ok && gd_mean <= 173.20508075688772;
  } catch (const std::exception& e) {
    ADD_FAILURE() << e.what();
    ok = false;
  }
  const double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 120.0);
  report(4, ok && elapsed < 120.0);
}

TEST(AcceptanceGate, Criterion5ComparatorDeficitScalesAsRootKT) {
  const int n = 16, k = 4, seeds = 200;
  const int m = n - k;
  std::vector<double> log_t, log_deficit;
  bool positive = true;
  for (int exp2 = 8; exp2 <= 14; ++exp2) {
    const long trials = 1L << exp2;
    double best_sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
      opca::Adversary adv =
          opca::Adversary::first2k(n, k, static_cast<std::uint64_t>(exp2 * 1009 + s));
      const WeightVector w = WeightVector::uniform(n, m);
      std::vector<double> totals(n, 0.0);
      for (long t = 0; t < trials; ++t) {
        const Eigen::VectorXd l = *adv.next(w);
        int hot = 0;
        l.maxCoeff(&hot);
        totals[hot] += 1.0;
      }
      std::sort(totals.begin(), totals.end());
      double best = 0.0;
      for (int i = 0; i < m; ++i) best += totals[i];
      best_sum += best;
    }
    const double deficit =
        static_cast<double>(trials) / 2.0 - best_sum / static_cast<double>(seeds);
    positive = positive && deficit > 0.0;
    log_t.push_back(std::log(static_cast<double>(trials)));
    log_deficit.push_back(std::log(std::max(deficit, 1e-12)));
  }

  double tx = 0, ty = 0, txx = 0, txy = 0;
  const double pts = static_cast<double>(log_t.size());
  for (std::size_t i = 0; i < log_t.size(); ++i) {
    tx += log_t[i];
    ty += log_deficit[i];
    txx += log_t[i] * log_t[i];
    txy += log_t[i] * log_deficit[i];
  }
  const double slope = (pts * txy - tx * ty) / (pts * txx - tx * tx);
  EXPECT_TRUE(positive);
  EXPECT_GE(slope, 0.4);
  EXPECT_LE(slope, 0.6);
  report(5, positive && slope >= 0.4 && slope <= 0.6);
}

double min_regret_over_eta_grid(int k, long budget) {
  const double root = std::sqrt(static_cast<double>(budget));
  const double lo = 0.02 / root, hi = 20.0 / root;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 12; ++i) {
    const double eta = lo * std::pow(hi / lo, static_cast<double>(i) / 11.0);
    GameConfig c = killer_game(AlgorithmId::kGd, k, budget);
    c.eta_policy = EtaPolicy::kExplicit;
    c.eta = eta;
    best = std::min(best, opca::run_game(c, 1).final_regret);
  }
  return best;
}

double auto_meg_killer_regret(int k, long budget, double* bound) {
  GameConfig c = killer_game(AlgorithmId::kLossMeg, k, budget);
  c.eta_policy = EtaPolicy::kAuto;
  const opca::RegretTrace tr = opca::run_game(c, 1);
  if (bound != nullptr) *bound = tr.bound;
  return tr.final_regret;
}

TEST(AcceptanceGate, Criterion6AdditiveLearnerPaysLinearInK) {
  const int ks[] = {2, 4, 8};
  const long budgets[] = {64, 256, 1024};
  bool ok = true;
  try {
    for (int k : ks) {
      double rmin = std::numeric_limits<double>::infinity();
      double rmax = 0.0;
      for (long b : budgets) {
        const double r = min_regret_over_eta_grid(k, b) /
                         (k * std::sqrt(static_cast<double>(b)));
        EXPECT_GE(r, 0.05) << "k=" << k << " B=" << b;
        ok = ok && r >= 0.05;
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
      }
      EXPECT_LE(rmax / rmin, 3.0) << "k=" << k;
      ok = ok && rmax / rmin <= 3.0;
    }

    const long matched = 256;
    const double ratio2 = min_regret_over_eta_grid(2, matched) /
                          auto_meg_killer_regret(2, matched, nullptr);
    const double ratio8 = min_regret_over_eta_grid(8, matched) /
                          auto_meg_killer_regret(8, matched, nullptr);
    EXPECT_GE(ratio8, 1.5 * ratio2);
    ok = ok && ratio8 >= 1.5 * ratio2;
  } catch (const std::exception& e) {
    ADD_FAILURE() << e.what();
    ok = false;
  }
  report(6, ok);
}

TEST(AcceptanceGate, Criterion7MultiplicativeLearnerKeepsBudgetGuarantee) {
  const int ks[] = {2, 4, 8};
  const long budgets[] = {64, 256, 1024};
  bool ok = true;
  try {
    for (int k : ks) {
      for (long b : budgets) {
        double bound = 0.0;
        const double regret = auto_meg_killer_regret(k, b, &bound);
        EXPECT_TRUE(std::isfinite(bound));
        EXPECT_LE(regret, bound) << "k=" << k << " B=" << b;
        ok = ok && std::isfinite(bound) && regret <= bound;
      }
    }
  } catch (const std::exception& e) {
    ADD_FAILURE() << e.what();
    ok = false;
  }
  report(7, ok);
}

TEST(AcceptanceGate, Criterion8TwoExpertDeficitConstantIsStable) {
  const auto t0 = std::chrono::steady_clock::now();
  const double ps[] = {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0};
  const double hit_budgets[] = {8.0, 32.0, 128.0};
  const long replicates = 100000;
  std::mt19937_64 rng(801);

  std::vector<double> cs;
  for (double p : ps) {
    for (double hits : hit_budgets) {
      const long trials = std::lround(hits / p);
      double sum = 0.0;
      for (long r = 0; r < replicates; ++r) {
        sum += opca::two_expert_game_winner_sample(trials, p, rng);
      }
      const double mean = sum / static_cast<double>(replicates);
      cs.push_back((hits - mean) / std::sqrt(hits));
    }
  }

  double grand = 0.0;
  for (double c : cs) grand += c;
  grand /= static_cast<double>(cs.size());
  bool ok = true;
  for (double c : cs) {
    EXPECT_GT(c, 0.0);
    EXPECT_GE(c, 0.7 * grand);
    EXPECT_LE(c, 1.3 * grand);
    ok = ok && c > 0.0 && c >= 0.7 * grand && c <= 1.3 * grand;
  }
  const double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 60.0);
  report(8, ok && elapsed < 60.0);
}

TEST(AcceptanceGate, Criterion9BracketSumUpperBoundsBestExpert) {
  const int n = 8, rounds = 3;
  const long trials = 96, restricted = trials / rounds, replicates = 10000;
  bool ok = true;

  {
    std::mt19937_64 rng(901);
    double ls = 0, lq = 0, rs = 0, rq = 0;
    for (long r = 0; r < replicates; ++r) {
      const opca::LossMatrix full = opca::single_hit_matrix(n, trials, 1.0, rng);
      const double lhs = opca::best_mset_loss(full, 1);
      const double rhs =
          rounds * opca::two_expert_game_winner_sample(restricted, 2.0 / n, rng);
      ls += lhs;
      lq += lhs * lhs;
      rs += rhs;
      rq += rhs * rhs;
    }
    const double nr = static_cast<double>(replicates);
    const double lm = ls / nr, rm = rs / nr;
    const double se =
        std::sqrt((lq / nr - lm * lm) / nr + (rq / nr - rm * rm) / nr);
    EXPECT_LE(lm, rm + 3.0 * se);
    ok = ok && lm <= rm + 3.0 * se;
  }

  {
    std::mt19937_64 rng(902);
    const double p = 1.0 / 8.0;
    double ls = 0, lq = 0, rs = 0, rq = 0;
    for (long r = 0; r < replicates; ++r) {
      const opca::LossMatrix full = opca::bernoulli_matrix(n, trials, p, rng);
      const double lhs = opca::best_mset_loss(full, 1);
      const double rhs =
          rounds *
          opca::two_expert_winner_loss(opca::bernoulli_matrix(2, restricted, p, rng));
      ls += lhs;
      lq += lhs * lhs;
      rs += rhs;
      rq += rhs * rhs;
    }
    const double nr = static_cast<double>(replicates);
    const double lm = ls / nr, rm = rs / nr;
    const double se =
        std::sqrt((lq / nr - lm * lm) / nr + (rq / nr - rm * rm) / nr);
    EXPECT_LE(lm, rm + 3.0 * se);
    ok = ok && lm <= rm + 3.0 * se;
  }

  report(9, ok);
}

TEST(AcceptanceGate, Criterion10DenseRegimeGuaranteeOrdering) {
  bool ok = true;

  const auto dense_bound = [](AlgorithmId alg, int k) {
    GameConfig c;
    c.n = 64;
    c.k = k;
    c.mode = GameMode::kHorizon;
    c.horizon = 4096;
    c.regime = Regime::kDense;
    c.algorithm = alg;
    return c;
  };

  std::vector<GameConfig> grid;
  const int low_ks[] = {2, 4, 8};
  const int high_ks[] = {56, 60, 62};
  for (int k : low_ks) {
    grid.push_back(dense_bound(AlgorithmId::kLossMeg, k));
    grid.push_back(dense_bound(AlgorithmId::kGainMeg, k));
  }
  for (int k : high_ks) {
    grid.push_back(dense_bound(AlgorithmId::kLossMeg, k));
    grid.push_back(dense_bound(AlgorithmId::kGainMeg, k));
  }
  const std::vector<opca::BoundRow> rows = opca::bound_report(grid, false);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    const double loss_bound = rows[i].bound;
    const double gain_bound = rows[i + 1].bound;
    const bool low = rows[i].k <= 8;
    const bool holds = low ? loss_bound < gain_bound : loss_bound > gain_bound;
    EXPECT_TRUE(holds) << "k=" << rows[i].k << " loss=" << loss_bound
                       << " gain=" << gain_bound;
    ok = ok && holds;
  }

  try {
    const auto mean_regret = [&](AlgorithmId alg, int k) {
      GameConfig c = dense_bound(alg, k);
      c.adversary = AdversaryId::kDenseBernoulli;
      c.seeds = seed_range(50);
      return opca::estimate_regret(c).mean_regret;
    };
    const double loss4 = mean_regret(AlgorithmId::kLossMeg, 4);
    const double gain4 = mean_regret(AlgorithmId::kGainMeg, 4);
    const double loss60 = mean_regret(AlgorithmId::kLossMeg, 60);
    const double gain60 = mean_regret(AlgorithmId::kGainMeg, 60);
    std::printf("criterion 10 measured means: k=4 loss=%.6g gain=%.6g, "
                "k=60 loss=%.6g gain=%.6g\n",
                loss4, gain4, loss60, gain60);
    EXPECT_LT(loss4, gain4);
    EXPECT_GT(loss60, gain60);
    ok = ok && loss4 < gain4 && loss60 > gain60;
  } catch (const std::exception& e) {
    ADD_FAILURE() << e.what();
    ok = false;
  }

  report(10, ok);
}

TEST(AcceptanceGate, Criterion11ReplayedConfigurationIsByteIdentical) {
  GameConfig c;
  c.n = 8;
  c.k = 2;
  c.mode = GameMode::kHorizon;
  c.horizon = 64;
  c.algorithm = AlgorithmId::kLossMeg;
  c.adversary = AdversaryId::kDenseBernoulli;
  c.loss_mode = opca::LossMode::kSampled;
  c.seeds = {7, 8};

  std::ostringstream first, second;
  for (std::uint64_t s : c.seeds) {
    opca::write_trace_csv(first, s, opca::run_game(c, s));
    opca::write_trace_csv(second, s, opca::run_game(c, s));
  }
  const bool traces_equal = first.str() == second.str();
  EXPECT_TRUE(traces_equal);

  std::ostringstream ea, eb;
  opca::write_estimate_csv(ea, opca::estimate_regret(c));
  opca::write_estimate_csv(eb, opca::estimate_regret(c));
  const bool estimates_equal = ea.str() == eb.str();
  EXPECT_TRUE(estimates_equal);

  report(11, traces_equal && estimates_equal);
}

}  // namespace
