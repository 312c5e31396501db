#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opca/adversaries.hpp"
#include "opca/algorithms.hpp"
#include "opca/capped_simplex.hpp"
#include "opca/errors.hpp"
#include "opca/matrix_core.hpp"

namespace opca {

enum class GameMode { kHorizon, kBudget };
enum class LossMode { kExpected, kSampled };
enum class Representation { kVector, kMatrix };
enum class EtaPolicy { kAuto, kExplicit, kSweep };

inline std::string to_string(GameMode m) {
  return m == GameMode::kHorizon ? "horizon" : "budget";
}

struct GameConfig {
  int n = 0;
  int k = 0;
  GameMode mode = GameMode::kHorizon;
  long horizon = 0;  // trials to play in horizon mode
  long budget = 0;   // comparator loss budget in budget mode
  Regime regime = Regime::kSparse;
  AlgorithmId algorithm = AlgorithmId::kLossMeg;
  AdversaryId adversary = AdversaryId::kFirst2k;
  EtaPolicy eta_policy = EtaPolicy::kAuto;
  double eta = 0.0;                // used when eta_policy == kExplicit
  std::vector<double> eta_sweep;   // used when eta_policy == kSweep
  std::vector<std::uint64_t> seeds;
  LossMode loss_mode = LossMode::kExpected;
  Representation representation = Representation::kVector;
};

inline void validate_game_config(const GameConfig& c) {
  if (c.n < 2) throw std::invalid_argument("game requires n >= 2");
  if (c.k < 1 || c.k > c.n - 1) {
    throw std::invalid_argument("game requires 1 <= k <= n - 1");
  }
  if (c.mode == GameMode::kHorizon && c.horizon < 1) {
    throw std::invalid_argument("horizon mode requires at least one trial");
  }
  if (c.mode == GameMode::kBudget && c.budget < 0) {
    throw std::invalid_argument("budget must be nonnegative");
  }
  if (c.mode == GameMode::kBudget && c.adversary != AdversaryId::kGdKiller) {
    throw UnsupportedCombination(
        "budget mode needs the adaptive adversary to terminate the game");
  }
  if (c.mode == GameMode::kHorizon && c.adversary == AdversaryId::kGdKiller) {
    throw UnsupportedCombination("the adaptive adversary plays only in budget mode");
  }
  if (c.eta_policy == EtaPolicy::kExplicit &&
      (!(c.eta > 0.0) || !std::isfinite(c.eta))) {
    throw std::invalid_argument("explicit step size must be positive and finite");
  }
  if (c.eta_policy == EtaPolicy::kSweep && c.eta_sweep.empty()) {
    throw std::invalid_argument("step-size sweep needs at least one value");
  }
}

// Tuning/guarantee description matching the game: horizon games carry the
// horizon, budget games the comparator's loss budget.
inline BoundSpec bound_spec_for(const GameConfig& c) {
  BoundSpec b;
  b.algorithm = c.algorithm;
  b.regime = c.regime;
  b.n = c.n;
  b.k = c.k;
  if (c.mode == GameMode::kHorizon) {
    b.mode = BoundMode::kHorizon;
    b.amount = static_cast<double>(c.horizon);
  } else {
    b.mode = BoundMode::kBudget;
    b.amount = static_cast<double>(c.budget);
  }
  return b;
}

inline double resolve_eta(const GameConfig& c) {
  switch (c.eta_policy) {
    case EtaPolicy::kExplicit:
      if (!(c.eta > 0.0) || !std::isfinite(c.eta)) {
        throw std::invalid_argument("explicit step size must be positive and finite");
      }
      return c.eta;
    case EtaPolicy::kAuto:
      return tune_eta(bound_spec_for(c));
    case EtaPolicy::kSweep:
      throw std::invalid_argument(
          "a single game needs one step size; resolve the sweep with sweep_eta");
  }
  throw std::invalid_argument("unknown step-size policy");
}

// Closed-form guarantee for the configured game, or NaN when the
// algorithm/mode pairing has none.
inline double bound_value_or_nan(const GameConfig& c) {
  try {
    return regret_bound_value(bound_spec_for(c));
  } catch (const UnsupportedCombination&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

struct RegretTrace {
  std::vector<double> alg_cum;   // cumulative algorithm loss, per trial
  std::vector<double> comp_cum;  // best fixed comparator on the prefix, per trial
  double final_regret = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  double eta = 0.0;
  long trials = 0;
};

// Adaptive or stochastic supplier of per-trial loss vectors; receives the
// learner's current discarded-set marginals, returns nothing when the
// sequence is over.
using LossSource = std::function<std::optional<Eigen::VectorXd>(const WeightVector&)>;

namespace detail {

inline constexpr std::uint64_t kSamplerSalt = 0x9e3779b97f4a7c15ULL;

inline double prefix_best_mset(const Eigen::VectorXd& cum, int m) {
  std::vector<double> t(cum.data(), cum.data() + cum.size());
  std::nth_element(t.begin(), t.begin() + m - 1, t.end());
  return std::accumulate(t.begin(), t.begin() + m, 0.0);
}

inline bool is_one_hot(const Eigen::VectorXd& l, int* idx) {
  int hot = -1;
  for (int i = 0; i < l.size(); ++i) {
    if (l[i] == 0.0) continue;
    if (l[i] != 1.0 || hot != -1) return false;
    hot = i;
  }
  if (hot < 0) return false;
  *idx = hot;
  return true;
}

}  // namespace detail

// Play one game against an injected loss source. In horizon mode the game
// runs exactly c.horizon trials unless the source ends earlier; otherwise it
// runs until the source ends. The learner suffers its discarded set's loss:
// the expected value under its weights, or the loss of one sampled set.
inline RegretTrace run_game_with_source(const GameConfig& c, std::uint64_t seed,
                                        double eta, const LossSource& source) {
  if (c.n < 2 || c.k < 1 || c.k > c.n - 1) {
    throw std::invalid_argument("game requires n >= 2 and 1 <= k <= n - 1");
  }
  if (c.mode == GameMode::kHorizon && c.horizon < 1) {
    throw std::invalid_argument("horizon mode requires at least one trial");
  }
  const int n = c.n, k = c.k, m = c.n - c.k;
  const bool gain_side = c.algorithm == AlgorithmId::kGainMeg;
  const bool matrix_rep = c.representation == Representation::kMatrix;
  std::mt19937_64 sampler(seed ^ detail::kSamplerSalt);

  RegretTrace tr;
  tr.eta = eta;
  tr.bound = bound_value_or_nan(c);

  // Vector-path learner parameter (discarded-set weights, or kept-set
  // weights for the gain algorithm).
  WeightVector param = WeightVector::uniform(n, gain_side ? k : m);
  // Matrix-path learner state.
  LearnerState state(c.algorithm, GenDensityMatrix::uniform(n, gain_side ? k : m), eta);

  const auto discard_marginals = [&]() -> WeightVector {
    if (matrix_rep) {
      Eigen::VectorXd d = state.parameter.dense().diagonal();
      if (gain_side) d = Eigen::VectorXd::Ones(n) - d;
      return WeightVector(d, m);
    }
    if (gain_side) return WeightVector(Eigen::VectorXd::Ones(n) - param.w, m);
    return param;
  };

  Eigen::VectorXd cum = Eigen::VectorXd::Zero(n);
  CovarianceAccumulator cov(n);
  double alg_total = 0.0;

  for (long t = 0;; ++t) {
    if (c.mode == GameMode::kHorizon && t >= c.horizon) break;
    const WeightVector wpred = discard_marginals();
    std::optional<Eigen::VectorXd> l = source(wpred);
    if (!l) break;
    if (l->size() != n || !l->allFinite() || l->minCoeff() < -1e-12 ||
        l->maxCoeff() > 1.0 + 1e-12) {
      throw std::invalid_argument("loss vectors must lie in [0, 1]^n");
    }

    double suffered;
    if (matrix_rep) {
      int hot = -1;
      Eigen::VectorXd lv = *l;
      const Instance inst =
          detail::is_one_hot(lv, &hot)
              ? Instance::sparse_dyad([&] {
                  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
                  e[hot] = 1.0;
                  return e;
                }())
              : Instance::dense_psd(Eigen::MatrixXd(lv.asDiagonal()));
      if (c.loss_mode == LossMode::kExpected) {
        suffered = gain_side ? inst.trace() - expected_loss(state.parameter, inst)
                             : expected_loss(state.parameter, inst);
      } else {
        const Eigen::MatrixXd p = sample_projection(state.parameter, sampler);
        const double captured = (p * inst.matrix()).trace();
        suffered = gain_side ? inst.trace() - captured : captured;
      }
      cov.add(inst);
      state = learner_step(state, inst);
    } else {
      if (c.loss_mode == LossMode::kExpected) {
        suffered = wpred.w.dot(*l);
      } else {
        suffered = 0.0;
        for (int i : sample_mset(wpred, sampler)) suffered += (*l)[i];
      }
      param = vec_learner_step(c.algorithm, param, *l, eta);
    }

    cum += *l;
    alg_total += suffered;
    tr.alg_cum.push_back(alg_total);
    tr.comp_cum.push_back(matrix_rep ? comparator_loss(cov.matrix(), k)
                                     : detail::prefix_best_mset(cum, m));
  }

  tr.trials = static_cast<long>(tr.alg_cum.size());
  tr.final_regret = tr.trials == 0 ? 0.0 : tr.alg_cum.back() - tr.comp_cum.back();
  return tr;
}

inline Adversary make_adversary(const GameConfig& c, std::uint64_t seed, double eta) {
  switch (c.adversary) {
    case AdversaryId::kFirst2k: return Adversary::first2k(c.n, c.k, seed);
    case AdversaryId::kUniform: return Adversary::uniform(c.n, seed);
    case AdversaryId::kDenseBernoulli: return Adversary::dense_bernoulli(c.n, seed);
    case AdversaryId::kGdKiller: return Adversary::gd_killer(c.n, c.k, c.budget, eta);
  }
  throw std::invalid_argument("unknown adversary id");
}

inline RegretTrace run_game(const GameConfig& c, std::uint64_t seed) {
  validate_game_config(c);
  const double eta = resolve_eta(c);
  Adversary adv = make_adversary(c, seed, eta);
  return run_game_with_source(
      c, seed, eta, [&adv](const WeightVector& w) { return adv.next(w); });
}

struct SeedSummary {
  std::uint64_t seed = 0;
  long trials = 0;
  double alg_final = 0.0;
  double comp_final = 0.0;
  double regret = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
};

struct EstimateResult {
  double mean_regret = 0.0;
  double std_error = 0.0;
  double eta = 0.0;
  std::vector<SeedSummary> per_seed;  // in the order of config.seeds
};

namespace detail {

inline EstimateResult estimate_over_seeds(const GameConfig& c, double eta) {
  // Every seed's game is an independent pure function of (config, seed);
  // they are scheduled sequentially here and merged in seed order, which is
  // also the only deterministic merge order.
  EstimateResult res;
  res.eta = eta;
  for (std::uint64_t seed : c.seeds) {
    Adversary adv = make_adversary(c, seed, eta);
    RegretTrace tr = run_game_with_source(
        c, seed, eta, [&adv](const WeightVector& w) { return adv.next(w); });
    SeedSummary s;
    s.seed = seed;
    s.trials = tr.trials;
    s.alg_final = tr.alg_cum.empty() ? 0.0 : tr.alg_cum.back();
    s.comp_final = tr.comp_cum.empty() ? 0.0 : tr.comp_cum.back();
    s.regret = tr.final_regret;
    s.bound = tr.bound;
    res.per_seed.push_back(s);
  }
  const std::size_t nseeds = res.per_seed.size();
  double mean = 0.0;
  for (const SeedSummary& s : res.per_seed) mean += s.regret;
  mean /= static_cast<double>(nseeds);
  double var = 0.0;
  for (const SeedSummary& s : res.per_seed) {
    var += (s.regret - mean) * (s.regret - mean);
  }
  res.mean_regret = mean;
  res.std_error = nseeds < 2
                      ? 0.0
                      : std::sqrt(var / static_cast<double>(nseeds - 1)) /
                            std::sqrt(static_cast<double>(nseeds));
  return res;
}

}  // namespace detail

// Monte-Carlo regret estimate over the config's seed list.
inline EstimateResult estimate_regret(const GameConfig& c) {
  validate_game_config(c);
  if (c.seeds.size() < 2) {
    throw std::invalid_argument("estimation needs at least two seeds");
  }
  return detail::estimate_over_seeds(c, resolve_eta(c));
}

struct SweepEntry {
  double eta = 0.0;
  double mean_regret = 0.0;
  double std_error = 0.0;
};

// Evaluate every step size in the sweep list; entries keep the list order.
inline std::vector<SweepEntry> sweep_eta(const GameConfig& c) {
  validate_game_config(c);
  if (c.eta_policy != EtaPolicy::kSweep) {
    throw std::invalid_argument("sweep requires the sweep step-size policy");
  }
  if (c.seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  std::vector<SweepEntry> out;
  for (double eta : c.eta_sweep) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw std::invalid_argument("sweep step sizes must be positive and finite");
    }
    EstimateResult r = detail::estimate_over_seeds(c, eta);
    out.push_back({eta, r.mean_regret, r.std_error});
  }
  return out;
}

struct BoundRow {
  AlgorithmId algorithm = AlgorithmId::kLossMeg;
  Regime regime = Regime::kSparse;
  GameMode mode = GameMode::kHorizon;
  int n = 0;
  int k = 0;
  double amount = 0.0;  // horizon or budget
  double bound = std::numeric_limits<double>::quiet_NaN();
  double measured = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();
};

// One row per grid config: the closed-form guarantee, optionally the
// measured mean regret over the config's seeds, and their ratio.
inline std::vector<BoundRow> bound_report(const std::vector<GameConfig>& grid,
                                          bool measure) {
  std::vector<BoundRow> rows;
  for (const GameConfig& c : grid) {
    BoundRow row;
    row.algorithm = c.algorithm;
    row.regime = c.regime;
    row.mode = c.mode;
    row.n = c.n;
    row.k = c.k;
    row.amount = c.mode == GameMode::kHorizon ? static_cast<double>(c.horizon)
                                              : static_cast<double>(c.budget);
    row.bound = bound_value_or_nan(c);
    if (measure) {
      row.measured = estimate_regret(c).mean_regret;
      row.ratio = row.measured / row.bound;
    }
    rows.push_back(row);
  }
  return rows;
}

// 12 significant digits, the serialization contract for every CSV number.
inline std::string format_sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_trace_csv(std::ostream& os, std::uint64_t seed,
                            const RegretTrace& t) {
  os << "seed,trial,alg_loss_cum,comp_loss_cum,regret,bound\n";
  for (long i = 0; i < t.trials; ++i) {
    os << seed << ',' << (i + 1) << ',' << format_sig12(t.alg_cum[i]) << ','
       << format_sig12(t.comp_cum[i]) << ','
       << format_sig12(t.alg_cum[i] - t.comp_cum[i]) << ','
       << format_sig12(t.bound) << '\n';
  }
}

inline void write_estimate_csv(std::ostream& os, const EstimateResult& r) {
  os << "seed,trial,alg_loss_cum,comp_loss_cum,regret,bound\n";
  for (const SeedSummary& s : r.per_seed) {
    os << s.seed << ',' << s.trials << ',' << format_sig12(s.alg_final) << ','
       << format_sig12(s.comp_final) << ',' << format_sig12(s.regret) << ','
       << format_sig12(s.bound) << '\n';
  }
}

inline void write_bound_report_csv(std::ostream& os,
                                   const std::vector<BoundRow>& rows) {
  os << "algorithm,regime,mode,n,k,amount,bound,measured,ratio\n";
  for (const BoundRow& r : rows) {
    os << to_string(r.algorithm) << ',' << to_string(r.regime) << ','
       << to_string(r.mode) << ',' << r.n << ',' << r.k << ','
       << format_sig12(r.amount) << ',' << format_sig12(r.bound) << ','
       << format_sig12(r.measured) << ',' << format_sig12(r.ratio) << '\n';
  }
}

}  // namespace opca
