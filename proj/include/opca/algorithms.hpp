#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "opca/capped_simplex.hpp"
#include "opca/errors.hpp"
#include "opca/matrix_core.hpp"

namespace opca {

enum class AlgorithmId { kLossMeg, kGainMeg, kGd };

enum class Regime { kSparse, kDense };

inline std::string to_string(AlgorithmId a) {
  switch (a) {
    case AlgorithmId::kLossMeg: return "loss-meg";
    case AlgorithmId::kGainMeg: return "gain-meg";
    case AlgorithmId::kGd: return "gd";
  }
  throw std::invalid_argument("unknown algorithm id");
}

inline std::string to_string(Regime r) {
  return r == Regime::kSparse ? "sparse" : "dense";
}

// Online learner state: the current parameter matrix plus the step size it
// was tuned with. Loss MEG and GD keep a trace-m parameter whose m-set
// marginals define the prediction; Gain MEG keeps the complementary trace-k
// parameter.
struct LearnerState {
  AlgorithmId algorithm;
  GenDensityMatrix parameter;
  double eta;

  LearnerState(AlgorithmId alg, GenDensityMatrix param, double step)
      : algorithm(alg), parameter(std::move(param)), eta(step) {
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw std::invalid_argument("learner step size must be positive and finite");
    }
  }
};

namespace detail {

// Floor for parameter eigenvalues before taking logs. Keeps the matrix
// exponential update well defined when a direction's weight has collapsed
// to (numerical) zero.
inline constexpr double kLogFloor = 1e-12;

// Shared core of the two multiplicative updates: diagonalize
// log(W) + sign*eta*X, exponentiate the spectrum (shifted by its max, which
// the scale-invariant entropic projection absorbs), and project back onto
// the capped simplex in the new eigenbasis.
inline LearnerState meg_step(const LearnerState& s, const Instance& x, double sign) {
  const int n = s.parameter.dim();
  if (x.dim() != n) {
    throw std::invalid_argument("instance dimension does not match learner state");
  }
  Eigen::VectorXd logw = s.parameter.eigenvalues.w.cwiseMax(kLogFloor)
                             .cwiseMin(1.0)
                             .array()
                             .log()
                             .matrix();
  Eigen::MatrixXd arg =
      s.parameter.basis * logw.asDiagonal() * s.parameter.basis.transpose() +
      (sign * s.eta) * x.matrix();
  EighResult ed = eigh(arg);
  const double shift = ed.eigenvalues.maxCoeff();
  Eigen::VectorXd lam = (ed.eigenvalues.array() - shift).exp().matrix();
  WeightVector projected = entropic_project(lam, s.parameter.trace_target());
  return LearnerState(s.algorithm,
                      GenDensityMatrix(std::move(ed.eigenvectors), std::move(projected)),
                      s.eta);
}

}  // namespace detail

// Multiplicative update that shrinks weight along high-loss directions
// (trace-m parameter).
inline LearnerState loss_meg_step(const LearnerState& s, const Instance& x) {
  return detail::meg_step(s, x, -1.0);
}

// Multiplicative update that grows weight along high-loss directions
// (trace-k parameter tracking what to discard).
inline LearnerState gain_meg_step(const LearnerState& s, const Instance& x) {
  return detail::meg_step(s, x, +1.0);
}

// Additive update followed by Euclidean projection of the spectrum.
inline LearnerState gd_step(const LearnerState& s, const Instance& x) {
  const int n = s.parameter.dim();
  if (x.dim() != n) {
    throw std::invalid_argument("instance dimension does not match learner state");
  }
  Eigen::MatrixXd arg = s.parameter.dense() - s.eta * x.matrix();
  EighResult ed = eigh(arg);
  WeightVector projected = euclidean_project(ed.eigenvalues, s.parameter.trace_target());
  return LearnerState(s.algorithm,
                      GenDensityMatrix(std::move(ed.eigenvectors), std::move(projected)),
                      s.eta);
}

// Dispatch on the state's algorithm tag.
inline LearnerState learner_step(const LearnerState& s, const Instance& x) {
  switch (s.algorithm) {
    case AlgorithmId::kLossMeg: return loss_meg_step(s, x);
    case AlgorithmId::kGainMeg: return gain_meg_step(s, x);
    case AlgorithmId::kGd: return gd_step(s, x);
  }
  throw std::invalid_argument("unknown algorithm id");
}

namespace detail {

inline void check_vec_step(const WeightVector& w, const Eigen::VectorXd& loss) {
  if (loss.size() != w.w.size()) {
    throw std::invalid_argument("loss vector dimension does not match weights");
  }
  if (!loss.allFinite()) {
    throw std::invalid_argument("loss vector must be finite");
  }
}

// Vector multiplicative update; `sign` as in meg_step. The exponent is
// shifted so its largest value is zero, which both avoids overflow and
// guarantees at least one strictly positive coordinate; the entropic
// projection's scale invariance makes the shift a no-op mathematically.
inline WeightVector vec_meg_step(const WeightVector& w, const Eigen::VectorXd& loss,
                                 double eta, double sign) {
  check_vec_step(w, loss);
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
  Eigen::ArrayXd expo = sign * eta * loss.array();
  expo -= expo.maxCoeff();
  Eigen::VectorXd upd =
      (w.w.cwiseMax(kLogFloor).cwiseMin(1.0).array() * expo.exp()).matrix();
  return entropic_project(upd, w.m);
}

}  // namespace detail

// Vector-game specializations: identical to the matrix steps when the
// parameter and instance are simultaneously diagonal.
inline WeightVector vec_loss_meg_step(const WeightVector& w, const Eigen::VectorXd& loss,
                                      double eta) {
  return detail::vec_meg_step(w, loss, eta, -1.0);
}

inline WeightVector vec_gain_meg_step(const WeightVector& w, const Eigen::VectorXd& loss,
                                      double eta) {
  return detail::vec_meg_step(w, loss, eta, +1.0);
}

inline WeightVector vec_gd_step(const WeightVector& w, const Eigen::VectorXd& loss,
                                double eta) {
  detail::check_vec_step(w, loss);
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
  return euclidean_project(w.w - eta * loss, w.m);
}

inline WeightVector vec_learner_step(AlgorithmId alg, const WeightVector& w,
                                     const Eigen::VectorXd& loss, double eta) {
  switch (alg) {
    case AlgorithmId::kLossMeg: return vec_loss_meg_step(w, loss, eta);
    case AlgorithmId::kGainMeg: return vec_gain_meg_step(w, loss, eta);
    case AlgorithmId::kGd: return vec_gd_step(w, loss, eta);
  }
  throw std::invalid_argument("unknown algorithm id");
}

// What is known in advance when tuning a step size or evaluating a regret
// guarantee: either the horizon T, or a budget on the comparator's total
// loss (trace-m side) respectively total gain (trace-k side).
enum class BoundMode { kHorizon, kBudget, kGainBudget };

inline std::string to_string(BoundMode m) {
  switch (m) {
    case BoundMode::kHorizon: return "horizon";
    case BoundMode::kBudget: return "budget";
    case BoundMode::kGainBudget: return "gain-budget";
  }
  throw std::invalid_argument("unknown bound mode");
}

struct BoundSpec {
  AlgorithmId algorithm = AlgorithmId::kLossMeg;
  Regime regime = Regime::kSparse;
  BoundMode mode = BoundMode::kHorizon;
  int n = 0;
  int k = 0;
  // Horizon T when mode == kHorizon; comparator loss budget B when
  // mode == kBudget; comparator gain budget G when mode == kGainBudget.
  double amount = 0.0;
};

namespace detail {

inline void check_bound_dims(const BoundSpec& b) {
  if (b.n < 2) throw std::invalid_argument("bound spec requires n >= 2");
  if (b.k < 1 || b.k > b.n - 1) {
    throw std::invalid_argument("bound spec requires 1 <= k <= n - 1");
  }
}

// Worst-case per-trial loss range for the additive update: instances with a
// single unit direction keep gradients bounded by 1; general instances only
// by sqrt(n) in Frobenius norm.
inline double gd_gradient_range(const BoundSpec& b) {
  return b.regime == Regime::kSparse ? 1.0 : std::sqrt(static_cast<double>(b.n));
}

// Translate a known horizon into the comparator budget that the
// multiplicative updates are tuned against.
inline double horizon_to_loss_budget(const BoundSpec& b, double t) {
  const double m = static_cast<double>(b.n - b.k);
  return b.regime == Regime::kSparse ? t * m / static_cast<double>(b.n) : t * m;
}

inline double horizon_to_gain_budget(const BoundSpec& b, double t) {
  return b.regime == Regime::kSparse ? t : t * static_cast<double>(b.k);
}

}  // namespace detail

// Step size achieving the corresponding regret guarantee.
inline double tune_eta(const BoundSpec& b) {
  detail::check_bound_dims(b);
  if (!std::isfinite(b.amount) || b.amount <= 0.0) {
    throw std::invalid_argument("tuning requires a positive horizon or budget");
  }
  const double n = static_cast<double>(b.n);
  const double k = static_cast<double>(b.k);
  const double m = n - k;
  switch (b.algorithm) {
    case AlgorithmId::kLossMeg: {
      double budget;
      if (b.mode == BoundMode::kBudget) {
        budget = b.amount;
      } else if (b.mode == BoundMode::kHorizon) {
        budget = detail::horizon_to_loss_budget(b, b.amount);
      } else {
        throw UnsupportedCombination("loss-meg is tuned against a loss budget or horizon, not a gain budget");
      }
      return std::log(1.0 + std::sqrt(2.0 * m * std::log(n / m) / std::max(budget, 1.0)));
    }
    case AlgorithmId::kGainMeg: {
      double budget;
      if (b.mode == BoundMode::kGainBudget) {
        budget = b.amount;
      } else if (b.mode == BoundMode::kHorizon) {
        budget = detail::horizon_to_gain_budget(b, b.amount);
      } else {
        throw UnsupportedCombination("gain-meg is tuned against a gain budget or horizon, not a loss budget");
      }
      return std::log(1.0 + std::sqrt(2.0 * k * std::log(n / k) / std::max(budget, 1.0)));
    }
    case AlgorithmId::kGd: {
      if (b.mode != BoundMode::kHorizon) {
        throw UnsupportedCombination("gd supports only horizon-based tuning");
      }
      const double diameter = std::sqrt(m * k / n);
      return diameter / (detail::gd_gradient_range(b) * std::sqrt(b.amount));
    }
  }
  throw std::invalid_argument("unknown algorithm id");
}

// Closed-form regret guarantee for the given tuning. Budget-mode values are
// valid for any comparator meeting the budget; horizon-mode values are the
// worst case over loss sequences of that length.
inline double regret_bound_value(const BoundSpec& b) {
  detail::check_bound_dims(b);
  if (!std::isfinite(b.amount) || b.amount < 0.0) {
    throw std::invalid_argument("bound evaluation requires a nonnegative horizon or budget");
  }
  const double n = static_cast<double>(b.n);
  const double k = static_cast<double>(b.k);
  const double m = n - k;
  switch (b.algorithm) {
    case AlgorithmId::kLossMeg: {
      double budget;
      if (b.mode == BoundMode::kBudget) {
        budget = b.amount;
      } else if (b.mode == BoundMode::kHorizon) {
        budget = detail::horizon_to_loss_budget(b, b.amount);
      } else {
        throw UnsupportedCombination("loss-meg bounds take a loss budget or horizon, not a gain budget");
      }
      const double entropy = m * std::log(n / m);
      return std::sqrt(2.0 * budget * entropy) + entropy;
    }
    case AlgorithmId::kGainMeg: {
      double budget;
      if (b.mode == BoundMode::kGainBudget) {
        budget = b.amount;
      } else if (b.mode == BoundMode::kHorizon) {
        budget = detail::horizon_to_gain_budget(b, b.amount);
      } else {
        throw UnsupportedCombination("gain-meg bounds take a gain budget or horizon, not a loss budget");
      }
      return std::sqrt(2.0 * budget * k * std::log(n / k));
    }
    case AlgorithmId::kGd: {
      if (b.mode != BoundMode::kHorizon) {
        throw UnsupportedCombination("gd has only horizon-based guarantees");
      }
      return detail::gd_gradient_range(b) * std::sqrt(m * k * b.amount / n);
    }
  }
  throw std::invalid_argument("unknown algorithm id");
}

}  // namespace opca
