#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "opca/capped_simplex.hpp"
#include "opca/errors.hpp"

namespace opca {

enum class AdversaryId { kFirst2k, kUniform, kDenseBernoulli, kGdKiller };

inline std::string to_string(AdversaryId a) {
  switch (a) {
    case AdversaryId::kFirst2k: return "first2k";
    case AdversaryId::kUniform: return "uniform";
    case AdversaryId::kDenseBernoulli: return "dense-bernoulli";
    case AdversaryId::kGdKiller: return "gd-killer";
  }
  throw std::invalid_argument("unknown adversary id");
}

// Loss-vector generators for the online game. The three stochastic ones are
// oblivious; the adaptive one inspects the learner's current weights each
// trial and emits a finite sequence (next() yields nullopt once its budget
// of comparator loss has been spent).
class Adversary {
 public:
  // Uniform over the first min(2k, n) coordinate directions.
  static Adversary first2k(int n, int k, std::uint64_t seed) {
    check_dims(n, k);
    Adversary a(AdversaryId::kFirst2k, n, k, seed);
    a.support_ = std::min(2 * k, n);
    return a;
  }

  // Uniform over all n coordinate directions.
  static Adversary uniform(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("adversary requires n >= 1");
    Adversary a(AdversaryId::kUniform, n, 0, seed);
    a.support_ = n;
    return a;
  }

  // Independent fair coin per coordinate.
  static Adversary dense_bernoulli(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("adversary requires n >= 1");
    return Adversary(AdversaryId::kDenseBernoulli, n, 0, seed);
  }

  // Adaptive construction that drains `budget` units of loss from the
  // learner while a fixed m-set comparator pays exactly `budget`. Experts
  // 0..k-1 are sacrificial, expert k is hit once per round, experts k+1..n-1
  // are never hit. `eta` is the learner's own step size; the construction
  // waits for the learner's weight on expert k to recover between hits.
  static Adversary gd_killer(int n, int k, long budget, double eta) {
    check_dims(n, k);
    if (budget < 0) throw std::invalid_argument("adaptive adversary budget must be nonnegative");
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw std::invalid_argument("adaptive adversary requires the learner's positive step size");
    }
    Adversary a(AdversaryId::kGdKiller, n, k, 0);
    a.budget_ = budget;
    a.eta_eff_ = std::min(eta, 1.0);
    const double m = static_cast<double>(n - k);
    a.threshold_ = 1.0 - a.eta_eff_ / (4.0 * m);
    const long cap = static_cast<long>(std::ceil(10.0 * k * m / a.eta_eff_));
    a.spread_cap_ = std::max(1000L, cap);
    a.round_cap_ = std::max(1000L, cap);
    return a;
  }

  AdversaryId id() const { return id_; }
  int dim() const { return n_; }
  // True when the sequence ends on its own (budget spent).
  bool finite() const { return id_ == AdversaryId::kGdKiller; }
  bool adaptive() const { return id_ == AdversaryId::kGdKiller; }

  std::optional<Eigen::VectorXd> next(const WeightVector& learner) {
    if (learner.w.size() != n_) {
      throw std::invalid_argument("learner weight dimension does not match adversary");
    }
    switch (id_) {
      case AdversaryId::kFirst2k:
      case AdversaryId::kUniform: {
        std::uniform_int_distribution<int> pick(0, support_ - 1);
        return basis(pick(rng_));
      }
      case AdversaryId::kDenseBernoulli: {
        std::bernoulli_distribution coin(0.5);
        Eigen::VectorXd l(n_);
        for (int i = 0; i < n_; ++i) l[i] = coin(rng_) ? 1.0 : 0.0;
        return l;
      }
      case AdversaryId::kGdKiller:
        return killer_next(learner);
    }
    throw std::invalid_argument("unknown adversary id");
  }

 private:
  enum class Phase { kSpread, kRounds, kDone };

  Adversary(AdversaryId id, int n, int k, std::uint64_t seed)
      : id_(id), n_(n), k_(k), rng_(seed) {}

  static void check_dims(int n, int k) {
    if (n < 2) throw std::invalid_argument("adversary requires n >= 2");
    if (k < 1 || k > n - 1) throw std::invalid_argument("adversary requires 1 <= k <= n - 1");
  }

  Eigen::VectorXd basis(int i) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
    e[i] = 1.0;
    return e;
  }

  Eigen::VectorXd bad_hit() {
    Eigen::VectorXd e = basis(cursor_);
    cursor_ = (cursor_ + 1) % k_;
    return e;
  }

  std::optional<Eigen::VectorXd> killer_next(const WeightVector& lw) {
    if (phase_ == Phase::kDone) {
      throw SequenceExhausted("adaptive adversary has already spent its budget");
    }
    if (lw.m != n_ - k_) {
      throw std::invalid_argument("adaptive adversary expects a learner tracking n - k directions");
    }
    if (!saw_first_) {
      saw_first_ = true;
      const double u = static_cast<double>(lw.m) / n_;
      if ((lw.w.array() - u).abs().maxCoeff() > 1e-6) {
        std::fprintf(stderr,
                     "warning: adaptive adversary started against non-uniform weights; "
                     "its loss accounting assumes a uniform start\n");
      }
    }
    if (budget_ == 0) {
      phase_ = Phase::kDone;
      return std::nullopt;
    }
    const Eigen::VectorXd& w = lw.w;
    if (phase_ == Phase::kSpread) {
      if (w.segment(k_, n_ - k_).minCoeff() >= threshold_ - 1e-12) {
        phase_ = Phase::kRounds;
      } else {
        if (++spread_emissions_ > spread_cap_) {
          throw NumericFailure(
              "adaptive adversary could not concentrate the learner's weight; "
              "the step size may be too small for the budget");
        }
        return bad_hit();
      }
    }
    if (in_round_) {
      if (w[k_] >= threshold_ - 1e-12) {
        ++rounds_done_;
        in_round_ = false;
      } else {
        if (++round_emissions_ > round_cap_) {
          throw NumericFailure(
              "adaptive adversary stalled waiting for the learner to recover");
        }
        return bad_hit();
      }
    }
    if (rounds_done_ >= budget_) {
      phase_ = Phase::kDone;
      return std::nullopt;
    }
    in_round_ = true;
    round_emissions_ = 0;
    return basis(k_);
  }

  AdversaryId id_;
  int n_;
  int k_;
  std::mt19937_64 rng_;
  int support_ = 0;

  Phase phase_ = Phase::kSpread;
  long budget_ = 0;
  long rounds_done_ = 0;
  long spread_emissions_ = 0;
  long round_emissions_ = 0;
  long spread_cap_ = 0;
  long round_cap_ = 0;
  int cursor_ = 0;
  double eta_eff_ = 0.0;
  double threshold_ = 0.0;
  bool in_round_ = false;
  bool saw_first_ = false;
};

}  // namespace opca
