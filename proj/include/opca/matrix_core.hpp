#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "opca/capped_simplex.hpp"
#include "opca/errors.hpp"

namespace opca {

struct EighResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal
};

// Symmetric eigendecomposition with a deterministic orientation: eigenvalues
// ascending, and each eigenvector flipped so its largest-magnitude entry is
// positive (first such entry on ties). Degenerate eigenspaces still admit an
// arbitrary rotation, so only reconstructions are contract, not the columns.
inline EighResult eigh(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw std::invalid_argument("eigh: matrix must be square and non-empty");
  if (!a.allFinite()) throw std::invalid_argument("eigh: non-finite entry");
  if ((a - a.transpose()).lpNorm<Eigen::Infinity>() > 1e-8)
    throw std::invalid_argument("eigh: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (a + a.transpose()));
  if (solver.info() != Eigen::Success)
    throw NumericFailure("eigh: eigendecomposition did not converge");

  EighResult out{solver.eigenvalues(), solver.eigenvectors()};
  const int n = static_cast<int>(a.rows());
  for (int j = 0; j < n; ++j) {
    int arg = 0;
    double best = std::abs(out.eigenvectors(0, j));
    for (int i = 1; i < n; ++i) {
      const double mag = std::abs(out.eigenvectors(i, j));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (out.eigenvectors(arg, j) < 0.0) out.eigenvectors.col(j) *= -1.0;
  }
  return out;
}

// One trial's loss matrix: either a sparse dyad x x^T built from a unit
// vector, or a dense symmetric matrix with eigenvalues in [0,1].
class Instance {
 public:
  enum class Kind { kSparseDyad, kDensePsd };

  static Instance sparse_dyad(Eigen::VectorXd x) {
    if (x.size() == 0)
      throw std::invalid_argument("Instance: empty direction vector");
    if (!x.allFinite())
      throw std::invalid_argument("Instance: non-finite direction vector");
    if (std::abs(x.norm() - 1.0) > 1e-10)
      throw std::invalid_argument("Instance: direction vector must be unit");
    return Instance(Kind::kSparseDyad, std::move(x), Eigen::MatrixXd());
  }

  static Instance dense_psd(Eigen::MatrixXd x) {
    if (x.rows() != x.cols() || x.rows() == 0)
      throw std::invalid_argument("Instance: dense matrix must be square");
    if (!x.allFinite())
      throw std::invalid_argument("Instance: non-finite dense matrix");
    if ((x - x.transpose()).lpNorm<Eigen::Infinity>() > 1e-10)
      throw std::invalid_argument("Instance: dense matrix must be symmetric");
    const Eigen::VectorXd evs =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x).eigenvalues();
    if (evs.minCoeff() < -1e-9 || evs.maxCoeff() > 1.0 + 1e-9)
      throw std::invalid_argument(
          "Instance: dense matrix eigenvalues must lie in [0,1]");
    return Instance(Kind::kDensePsd, Eigen::VectorXd(), std::move(x));
  }

  Kind kind() const { return kind_; }
  int dim() const {
    return kind_ == Kind::kSparseDyad ? static_cast<int>(x_.size())
                                      : static_cast<int>(dense_.rows());
  }
  const Eigen::VectorXd& direction() const { return x_; }

  Eigen::MatrixXd matrix() const {
    if (kind_ == Kind::kSparseDyad) return x_ * x_.transpose();
    return dense_;
  }

  double trace() const {
    if (kind_ == Kind::kSparseDyad) return x_.squaredNorm();
    return dense_.trace();
  }

 private:
  Instance(Kind kind, Eigen::VectorXd x, Eigen::MatrixXd dense)
      : kind_(kind), x_(std::move(x)), dense_(std::move(dense)) {}

  Kind kind_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd dense_;
};

// Generalized density matrix: symmetric with eigenvalues in [0,1] summing to
// an integer target. Stored in factored form (orthonormal basis, spectrum);
// the spectrum is a capped-simplex point, so the matrix is a mixture of
// rank-m projection matrices.
struct GenDensityMatrix {
  Eigen::MatrixXd basis;
  WeightVector eigenvalues;

  GenDensityMatrix(Eigen::MatrixXd basis_in, WeightVector eigenvalues_in)
      : basis(std::move(basis_in)), eigenvalues(std::move(eigenvalues_in)) {
    const int n = eigenvalues.size();
    if (basis.rows() != n || basis.cols() != n)
      throw std::invalid_argument("GenDensityMatrix: basis/spectrum mismatch");
    const double ortho_err =
        (basis.transpose() * basis - Eigen::MatrixXd::Identity(n, n))
            .lpNorm<Eigen::Infinity>();
    if (ortho_err > 1e-8)
      throw std::invalid_argument("GenDensityMatrix: basis not orthonormal");
  }

  int dim() const { return eigenvalues.size(); }
  int trace_target() const { return eigenvalues.m; }

  Eigen::MatrixXd dense() const {
    return basis * eigenvalues.w.asDiagonal() * basis.transpose();
  }

  static GenDensityMatrix uniform(int n, int trace_target) {
    return GenDensityMatrix(Eigen::MatrixXd::Identity(n, n),
                            WeightVector::uniform(n, trace_target));
  }

  static GenDensityMatrix from_matrix(const Eigen::MatrixXd& a,
                                      int trace_target) {
    EighResult ed = eigh(a);
    return GenDensityMatrix(
        std::move(ed.eigenvectors),
        WeightVector(std::move(ed.eigenvalues), trace_target));
  }
};

// Compression loss of a projection matrix on a unit vector:
// tr((I - P) x x^T) = |x - P x|^2.
inline double compression_loss(const Eigen::MatrixXd& p,
                               const Eigen::VectorXd& x) {
  const int n = static_cast<int>(p.rows());
  if (p.cols() != n || x.size() != n)
    throw std::invalid_argument("compression_loss: dimension mismatch");
  if ((p - p.transpose()).lpNorm<Eigen::Infinity>() > 1e-8)
    throw std::invalid_argument("compression_loss: matrix not symmetric");
  if ((p * p - p).lpNorm<Eigen::Infinity>() > 1e-8)
    throw std::invalid_argument("compression_loss: matrix not idempotent");
  if (std::abs(x.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("compression_loss: vector must be unit");
  return x.squaredNorm() - x.dot(p * x);
}

// tr(W X) for a generalized density matrix and an instance.
inline double expected_loss(const GenDensityMatrix& w, const Instance& x) {
  if (w.dim() != x.dim())
    throw std::invalid_argument("expected_loss: dimension mismatch");
  if (x.kind() == Instance::Kind::kSparseDyad) {
    const Eigen::VectorXd proj = w.basis.transpose() * x.direction();
    return w.eigenvalues.w.dot(proj.cwiseProduct(proj));
  }
  double total = 0.0;
  for (int i = 0; i < w.dim(); ++i) {
    const Eigen::VectorXd u = w.basis.col(i);
    total += w.eigenvalues.w[i] * u.dot(x.matrix() * u);
  }
  return total;
}

// Loss of the best fixed rank-k subspace in hindsight: the sum of the
// m = n - k smallest eigenvalues of the accumulated instance matrix.
inline double comparator_loss(const Eigen::MatrixXd& c, int k) {
  const int n = static_cast<int>(c.rows());
  if (k < 1 || k >= n)
    throw std::invalid_argument("comparator_loss: need 1 <= k <= n-1");
  const EighResult ed = eigh(c);
  const int m = n - k;
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += ed.eigenvalues[i];
  return total;
}

// Draws a rank-m projection matrix whose expectation is w.dense(): samples an
// m-subset of eigenvectors from the spectrum's corner decomposition.
inline Eigen::MatrixXd sample_projection(const GenDensityMatrix& w,
                                         std::mt19937_64& rng) {
  const double tr = w.eigenvalues.w.sum();
  if (std::abs(tr - w.trace_target()) > 1e-6)
    throw std::invalid_argument("sample_projection: trace is not integral");
  const std::vector<int> subset = sample_mset(w.eigenvalues, rng);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(w.dim(), w.dim());
  for (int idx : subset) {
    p.noalias() += w.basis.col(idx) * w.basis.col(idx).transpose();
  }
  return p;
}

// Running sum of instance matrices over a game.
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(int n)
      : c_(Eigen::MatrixXd::Zero(n, n)), count_(0) {
    if (n < 1)
      throw std::invalid_argument("CovarianceAccumulator: bad dimension");
  }

  void add(const Instance& x) {
    if (x.dim() != c_.rows())
      throw std::invalid_argument("CovarianceAccumulator: dimension mismatch");
    if (x.kind() == Instance::Kind::kSparseDyad)
      c_.noalias() += x.direction() * x.direction().transpose();
    else
      c_ += x.matrix();
    ++count_;
  }

  const Eigen::MatrixXd& matrix() const { return c_; }
  long count() const { return count_; }

 private:
  Eigen::MatrixXd c_;
  long count_;
};

}  // namespace opca
