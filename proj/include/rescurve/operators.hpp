#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>

#include "rescurve/types.hpp"

namespace rescurve {

template <class Scalar>
struct PowerIterationResult {
  Scalar estimate{0};
  int iterations{0};
  bool converged{false};
};

/// Largest singular value of a dense matrix via power iteration on A^T A.
/// Starts from the normalized all-ones vector so repeated runs are identical.
template <class Scalar>
PowerIterationResult<Scalar> spectral_norm_power_iteration(const MatrixX<Scalar>& a,
                                                           int max_iterations = 500,
                                                           Scalar rel_tol = Scalar(1e-8)) {
  PowerIterationResult<Scalar> out;
  const Index n = a.cols();
  VectorX<Scalar> v = VectorX<Scalar>::Ones(n) / std::sqrt(Scalar(n));
  Scalar prev = 0;
  for (int pass = 0; pass < 2; ++pass) {
    for (int k = 0; k < max_iterations; ++k) {
      VectorX<Scalar> w = a.transpose() * (a * v);
      const Scalar rayleigh = v.dot(w);
      const Scalar est = rayleigh > 0 ? std::sqrt(rayleigh) : Scalar(0);
      out.iterations++;
      if (est > 0 && std::abs(est - prev) <= rel_tol * est) {
        out.estimate = est;
        out.converged = true;
        return out;
      }
      const Scalar wn = w.norm();
      if (wn == 0) break;  // start vector lies in the kernel of A^T A
      v = w / wn;
      prev = est;
    }
    if (prev > 0) break;
    // all-ones start hit the kernel; retry once from a fixed graded vector
    for (Index i = 0; i < n; ++i) v[i] = Scalar(1) + Scalar(i) / Scalar(n);
    v /= v.norm();
    prev = 0;
  }
  out.estimate = prev;
  return out;
}

/// Multiplication by a fixed set of singular values: (Ax)_i = sigma_i x_i.
/// Self-adjoint by construction. Immutable after construction.
template <class Scalar>
class DiagonalOperator {
 public:
  explicit DiagonalOperator(VectorX<Scalar> singular_values) : sigma_(std::move(singular_values)) {
    if (sigma_.size() == 0) throw std::invalid_argument("DiagonalOperator: empty singular value list");
    for (Index i = 0; i < sigma_.size(); ++i) {
      if (!(sigma_[i] > Scalar(0)))
        throw std::invalid_argument("DiagonalOperator: singular values must be strictly positive");
      if (i > 0 && sigma_[i] > sigma_[i - 1])
        throw std::invalid_argument("DiagonalOperator: singular values must be nonincreasing");
    }
  }

  Index rows() const { return sigma_.size(); }
  Index cols() const { return sigma_.size(); }
  const VectorX<Scalar>& singular_values() const { return sigma_; }

  VectorX<Scalar> apply(const VectorX<Scalar>& x) const {
    if (x.size() != cols()) throw std::invalid_argument("DiagonalOperator::apply: dimension mismatch");
    return sigma_.cwiseProduct(x);
  }

  VectorX<Scalar> apply_adjoint(const VectorX<Scalar>& y) const {
    if (y.size() != rows()) throw std::invalid_argument("DiagonalOperator::apply_adjoint: dimension mismatch");
    return sigma_.cwiseProduct(y);
  }

  /// Rescales so sigma_1 == 1 exactly.
  DiagonalOperator normalized() const { return DiagonalOperator(sigma_ / sigma_[0]); }

 private:
  VectorX<Scalar> sigma_;
};

/// General m x n matrix with the transpose as adjoint. The spectral norm
/// estimate is computed once at construction. Immutable after construction.
template <class Scalar>
class DenseOperator {
 public:
  explicit DenseOperator(MatrixX<Scalar> matrix) : a_(std::move(matrix)) {
    if (a_.size() == 0) throw std::invalid_argument("DenseOperator: empty matrix");
    const auto pr = spectral_norm_power_iteration(a_);
    norm_estimate_ = pr.estimate;
    if (!(norm_estimate_ > Scalar(0))) throw std::invalid_argument("DenseOperator: zero operator");
  }

  Index rows() const { return a_.rows(); }
  Index cols() const { return a_.cols(); }
  const MatrixX<Scalar>& matrix() const { return a_; }
  Scalar norm_estimate() const { return norm_estimate_; }

  VectorX<Scalar> apply(const VectorX<Scalar>& x) const {
    if (x.size() != cols()) throw std::invalid_argument("DenseOperator::apply: dimension mismatch");
    return a_ * x;
  }

  VectorX<Scalar> apply_adjoint(const VectorX<Scalar>& y) const {
    if (y.size() != rows()) throw std::invalid_argument("DenseOperator::apply_adjoint: dimension mismatch");
    return a_.transpose() * y;
  }

  /// Rescales by a slightly inflated norm estimate so the scaled operator
  /// norm stays in [1 - 1e-6, 1].
  DenseOperator normalized() const {
    const Scalar scale = norm_estimate_ * (Scalar(1) + Scalar(1e-7));
    return DenseOperator(MatrixX<Scalar>(a_ / scale));
  }

 private:
  MatrixX<Scalar> a_;
  Scalar norm_estimate_;
};

enum class OperatorKind { diagonal, dense };

/// Value-semantic handle over the two supported operator realizations.
template <class Scalar>
class Operator {
 public:
  Operator(DiagonalOperator<Scalar> op) : op_(std::move(op)) {}  // NOLINT: implicit by design
  Operator(DenseOperator<Scalar> op) : op_(std::move(op)) {}     // NOLINT

  OperatorKind kind() const {
    return std::holds_alternative<DiagonalOperator<Scalar>>(op_) ? OperatorKind::diagonal
                                                                 : OperatorKind::dense;
  }
  bool is_diagonal() const { return kind() == OperatorKind::diagonal; }

  Index rows() const {
    return std::visit([](const auto& op) { return op.rows(); }, op_);
  }
  Index cols() const {
    return std::visit([](const auto& op) { return op.cols(); }, op_);
  }

  VectorX<Scalar> apply(const VectorX<Scalar>& x) const {
    return std::visit([&](const auto& op) { return op.apply(x); }, op_);
  }
  VectorX<Scalar> apply_adjoint(const VectorX<Scalar>& y) const {
    return std::visit([&](const auto& op) { return op.apply_adjoint(y); }, op_);
  }

  Operator normalized() const {
    return std::visit([](const auto& op) { return Operator(op.normalized()); }, op_);
  }

  const DiagonalOperator<Scalar>& diagonal() const {
    if (!is_diagonal()) throw std::logic_error("Operator: not a diagonal operator");
    return std::get<DiagonalOperator<Scalar>>(op_);
  }
  const DenseOperator<Scalar>& dense() const {
    if (is_diagonal()) throw std::logic_error("Operator: not a dense operator");
    return std::get<DenseOperator<Scalar>>(op_);
  }

 private:
  std::variant<DiagonalOperator<Scalar>, DenseOperator<Scalar>> op_;
};

}  // namespace rescurve
