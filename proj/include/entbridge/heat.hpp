#pragma once

#include "entbridge/space.hpp"

namespace entbridge {

/// Heat semigroup e^{tL} of a finite space.
///
/// Linear evaluations (apply, kernel) use the dense eigendecomposition of the
/// symmetrized generator M^{1/2} L M^{-1/2}. Log-domain evaluations
/// (log_kernel, log_apply) use uniformization followed by log-domain squaring:
/// every intermediate quantity is a sum of nonnegative terms, so far-field
/// kernel entries keep full relative accuracy even when they sit hundreds of
/// orders of magnitude below the diagonal.
class HeatSemigroup {
 public:
  static constexpr int kMaxPoints = 4096;

  explicit HeatSemigroup(FiniteSpace space);

  const FiniteSpace& space() const { return space_; }
  int size() const { return space_.size(); }

  /// Nonincreasing, eigenvalues()[0] == 0.
  const Vector& eigenvalues() const { return eigenvalues_; }
  /// m-orthonormal columns; column 0 is constant.
  const Matrix& eigenvectors() const { return eigenvectors_; }
  /// max |L - V diag(lambda) V^T M| relative to max |L|.
  double reconstruction_error() const;

  /// e^{tL} v.
  Vector apply(double t, const Vector& v) const;
  /// r_t(x,y) with (e^{tL} f)(x) = sum_y r_t(x,y) f(y) m(y).
  Matrix kernel(double t) const;

  /// log r_t(x,y); t = 0 gives the log of the identity density (-inf off the diagonal).
  Matrix log_kernel(double t) const;
  /// log (e^{tL} e^{log_v}) by uniformization on the vector itself; no kernel is formed.
  Vector log_apply(double t, const Vector& log_v) const;
  /// log (sum_y r(x,y) e^{log_v(y)} m(y)) for a precomputed log kernel.
  Vector log_apply(const Matrix& log_kernel, const Vector& log_v) const;

  /// Largest hop distance in the graph of positive rates.
  int hop_diameter() const { return hop_diameter_; }

 private:
  FiniteSpace space_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  int hop_diameter_ = 0;
};

/// C(x,y) = log sum_z exp(A(x,z) + B(z,y)).
Matrix log_matmul(const Matrix& A, const Matrix& B);

}  // namespace entbridge
