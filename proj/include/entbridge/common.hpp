#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace entbridge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Raised when an iterative solver stops at its iteration cap.
class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, double residual, long iterations)
      : std::runtime_error(what + " (residual " + std::to_string(residual) +
                           " after " + std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const { return residual_; }
  long iterations() const { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

/// log(sum_i exp(x_i)); returns -inf for an empty or all -inf input.
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  if (x.size() == 0) return kNegInf;
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((x.derived().array() - mx).exp().sum());
}

/// Elementwise log(exp(a) + exp(b)) tolerant of -inf on either side.
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = a > b ? a : b;
  return mx + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace entbridge
