#include "entbridge/bridge.hpp"

namespace entbridge {

namespace {

void check_problem(const HeatSemigroup& heat, const BridgeProblem& p) {
  if (!std::isfinite(p.epsilon) || p.epsilon < kEpsilonFloor)
    throw InvalidEpsilon("epsilon must be >= " + std::to_string(kEpsilonFloor) + ", got " +
                         std::to_string(p.epsilon));
  require_probability_density(heat.space(), p.rho0, "rho0");
  require_probability_density(heat.space(), p.rho1, "rho1");
}

Matrix gather(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

// out(i) = log sum_j exp(K(i,j) + w(j))
Vector row_lse(const Matrix& K, const Vector& w) {
  Eigen::ArrayXXd T = K.array().rowwise() + w.transpose().array();
  const Eigen::ArrayXd mx = T.rowwise().maxCoeff();
  return (mx + (T.colwise() - mx).exp().rowwise().sum().log()).matrix();
}

// out(j) = log sum_i exp(K(i,j) + w(i))
Vector col_lse(const Matrix& K, const Vector& w) {
  Eigen::ArrayXXd T = K.array().colwise() + w.array();
  const Eigen::ArrayXd mx = T.colwise().maxCoeff().transpose();
  return (mx + (T.rowwise() - mx.transpose()).exp().colwise().sum().transpose().log()).matrix();
}

}  // namespace

BridgeSolution solve_bridge(const HeatSemigroup& heat, const BridgeProblem& problem,
                            const SinkhornOptions& options) {
  check_problem(heat, problem);
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_bridge: tol must be positive");
  const FiniteSpace& s = heat.space();
  const double t = 0.5 * problem.epsilon;
  auto log_kernel = std::make_shared<const Matrix>(heat.log_kernel(t));

  const auto s0 = problem.rho0.support();
  const auto s1 = problem.rho1.support();
  const Matrix K = gather(*log_kernel, s0, s1);
  if (!K.allFinite())
    throw std::runtime_error("solve_bridge: heat kernel is not positive on supp(rho0) x supp(rho1)");

  const Vector logm0 = gather(s.log_measure(), s0);
  const Vector logm1 = gather(s.log_measure(), s1);
  const Vector rho0 = gather(problem.rho0.values(), s0);
  const Vector rho1 = gather(problem.rho1.values(), s1);
  const Vector log_rho0 = rho0.array().log().matrix();
  const Vector log_rho1 = rho1.array().log().matrix();
  const Vector m0 = gather(s.measure(), s0);
  const Vector m1 = gather(s.measure(), s1);

  Vector lf = Vector::Zero(s0.size());
  Vector lg = Vector::Zero(s1.size());
  Vector lhf(s1.size());
  double residual = kInf;
  long it = 0;
  for (;; ++it) {
    const Vector lhg = row_lse(K, lg + logm1);
    if (it > 0) {
      const double r0 =
          ((lf + lhg).array().exp() - rho0.array()).abs().matrix().dot(m0);
      const double r1 =
          ((lg + lhf).array().exp() - rho1.array()).abs().matrix().dot(m1);
      residual = r0 + r1;
      if (residual <= options.tol) break;
      if (it >= options.max_iter)
        throw NoConvergence("solve_bridge: Sinkhorn iteration cap reached", residual, it);
    }
    lf = log_rho0 - lhg;
    lhf = col_lse(K, lf + logm0);
    lg = log_rho1 - lhf;
  }

  BridgeSolution sol;
  sol.log_f = Vector::Constant(s.size(), kNegInf);
  sol.log_g = Vector::Constant(s.size(), kNegInf);
  for (std::size_t i = 0; i < s0.size(); ++i) sol.log_f[s0[i]] = lf[i];
  for (std::size_t j = 0; j < s1.size(); ++j) sol.log_g[s1[j]] = lg[j];
  sol.epsilon = problem.epsilon;
  sol.kernel_time = t;
  sol.marginal_residual = residual;
  sol.iterations = it;
  sol.log_kernel = std::move(log_kernel);
  return sol;
}

BridgeSolution rescale_bridge(const BridgeSolution& sol, double log_scale) {
  BridgeSolution out = sol;
  out.log_f.array() += log_scale;
  out.log_g.array() -= log_scale;
  return out;
}

double normalization_residual(const HeatSemigroup& heat, const BridgeSolution& sol,
                              const Density& rho1) {
  const Vector lhf = heat.log_apply(*sol.log_kernel, sol.log_f);
  const FiniteSpace& s = heat.space();
  double acc = 0.0;
  for (int y = 0; y < s.size(); ++y)
    if (rho1[y] > 0.0) acc += lhf[y] * rho1[y] * s.measure()[y];
  return acc;
}

BridgeSolution normalize_bridge(const HeatSemigroup& heat, const BridgeSolution& sol,
                                const Density& rho1) {
  const double mass = rho1.mass(heat.space());
  return rescale_bridge(sol, -normalization_residual(heat, sol, rho1) / mass);
}

Matrix log_reference_coupling(const FiniteSpace& s, const Matrix& log_kernel) {
  const Vector& lm = s.log_measure();
  Matrix out = log_kernel.colwise() + lm;
  out.rowwise() += lm.transpose();
  return out;
}

Matrix log_product_coupling(const FiniteSpace& s, const Density& rho0, const Density& rho1) {
  const Vector a = rho0.log_values() + s.log_measure();
  const Vector b = rho1.log_values() + s.log_measure();
  Matrix out(s.size(), s.size());
  for (int x = 0; x < s.size(); ++x)
    for (int y = 0; y < s.size(); ++y) out(x, y) = a[x] + b[y];
  return out;
}

Coupling entropic_coupling(const FiniteSpace& s, const BridgeSolution& sol) {
  const int n = s.size();
  const Matrix logR = log_reference_coupling(s, *sol.log_kernel);
  Coupling c{Matrix::Zero(n, n)};
  for (int x = 0; x < n; ++x) {
    if (sol.log_f[x] == kNegInf) continue;
    for (int y = 0; y < n; ++y) {
      if (sol.log_g[y] == kNegInf) continue;
      c.plan(x, y) = std::exp((sol.log_f[x] + sol.log_g[y]) + logR(x, y));
    }
  }
  return c;
}

double relative_entropy(const FiniteSpace& s, const Density& rho) {
  if (rho.size() != s.size()) throw std::invalid_argument("relative_entropy: length mismatch");
  double acc = 0.0;
  for (int i = 0; i < s.size(); ++i)
    if (rho[i] > 0.0) acc += rho[i] * std::log(rho[i]) * s.measure()[i];
  return acc;
}

double relative_entropy(const Coupling& gamma, const Matrix& log_reference) {
  if (gamma.plan.rows() != log_reference.rows() || gamma.plan.cols() != log_reference.cols())
    throw std::invalid_argument("relative_entropy: shape mismatch");
  double acc = 0.0;
  for (Eigen::Index x = 0; x < gamma.plan.rows(); ++x)
    for (Eigen::Index y = 0; y < gamma.plan.cols(); ++y) {
      const double g = gamma.plan(x, y);
      if (g <= 0.0) continue;
      if (log_reference(x, y) == kNegInf) return kInf;
      acc += g * (std::log(g) - log_reference(x, y));
    }
  return acc;
}

double coupling_marginal_error(const FiniteSpace& s, const Coupling& gamma, const Density& rho0,
                               const Density& rho1) {
  const Vector a = rho0.values().cwiseProduct(s.measure());
  const Vector b = rho1.values().cwiseProduct(s.measure());
  return (gamma.plan.rowwise().sum() - a).cwiseAbs().sum() +
         (gamma.plan.colwise().sum().transpose() - b).cwiseAbs().sum();
}

double separability_residual(const Coupling& gamma, const Matrix& log_reference,
                             const Density& rho0, const Density& rho1) {
  const auto s0 = rho0.support();
  const auto s1 = rho1.support();
  Matrix a(s0.size(), s1.size());
  for (std::size_t i = 0; i < s0.size(); ++i)
    for (std::size_t j = 0; j < s1.size(); ++j) {
      const double g = gamma.plan(s0[i], s1[j]);
      if (!(g > 0.0)) return kInf;
      a(i, j) = std::log(g) - log_reference(s0[i], s1[j]);
    }
  // Least-squares additive fit on a full grid is the double-centering.
  const Vector rmean = a.rowwise().mean();
  const Eigen::RowVectorXd cmean = a.colwise().mean();
  const double grand = a.mean();
  Matrix res = a;
  res.colwise() -= rmean;
  res.rowwise() -= cmean;
  res.array() += grand;
  return res.cwiseAbs().maxCoeff();
}

Coupling entropy_oracle_min(const HeatSemigroup& heat, const BridgeProblem& problem,
                            const OracleOptions& options) {
  check_problem(heat, problem);
  const FiniteSpace& s = heat.space();
  const int n = s.size();
  if (n > 16) throw std::invalid_argument("entropy_oracle_min: oracle is limited to n <= 16");
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw std::invalid_argument("entropy_oracle_min: damping must lie in (0, 1]");

  Matrix lg = log_reference_coupling(s, heat.log_kernel(0.5 * problem.epsilon));
  const Vector la = problem.rho0.log_values() + s.log_measure();
  const Vector lb = problem.rho1.log_values() + s.log_measure();
  for (int x = 0; x < n; ++x)
    if (la[x] == kNegInf) lg.row(x).setConstant(kNegInf);
  for (int y = 0; y < n; ++y)
    if (lb[y] == kNegInf) lg.col(y).setConstant(kNegInf);

  const double w = options.damping;
  for (long it = 0; it < options.max_iter; ++it) {
    double step = 0.0;
    for (int y = 0; y < n; ++y) {
      if (lb[y] == kNegInf) continue;
      const double d = w * (lb[y] - log_sum_exp(lg.col(y)));
      lg.col(y).array() += d;
      step = std::max(step, std::abs(d));
    }
    for (int x = 0; x < n; ++x) {
      if (la[x] == kNegInf) continue;
      const double d = w * (la[x] - log_sum_exp(lg.row(x)));
      lg.row(x).array() += d;
      step = std::max(step, std::abs(d));
    }
    if (step < options.step_tol) return Coupling{lg.array().exp().matrix()};
  }
  throw NoConvergence("entropy_oracle_min: projection cap reached", 0.0, options.max_iter);
}

}  // namespace entbridge
