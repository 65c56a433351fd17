#include "entbridge/heat.hpp"

#include <Eigen/Eigenvalues>

#include <queue>

namespace entbridge {

namespace {

using Array = Eigen::ArrayXd;

int compute_hop_diameter(const FiniteSpace& s) {
  const int n = s.size();
  int diam = 0;
  std::vector<int> dist(n);
  for (int src = 0; src < n; ++src) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<int> q;
    q.push(src);
    dist[src] = 0;
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      for (const auto& e : s.neighbors()[x])
        if (dist[e.index] < 0) {
          dist[e.index] = dist[x] + 1;
          diam = std::max(diam, dist[e.index]);
          q.push(e.index);
        }
    }
  }
  return diam;
}

// Elementwise log(e^a + e^b) on arrays that may hold -inf.
Array log_add_exp(const Array& a, const Array& b) {
  const Array hi = a.max(b);
  const Array lo = a.min(b);
  Array out = hi + (lo - hi).exp().log1p();
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (hi[i] == kNegInf) out[i] = kNegInf;
  return out;
}

}  // namespace

HeatSemigroup::HeatSemigroup(FiniteSpace space) : space_(std::move(space)) {
  const int n = space_.size();
  if (n > kMaxPoints)
    throw std::invalid_argument("HeatSemigroup: at most " + std::to_string(kMaxPoints) +
                                " points are supported");
  const Vector sq = space_.measure().array().sqrt().matrix();
  Matrix S = sq.asDiagonal() * space_.generator() * sq.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success) throw std::runtime_error("HeatSemigroup: eigensolver failed");
  eigenvalues_ = es.eigenvalues().reverse();
  Matrix U = es.eigenvectors().rowwise().reverse();

  // The top mode is the constant function; pin it exactly.
  const double total = space_.measure().sum();
  eigenvalues_[0] = 0.0;
  U.col(0) = sq / std::sqrt(total);
  eigenvectors_ = sq.cwiseInverse().asDiagonal() * U;
  hop_diameter_ = compute_hop_diameter(space_);
}

double HeatSemigroup::reconstruction_error() const {
  const Matrix rec = eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose() *
                     space_.measure().asDiagonal();
  const double scale = std::max(1e-300, space_.generator().cwiseAbs().maxCoeff());
  return (rec - space_.generator()).cwiseAbs().maxCoeff() / scale;
}

Vector HeatSemigroup::apply(double t, const Vector& v) const {
  if (!(t >= 0.0)) throw std::invalid_argument("heat_apply: negative time");
  if (v.size() != size()) throw std::invalid_argument("heat_apply: length mismatch");
  if (t == 0.0) return v;
  const Vector coeff = eigenvectors_.transpose() * space_.measure().cwiseProduct(v);
  const Vector decay = (eigenvalues_.array() * t).exp().matrix();
  return eigenvectors_ * decay.cwiseProduct(coeff);
}

Matrix HeatSemigroup::kernel(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: time must be positive");
  const Vector decay = (eigenvalues_.array() * t).exp().matrix();
  Matrix r = eigenvectors_ * decay.asDiagonal() * eigenvectors_.transpose();
  return 0.5 * (r + r.transpose());
}

Matrix log_matmul(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.rows()) throw std::invalid_argument("log_matmul: shape mismatch");
  Matrix C(A.rows(), B.cols());
  Eigen::ArrayXXd T(B.rows(), B.cols());
  for (Eigen::Index x = 0; x < A.rows(); ++x) {
    T = B.array().colwise() + A.row(x).transpose().array();
    const Eigen::ArrayXd mx = T.colwise().maxCoeff().transpose();
    for (Eigen::Index y = 0; y < B.cols(); ++y) {
      if (!std::isfinite(mx[y])) {
        C(x, y) = mx[y];
        continue;
      }
      C(x, y) = mx[y] + std::log((T.col(y) - mx[y]).exp().sum());
    }
  }
  return C;
}

Matrix HeatSemigroup::log_kernel(double t) const {
  if (!(t >= 0.0)) throw std::invalid_argument("log_kernel: negative time");
  const int n = size();
  const Vector& logm = space_.log_measure();
  if (t == 0.0) {
    Matrix out = Matrix::Constant(n, n, kNegInf);
    for (int i = 0; i < n; ++i) out(i, i) = -logm[i];
    return out;
  }
  const Matrix& L = space_.generator();
  const double q = (-L.diagonal()).maxCoeff();
  if (!(q > 0.0)) throw std::runtime_error("log_kernel: generator has no positive rates");

  // e^{t0 L} = sum_k Poisson(q t0; k) P^k with P = I + L/q >= 0, q t0 <= 1.
  int squarings = 0;
  double t0 = t;
  while (q * t0 > 1.0) {
    t0 *= 0.5;
    ++squarings;
  }
  const double a = q * t0;
  const int terms = hop_diameter_ + 60;

  // Column stencils of P: (P^{k-1} P)(:,y) = sum_z P^{k-1}(:,z) P(z,y).
  std::vector<std::vector<std::pair<int, double>>> stencil(n);
  for (int y = 0; y < n; ++y) {
    const double diag = 1.0 + L(y, y) / q;
    if (diag > 0.0) stencil[y].push_back({y, std::log(diag)});
    for (const auto& e : space_.neighbors()[y]) {
      const double pzy = L(e.index, y) / q;
      if (pzy > 0.0) stencil[y].push_back({e.index, std::log(pzy)});
    }
  }

  Eigen::ArrayXXd power = Eigen::ArrayXXd::Constant(n, n, kNegInf);
  for (int i = 0; i < n; ++i) power(i, i) = 0.0;
  Eigen::ArrayXXd acc = power - a;
  Eigen::ArrayXXd next(n, n);
  Array col(n), mx(n);
  for (int k = 1; k <= terms; ++k) {
    for (int y = 0; y < n; ++y) {
      mx.setConstant(kNegInf);
      for (const auto& [z, lw] : stencil[y]) mx = mx.max(power.col(z) + lw);
      col.setZero();
      for (const auto& [z, lw] : stencil[y]) col += (power.col(z) + lw - mx).exp();
      for (int x = 0; x < n; ++x) next(x, y) = mx[x] == kNegInf ? kNegInf : mx[x] + std::log(col[x]);
    }
    power.swap(next);
    const double logw = -a + k * std::log(a) - std::lgamma(k + 1.0);
    for (int y = 0; y < n; ++y) acc.col(y) = log_add_exp(acc.col(y), power.col(y) + logw);
  }

  Matrix logK = acc.matrix();
  for (int s = 0; s < squarings; ++s) logK = log_matmul(logK, logK);

  // Transition matrix -> density against m, then symmetrize.
  Matrix logr = logK.rowwise() - logm.transpose();
  return 0.5 * (logr + logr.transpose());
}

Vector HeatSemigroup::log_apply(const Matrix& log_kernel, const Vector& log_v) const {
  const int n = size();
  if (log_v.size() != n || log_kernel.rows() != n || log_kernel.cols() != n)
    throw std::invalid_argument("log_apply: shape mismatch");
  const Eigen::RowVectorXd w = (log_v + space_.log_measure()).transpose();
  Vector out(n);
  for (int x = 0; x < n; ++x) out[x] = log_sum_exp(log_kernel.row(x) + w);
  return out;
}

Vector HeatSemigroup::log_apply(double t, const Vector& log_v) const {
  if (!(t >= 0.0)) throw std::invalid_argument("log_apply: negative time");
  const int n = size();
  if (log_v.size() != n) throw std::invalid_argument("log_apply: length mismatch");
  if (t == 0.0) return log_v;
  const double vmax = log_v.maxCoeff();
  if (vmax == kNegInf) return log_v;
  if (!std::isfinite(vmax)) throw std::invalid_argument("log_apply: log_v must be < +inf");

  // Uniformization applied to the vector: e^{tL} v = sum_k Poisson(qt; k) P^k v.
  const Matrix& L = space_.generator();
  const double q = (-L.diagonal()).maxCoeff();
  if (!(q > 0.0)) throw std::runtime_error("log_apply: generator has no positive rates");
  const double a = q * t;
  std::vector<std::vector<std::pair<int, double>>> stencil(n);
  for (int x = 0; x < n; ++x) {
    const double diag = 1.0 + L(x, x) / q;
    if (diag > 0.0) stencil[x].push_back({x, std::log(diag)});
    for (const auto& e : space_.neighbors()[x]) stencil[x].push_back({e.index, std::log(e.rate / q)});
  }

  Array cur = log_v.array();
  Array next(n);
  Array acc = cur - a;
  const double loga = std::log(a);
  // P is row-stochastic, so term k is bounded by its weight times max v; stop
  // once that bound is far below the smallest accumulated entry.
  const long cap = static_cast<long>(a + 60.0 * std::sqrt(a + 1.0)) + hop_diameter_ + 200;
  for (long k = 1; k <= cap; ++k) {
    for (int x = 0; x < n; ++x) {
      double mx = kNegInf;
      for (const auto& [y, lw] : stencil[x]) mx = std::max(mx, cur[y] + lw);
      if (mx == kNegInf) {
        next[x] = kNegInf;
        continue;
      }
      double sum = 0.0;
      for (const auto& [y, lw] : stencil[x]) sum += std::exp(cur[y] + lw - mx);
      next[x] = mx + std::log(sum);
    }
    cur.swap(next);
    const double logw = -a + k * loga - std::lgamma(k + 1.0);
    acc = log_add_exp(acc, cur + logw);
    if (k > a && k >= hop_diameter_ && logw + vmax < acc.minCoeff() - 40.0) break;
  }
  return acc.matrix();
}

}  // namespace entbridge
