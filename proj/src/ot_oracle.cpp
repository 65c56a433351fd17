#include "entbridge/ot_oracle.hpp"

#include <algorithm>
#include <queue>

namespace entbridge {

namespace {

void require_line(const FiniteSpace& s, const char* who) {
  if (!s.is_line()) throw std::invalid_argument(std::string(who) + ": requires a 1D interval grid");
}

void require_same_size(const FiniteSpace& s, const Density& a, const Density& b, const char* who) {
  if (a.size() != s.size() || b.size() != s.size())
    throw std::invalid_argument(std::string(who) + ": length mismatch");
}

// Dense transportation simplex over a p x q instance.
class TransportSimplex {
 public:
  TransportSimplex(Matrix cost, Vector a, Vector b)
      : C_(std::move(cost)), a_(std::move(a)), b_(std::move(b)),
        p_(static_cast<int>(a_.size())), q_(static_cast<int>(b_.size())),
        X_(Matrix::Zero(p_, q_)), basic_(p_, std::vector<char>(q_, 0)) {}

  void solve() {
    north_west();
    const double tol = 1e-12 * std::max(1.0, C_.cwiseAbs().maxCoeff());
    for (long pivots = 0;; ++pivots) {
      compute_duals();
      // Bland: first cell in row-major order with negative reduced cost enters.
      int ei = -1, ej = -1;
      for (int i = 0; i < p_ && ei < 0; ++i)
        for (int j = 0; j < q_; ++j)
          if (!basic_[i][j] && C_(i, j) - u_[i] - v_[j] < -tol) {
            ei = i;
            ej = j;
            break;
          }
      if (ei < 0) return;
      if (pivots > 50'000'000) throw std::runtime_error("solve_ot_lp: pivot cap reached");
      pivot(ei, ej);
    }
  }

  const Matrix& plan() const { return X_; }
  const Vector& u() const { return u_; }
  const Vector& v() const { return v_; }

 private:
  void north_west() {
    Vector ra = a_, rb = b_;
    int i = 0, j = 0;
    for (;;) {
      const double x = std::max(0.0, std::min(ra[i], rb[j]));
      X_(i, j) = x;
      basic_[i][j] = 1;
      ra[i] -= x;
      rb[j] -= x;
      if (i == p_ - 1 && j == q_ - 1) break;
      if (i < p_ - 1 && (ra[i] <= rb[j] || j == q_ - 1))
        ++i;
      else
        ++j;
    }
  }

  // Tree nodes: rows 0..p-1, columns p..p+q-1.
  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(p_ + q_);
    for (int i = 0; i < p_; ++i)
      for (int j = 0; j < q_; ++j)
        if (basic_[i][j]) {
          adj[i].push_back(p_ + j);
          adj[p_ + j].push_back(i);
        }
    return adj;
  }

  void compute_duals() {
    u_ = Vector::Zero(p_);
    v_ = Vector::Zero(q_);
    const auto adj = adjacency();
    std::vector<char> seen(p_ + q_, 0);
    std::queue<int> bfs;
    bfs.push(0);
    seen[0] = 1;
    while (!bfs.empty()) {
      const int a = bfs.front();
      bfs.pop();
      for (int b : adj[a]) {
        if (seen[b]) continue;
        seen[b] = 1;
        if (a < p_)
          v_[b - p_] = C_(a, b - p_) - u_[a];
        else
          u_[b] = C_(b, a - p_) - v_[a - p_];
        bfs.push(b);
      }
    }
  }

  void pivot(int ei, int ej) {
    // Tree path from column ej to row ei closes the cycle with the entering cell.
    const auto adj = adjacency();
    std::vector<int> parent(p_ + q_, -2);
    std::queue<int> bfs;
    const int start = p_ + ej;
    bfs.push(start);
    parent[start] = -1;
    while (!bfs.empty() && parent[ei] == -2) {
      const int a = bfs.front();
      bfs.pop();
      for (int b : adj[a])
        if (parent[b] == -2) {
          parent[b] = a;
          bfs.push(b);
        }
    }
    if (parent[ei] == -2) throw std::runtime_error("solve_ot_lp: basis is not a spanning tree");

    // Walk row ei -> ... -> column ej; cells alternate -, +, -, ...
    std::vector<std::pair<int, int>> cells;
    for (int node = ei; parent[node] != -1; node = parent[node]) {
      const int other = parent[node];
      if (node < p_)
        cells.emplace_back(node, other - p_);
      else
        cells.emplace_back(other, node - p_);
    }
    double theta = kInf;
    int leave = -1;
    for (std::size_t k = 0; k < cells.size(); k += 2) {
      const auto [i, j] = cells[k];
      const double x = X_(i, j);
      const int idx = i * q_ + j;
      if (x < theta || (x == theta && idx < leave)) {
        theta = x;
        leave = idx;
      }
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto [i, j] = cells[k];
      X_(i, j) += (k % 2 == 0) ? -theta : theta;
    }
    X_(ei, ej) = theta;
    basic_[ei][ej] = 1;
    basic_[leave / q_][leave % q_] = 0;
    X_(leave / q_, leave % q_) = 0.0;
  }

  Matrix C_;
  Vector a_, b_;
  int p_, q_;
  Matrix X_;
  std::vector<std::vector<char>> basic_;
  Vector u_, v_;
};

double half_sq(double d) { return 0.5 * d * d; }

}  // namespace

TransportPlan solve_ot_lp(const FiniteSpace& s, const Density& rho0, const Density& rho1) {
  require_same_size(s, rho0, rho1, "solve_ot_lp");
  const auto s0 = rho0.support();
  const auto s1 = rho1.support();
  if (s0.empty() || s1.empty()) throw std::invalid_argument("solve_ot_lp: empty support");
  if (static_cast<long>(s0.size()) * static_cast<long>(s1.size()) > kLpCap)
    throw InstanceTooLarge("solve_ot_lp: supp(rho0) x supp(rho1) has " +
                           std::to_string(s0.size() * s1.size()) + " cells, cap is " +
                           std::to_string(kLpCap));
  const int p = static_cast<int>(s0.size()), q = static_cast<int>(s1.size());
  Matrix C(p, q);
  Vector a(p), b(q);
  for (int i = 0; i < p; ++i) a[i] = rho0[s0[i]] * s.measure()[s0[i]];
  for (int j = 0; j < q; ++j) b[j] = rho1[s1[j]] * s.measure()[s1[j]];
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) C(i, j) = half_sq(s.distance()(s0[i], s1[j]));

  TransportSimplex lp(C, a, b);
  lp.solve();

  const int n = s.size();
  TransportPlan out;
  out.plan = Matrix::Zero(n, n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) out.plan(s0[i], s1[j]) = lp.plan()(i, j);
  out.cost = lp.plan().cwiseProduct(C).sum();

  Vector u_supp = Vector::Constant(n, kNegInf);
  for (int i = 0; i < p; ++i) u_supp[s0[i]] = lp.u()[i];
  out.v = c_transform(s, u_supp);
  for (int j = 0; j < q; ++j) out.v[s1[j]] = lp.v()[j];
  out.u = c_transform(s, out.v);
  return out;
}

TransportPlan quantile_coupling_1d(const FiniteSpace& s, const Density& rho0,
                                   const Density& rho1) {
  require_line(s, "quantile_coupling_1d");
  require_same_size(s, rho0, rho1, "quantile_coupling_1d");
  const int n = s.size();
  const Vector& x = *s.coords();
  Vector ra = rho0.values().cwiseProduct(s.measure());
  Vector rb = rho1.values().cwiseProduct(s.measure());
  TransportPlan out;
  out.plan = Matrix::Zero(n, n);
  int i = 0, j = 0;
  while (i < n && j < n) {
    const double mass = std::min(ra[i], rb[j]);
    out.plan(i, j) += mass;
    out.cost += mass * half_sq(x[i] - x[j]);
    ra[i] -= mass;
    rb[j] -= mass;
    if (ra[i] <= rb[j])
      ++i;
    else
      ++j;
  }
  return out;
}

double wasserstein2(const FiniteSpace& s, const Density& rho0, const Density& rho1) {
  return s.is_line() ? quantile_coupling_1d(s, rho0, rho1).w2() : solve_ot_lp(s, rho0, rho1).w2();
}

Geodesic1D::Geodesic1D(const FiniteSpace& s, const Density& rho0, const Density& rho1)
    : space_(&s), rho0_(rho0), rho1_(rho1) {
  require_line(s, "Geodesic1D");
  require_same_size(s, rho0, rho1, "Geodesic1D");
  require_probability_density(s, rho0, "rho0");
  require_probability_density(s, rho1, "rho1");
  x_ = *s.coords();
  const int n = s.size();

  // Cell edges: grid ends and midpoints between neighbours.
  Vector edge(n + 1);
  edge[0] = x_[0];
  edge[n] = x_[n - 1];
  for (int k = 1; k < n; ++k) edge[k] = 0.5 * (x_[k - 1] + x_[k]);
  const Vector a = rho0.values().cwiseProduct(s.measure());
  const Vector b = rho1.values().cwiseProduct(s.measure());
  Vector F1(n + 1);
  F1[0] = 0.0;
  for (int k = 0; k < n; ++k) F1[k + 1] = F1[k] + b[k];

  T_ = x_;
  double below = 0.0;
  int cell = 0;
  for (int i = 0; i < n; ++i) {
    const double qi = std::min(below + 0.5 * a[i], F1[n]);
    below += a[i];
    if (a[i] <= 0.0) continue;
    while (cell < n - 1 && (F1[cell + 1] < qi || b[cell] <= 0.0)) ++cell;
    const double w = b[cell] > 0.0 ? std::clamp((qi - F1[cell]) / b[cell], 0.0, 1.0) : 0.5;
    T_[i] = edge[cell] + w * (edge[cell + 1] - edge[cell]);
  }
}

double Geodesic1D::pushforward_cdf_error() const {
  const Density pushed = displacement_interpolation_1d(*this, 1.0);
  const Vector a = pushed.values().cwiseProduct(space_->measure());
  const Vector b = rho1_.values().cwiseProduct(space_->measure());
  double ca = 0.0, cb = 0.0, err = 0.0;
  for (int k = 0; k < a.size(); ++k) {
    ca += a[k];
    cb += b[k];
    err = std::max(err, std::abs(ca - cb));
  }
  return err;
}

Density displacement_interpolation_1d(const Geodesic1D& g, double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("displacement_interpolation_1d: t must lie in [0, 1]");
  const FiniteSpace& s = g.space();
  const Vector& x = g.grid();
  const int n = s.size();
  Vector mass = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double a = g.rho0()[i] * s.measure()[i];
    if (a <= 0.0) continue;
    const double p = std::clamp(g.position(i, t), x[0], x[n - 1]);
    int k = static_cast<int>(std::upper_bound(x.data(), x.data() + n, p) - x.data()) - 1;
    k = std::clamp(k, 0, n - 2);
    const double w = std::clamp((p - x[k]) / (x[k + 1] - x[k]), 0.0, 1.0);
    mass[k] += a * (1.0 - w);
    mass[k + 1] += a * w;
  }
  return Density(mass.cwiseQuotient(s.measure()));
}

Vector hopf_lax(const FiniteSpace& s, const Vector& f, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("hopf_lax: t must be positive");
  if (f.size() != s.size()) throw std::invalid_argument("hopf_lax: length mismatch");
  const int n = s.size();
  const Matrix& d = s.distance();
  Vector out(n);
  for (int x = 0; x < n; ++x) {
    double best = kInf;
    for (int y = 0; y < n; ++y) best = std::min(best, d(x, y) * d(x, y) / (2.0 * t) + f[y]);
    out[x] = best;
  }
  return out;
}

Vector c_transform(const FiniteSpace& s, const Vector& phi) {
  if (phi.size() != s.size()) throw std::invalid_argument("c_transform: length mismatch");
  const int n = s.size();
  const Matrix& d = s.distance();
  Vector out(n);
  for (int x = 0; x < n; ++x) {
    double best = kInf;
    for (int y = 0; y < n; ++y) {
      if (phi[y] == kNegInf) continue;
      best = std::min(best, half_sq(d(x, y)) - phi[y]);
    }
    out[x] = best;
  }
  return out;
}

double duality_gap(const FiniteSpace& s, const Density& rho0, const Density& rho1,
                   const Vector& phi) {
  require_same_size(s, rho0, rho1, "duality_gap");
  const double w = wasserstein2(s, rho0, rho1);
  const Vector phic = c_transform(s, phi);
  double dual = 0.0;
  for (int x = 0; x < s.size(); ++x) {
    if (rho0[x] > 0.0) dual += phi[x] * rho0[x] * s.measure()[x];
    if (rho1[x] > 0.0) dual += phic[x] * rho1[x] * s.measure()[x];
  }
  return 0.5 * w * w - dual;
}

Vector local_lipschitz(const FiniteSpace& s, const Vector& f) {
  if (f.size() != s.size()) throw std::invalid_argument("local_lipschitz: length mismatch");
  Vector out = Vector::Zero(s.size());
  for (int x = 0; x < s.size(); ++x)
    for (const auto& e : s.neighbors()[x])
      out[x] = std::max(out[x], std::abs(f[e.index] - f[x]) / s.distance()(x, e.index));
  return out;
}

CompositionCheck hopf_lax_composition(const FiniteSpace& s, const Vector& f, double t,
                                      double s_time) {
  const Vector joint = hopf_lax(s, f, t + s_time);
  const Vector nested = hopf_lax(s, hopf_lax(s, f, s_time), t);
  CompositionCheck c;
  c.max_defect = kNegInf;
  for (int x = 0; x < s.size(); ++x) {
    const double diff = nested[x] - joint[x];
    c.max_defect = std::max(c.max_defect, diff);
    // Both sides are minima of sums of the same magnitudes; allow a few ulps.
    if (diff < -1e-13 * (1.0 + std::abs(joint[x]))) ++c.violations;
  }
  return c;
}

double hopf_lax_hj_residual(const FiniteSpace& s, const Vector& f, double t, double dt) {
  if (!(dt > 0.0 && t - dt > 0.0))
    throw std::invalid_argument("hopf_lax_hj_residual: need 0 < t - dt");
  const Vector dq = (hopf_lax(s, f, t + dt) - hopf_lax(s, f, t - dt)) / (2.0 * dt);
  const Vector lip = local_lipschitz(s, hopf_lax(s, f, t));
  double res = 0.0;
  for (int x = 0; x < s.size(); ++x)
    if (!s.is_boundary(x)) res = std::max(res, std::abs(dq[x] + 0.5 * lip[x] * lip[x]));
  return res;
}

double interpolate_on_grid(const Vector& grid, const Vector& values, double x) {
  const int n = static_cast<int>(grid.size());
  if (n == 0 || values.size() != n) throw std::invalid_argument("interpolate_on_grid: bad input");
  if (n == 1 || x <= grid[0]) return values[0];
  if (x >= grid[n - 1]) return values[n - 1];
  int k = static_cast<int>(std::upper_bound(grid.data(), grid.data() + n, x) - grid.data()) - 1;
  k = std::clamp(k, 0, n - 2);
  const double w = (x - grid[k]) / (grid[k + 1] - grid[k]);
  return (1.0 - w) * values[k] + w * values[k + 1];
}

SecondOrderCheck second_order_formula_check_1d(const Geodesic1D& g, const Vector& h,
                                               const Vector& h2, double t, double dt) {
  const FiniteSpace& s = g.space();
  if (h.size() != s.size() || h2.size() != s.size())
    throw std::invalid_argument("second_order_formula_check_1d: length mismatch");
  if (!(dt > 0.0 && t - dt >= 0.0 && t + dt <= 1.0))
    throw std::invalid_argument("second_order_formula_check_1d: t +- dt must lie in [0, 1]");
  auto moment = [&](double tt) {
    return s.integrate(h.cwiseProduct(displacement_interpolation_1d(g, tt).values()));
  };
  SecondOrderCheck c;
  c.lhs_fd2 = (moment(t + dt) - 2.0 * moment(t) + moment(t - dt)) / (dt * dt);
  for (int i = 0; i < s.size(); ++i) {
    const double a = g.rho0()[i] * s.measure()[i];
    if (a <= 0.0) continue;
    const double v = g.velocity(i);
    c.rhs += interpolate_on_grid(g.grid(), h2, g.position(i, t)) * v * v * a;
  }
  c.gap = std::abs(c.lhs_fd2 - c.rhs);
  return c;
}

}  // namespace entbridge
