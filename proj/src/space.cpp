#include "entbridge/space.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

namespace entbridge {

namespace {

std::vector<std::vector<Neighbor>> collect_neighbors(const Matrix& L) {
  const int n = static_cast<int>(L.rows());
  std::vector<std::vector<Neighbor>> nb(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && L(i, j) != 0.0) nb[i].push_back({j, L(i, j)});
    }
  }
  return nb;
}

Matrix floyd_warshall(Matrix d) {
  const int n = static_cast<int>(d.rows());
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(d(i, k))) continue;
      for (int j = 0; j < n; ++j) {
        const double via = d(i, k) + d(k, j);
        if (via < d(i, j)) d(i, j) = via;
      }
    }
  return d;
}

bool connected(const std::vector<std::vector<Neighbor>>& nb) {
  const int n = static_cast<int>(nb.size());
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int x = q.front();
    q.pop();
    for (const auto& e : nb[x]) {
      if (e.rate > 0.0 && !seen[e.index]) {
        seen[e.index] = 1;
        ++count;
        q.push(e.index);
      }
    }
  }
  return count == n;
}

}  // namespace

FiniteSpace::FiniteSpace(SpaceKind kind, Matrix generator, Vector measure, Matrix distance,
                         CurvatureParams curvature, std::optional<Vector> coords)
    : kind_(kind),
      generator_(std::move(generator)),
      measure_(std::move(measure)),
      distance_(std::move(distance)),
      curvature_(curvature),
      coords_(std::move(coords)) {
  const auto n = measure_.size();
  if (n < 1) throw std::invalid_argument("FiniteSpace: empty space");
  if (generator_.rows() != n || generator_.cols() != n)
    throw std::invalid_argument("FiniteSpace: generator must be n x n");
  if (distance_.rows() != n || distance_.cols() != n)
    throw std::invalid_argument("FiniteSpace: distance must be n x n");
  if (coords_ && coords_->size() != n)
    throw std::invalid_argument("FiniteSpace: coords must have n entries");
  if (curvature_.N < 1.0) throw std::invalid_argument("FiniteSpace: curvature N must be >= 1");
  log_measure_ = measure_.array().log().matrix();
  neighbors_ = collect_neighbors(generator_);
}

bool FiniteSpace::is_boundary(int i) const {
  return kind_ == SpaceKind::Interval && (i == 0 || i == size() - 1);
}

Vector FiniteSpace::apply_generator(const Vector& f) const {
  const int n = size();
  if (f.size() != n) throw std::invalid_argument("apply_generator: length mismatch");
  Vector out(n);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (const auto& e : neighbors_[x]) acc += e.rate * (f[e.index] - f[x]);
    out[x] = acc;
  }
  return out;
}

FiniteSpace build_interval_grid(int n, double length, BoundaryCondition bc, double origin) {
  if (n < 2) throw std::invalid_argument("build_interval_grid: n must be >= 2");
  if (!(length > 0.0)) throw std::invalid_argument("build_interval_grid: length must be positive");

  const bool periodic = bc == BoundaryCondition::Periodic;
  const double h = periodic ? length / n : length / (n - 1);
  Vector x(n), m = Vector::Constant(n, h);
  for (int i = 0; i < n; ++i) x[i] = origin + i * h;

  // Conductance 1/h between neighbours; L(i,j) = c/m_i.
  Matrix L = Matrix::Zero(n, n);
  const double c = 1.0 / h;
  auto link = [&](int i, int j) {
    L(i, j) += c;
    L(j, i) += c;
  };
  for (int i = 0; i + 1 < n; ++i) link(i, i + 1);
  if (periodic) {
    link(n - 1, 0);
  } else {
    m[0] *= 0.5;
    m[n - 1] *= 0.5;
  }
  for (int i = 0; i < n; ++i) {
    L.row(i) /= m[i];
    L(i, i) = 0.0;
    L(i, i) = -L.row(i).sum();
  }

  Matrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dx = std::abs(x[i] - x[j]);
      d(i, j) = periodic ? std::min(dx, length - dx) : dx;
    }

  FiniteSpace s(periodic ? SpaceKind::Circle : SpaceKind::Interval, std::move(L), std::move(m),
                std::move(d), CurvatureParams{0.0, 1.0}, std::move(x));
  s.spacing_ = h;
  return s;
}

FiniteSpace build_weighted_graph(const std::vector<Edge>& edges, const Vector& measure,
                                 CurvatureParams curvature) {
  const int n = static_cast<int>(measure.size());
  if (n < 1) throw std::invalid_argument("build_weighted_graph: empty measure");
  for (int i = 0; i < n; ++i)
    if (!(measure[i] > 0.0))
      throw std::invalid_argument("build_weighted_graph: nonpositive weight at point " +
                                  std::to_string(i));

  Matrix C = Matrix::Zero(n, n);
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n || e.i == e.j)
      throw std::invalid_argument("build_weighted_graph: bad edge endpoints");
    if (!(e.conductance > 0.0))
      throw std::invalid_argument("build_weighted_graph: nonpositive conductance on edge (" +
                                  std::to_string(e.i) + "," + std::to_string(e.j) + ")");
    C(e.i, e.j) += e.conductance;
    C(e.j, e.i) += e.conductance;
  }

  Matrix L(n, n);
  for (int i = 0; i < n; ++i) {
    L.row(i) = C.row(i) / measure[i];
    L(i, i) = 0.0;
    L(i, i) = -L.row(i).sum();
  }
  if (!connected(collect_neighbors(L)))
    throw std::invalid_argument("build_weighted_graph: graph is disconnected");

  Matrix d = Matrix::Constant(n, n, kInf);
  d.diagonal().setZero();
  for (const auto& e : edges) {
    const double len =
        e.length ? *e.length : 1.0 / std::sqrt(L(e.i, e.j) * L(e.j, e.i));
    if (!(len > 0.0)) throw std::invalid_argument("build_weighted_graph: nonpositive edge length");
    d(e.i, e.j) = std::min(d(e.i, e.j), len);
    d(e.j, e.i) = d(e.i, e.j);
  }
  return FiniteSpace(SpaceKind::Graph, std::move(L), measure, floyd_warshall(std::move(d)),
                     curvature);
}

FiniteSpace space_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  CurvatureParams cp;
  if (j.contains("curvature")) {
    cp.K = j["curvature"].value("K", 0.0);
    cp.N = j["curvature"].value("N", 1.0);
  }
  if (kind == "interval" || kind == "circle") {
    const int n = j.at("n").get<int>();
    const double length = j.value("length", 1.0);
    const double origin = j.value("origin", 0.0);
    std::string bc = j.value("bc", kind == "circle" ? "periodic" : "neumann");
    if (kind == "circle") bc = "periodic";
    if (bc != "neumann" && bc != "periodic")
      throw std::invalid_argument("space.bc: expected neumann or periodic, got " + bc);
    return build_interval_grid(
        n, length, bc == "periodic" ? BoundaryCondition::Periodic : BoundaryCondition::Neumann,
        origin);
  }
  if (kind == "graph") {
    const auto& mj = j.at("measure");
    Vector m(static_cast<Eigen::Index>(mj.size()));
    for (std::size_t i = 0; i < mj.size(); ++i) m[static_cast<Eigen::Index>(i)] = mj[i].get<double>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (e.size() < 3) throw std::invalid_argument("space.edges: entries must be [i, j, c]");
      Edge edge{e[0].get<int>(), e[1].get<int>(), e[2].get<double>(), std::nullopt};
      if (e.size() > 3) edge.length = e[3].get<double>();
      edges.push_back(edge);
    }
    return build_weighted_graph(edges, m, cp);
  }
  throw std::invalid_argument("space.kind: unknown kind '" + kind + "'");
}

bool SpaceReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const InvariantCheck& SpaceReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("SpaceReport: no check named " + name);
}

SpaceReport validate_space(const FiniteSpace& s) {
  const int n = s.size();
  const Matrix& L = s.generator();
  const Matrix& d = s.distance();
  const Vector& m = s.measure();
  const double lscale = std::max(1.0, L.cwiseAbs().maxCoeff());
  const double dscale = std::max(1.0, d.cwiseAbs().maxCoeff());
  SpaceReport rep;

  auto fail = [](InvariantCheck& c, std::vector<int> idx, const std::string& msg) {
    if (!c.passed) return;
    c.passed = false;
    c.indices = std::move(idx);
    c.detail = msg;
  };

  InvariantCheck pos{"positive_measure", true, {}, {}};
  for (int i = 0; i < n; ++i)
    if (!(m[i] > 0.0)) fail(pos, {i}, "m[" + std::to_string(i) + "] <= 0");
  rep.checks.push_back(pos);

  InvariantCheck rev{"reversibility", true, {}, {}};
  for (int i = 0; i < n && rev.passed; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(m[i] * L(i, j) - m[j] * L(j, i)) >
          1e-12 * lscale * std::max(m[i], m[j])) {
        std::ostringstream os;
        os << "m_i L_ij != m_j L_ji at (" << i << "," << j << ")";
        fail(rev, {i, j}, os.str());
        break;
      }
  rep.checks.push_back(rev);

  InvariantCheck rows{"mass_conservation", true, {}, {}};
  for (int i = 0; i < n; ++i)
    if (std::abs(L.row(i).sum()) > 1e-12 * lscale * n)
      fail(rows, {i}, "row " + std::to_string(i) + " of L does not sum to zero");
  rep.checks.push_back(rows);

  InvariantCheck offd{"nonnegative_rates", true, {}, {}};
  for (int i = 0; i < n && offd.passed; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && L(i, j) < 0.0) {
        fail(offd, {i, j}, "negative off-diagonal rate");
        break;
      }
  rep.checks.push_back(offd);

  InvariantCheck conn{"connected", true, {}, {}};
  if (!connected(s.neighbors())) fail(conn, {}, "graph of positive rates is disconnected");
  rep.checks.push_back(conn);

  InvariantCheck sym{"metric_symmetric", true, {}, {}};
  for (int i = 0; i < n && sym.passed; ++i) {
    if (d(i, i) != 0.0) fail(sym, {i, i}, "nonzero diagonal distance");
    for (int j = i + 1; j < n; ++j)
      if (std::abs(d(i, j) - d(j, i)) > 1e-12 * dscale || !(d(i, j) > 0.0)) {
        fail(sym, {i, j}, "asymmetric or nonpositive off-diagonal distance");
        break;
      }
  }
  rep.checks.push_back(sym);

  InvariantCheck tri{"triangle_inequality", true, {}, {}};
  for (int i = 0; i < n && tri.passed; ++i)
    for (int j = 0; j < n && tri.passed; ++j)
      for (int k = 0; k < n; ++k)
        if (d(i, j) > d(i, k) + d(k, j) + 1e-12 * dscale) {
          std::ostringstream os;
          os << "d(" << i << "," << j << ") > d(" << i << "," << k << ") + d(" << k << "," << j
             << ")";
          fail(tri, {i, j, k}, os.str());
          break;
        }
  rep.checks.push_back(tri);
  return rep;
}

Density::Density(Vector values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
      throw std::invalid_argument("Density: negative or non-finite value at point " +
                                  std::to_string(i));
}

std::vector<int> Density::support() const {
  std::vector<int> s;
  for (int i = 0; i < size(); ++i)
    if (values_[i] > 0.0) s.push_back(i);
  return s;
}

Vector Density::log_values() const {
  Vector out(values_.size());
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    out[i] = values_[i] > 0.0 ? std::log(values_[i]) : kNegInf;
  return out;
}

Density normalized_density(const FiniteSpace& s, const Vector& weights) {
  if (weights.size() != s.size()) throw std::invalid_argument("density: length mismatch");
  const double total = s.integrate(weights);
  if (!(total > 0.0)) throw std::invalid_argument("density: total mass must be positive");
  return Density(weights / total);
}

void require_probability_density(const FiniteSpace& s, const Density& d, const std::string& what,
                                 double tol) {
  if (d.size() != s.size()) throw std::invalid_argument(what + ": length mismatch");
  const double mass = d.mass(s);
  if (std::abs(mass - 1.0) > tol)
    throw std::invalid_argument(what + ": not a probability density (mass " +
                                std::to_string(mass) + ")");
}

}  // namespace entbridge
