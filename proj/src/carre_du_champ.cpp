#include "entbridge/carre_du_champ.hpp"

namespace entbridge {

namespace {

void require_length(const FiniteSpace& s, const Vector& v, const char* who) {
  if (v.size() != s.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
}

}  // namespace

Vector gamma(const FiniteSpace& s, const Vector& f, const Vector& g) {
  require_length(s, f, "gamma");
  require_length(s, g, "gamma");
  const int n = s.size();
  Vector out(n);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (const auto& e : s.neighbors()[x])
      acc += e.rate * (f[e.index] - f[x]) * (g[e.index] - g[x]);
    out[x] = 0.5 * acc;
  }
  return out;
}

Vector gamma2(const FiniteSpace& s, const Vector& f) {
  require_length(s, f, "gamma2");
  const Vector lf = s.apply_generator(f);
  return 0.5 * s.apply_generator(gamma(s, f, f)) - gamma(s, f, lf);
}

double gamma2_pairing(const FiniteSpace& s, const Vector& f, const Vector& rho) {
  require_length(s, f, "gamma2_pairing");
  require_length(s, rho, "gamma2_pairing");
  const Vector lrho = s.apply_generator(rho);
  const Vector gff = gamma(s, f, f);
  const Vector gflf = gamma(s, f, s.apply_generator(f));
  return s.integrate((0.5 * lrho.cwiseProduct(gff) - rho.cwiseProduct(gflf)).eval());
}

double gamma2_pairing(const FiniteSpace& s, const Vector& f, const Density& rho) {
  return gamma2_pairing(s, f, rho.values());
}

Vector bochner_check(const FiniteSpace& s, const Vector& f, CurvatureParams cp) {
  if (cp.N < 1.0) throw std::invalid_argument("bochner_check: N must be >= 1");
  const Vector lf = s.apply_generator(f);
  return gamma2(s, f) - lf.cwiseAbs2() / cp.N - cp.K * gamma(s, f, f);
}

}  // namespace entbridge
