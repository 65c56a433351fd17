#pragma once

#include "entbridge/space.hpp"

namespace entbridge {

/// Gamma(f,g) = 1/2 (L(fg) - f Lg - g Lf), evaluated edgewise as
/// 1/2 sum_y L(x,y) (f(y)-f(x)) (g(y)-g(x)) so that Gamma(f,f) >= 0 holds exactly.
Vector gamma(const FiniteSpace& s, const Vector& f, const Vector& g);

/// Gamma_2(f) = 1/2 L Gamma(f,f) - Gamma(f, Lf).
Vector gamma2(const FiniteSpace& s, const Vector& f);

/// sum_x (1/2 (L rho) Gamma(f,f) - rho Gamma(f, Lf)) m, the weak pairing <Gamma_2(f), rho>.
double gamma2_pairing(const FiniteSpace& s, const Vector& f, const Density& rho);
double gamma2_pairing(const FiniteSpace& s, const Vector& f, const Vector& rho);

/// Gamma_2(f) - (Lf)^2/N - K Gamma(f,f) per point. Negative entries are reported, not rejected.
Vector bochner_check(const FiniteSpace& s, const Vector& f, CurvatureParams cp);

}  // namespace entbridge
