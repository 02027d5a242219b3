#pragma once

#include <cmath>
#include <limits>

#include "lqg/core.hpp"

namespace lqg {

/// Adaptive Gauss-Kronrod 7-15 quadrature with absolute-error control.
/// All transcendental-kernel integrals in the library go through here.

namespace detail {

// Kronrod-15 abscissae (positive half) and weights; Gauss-7 weights embedded.
inline constexpr double kGK15X[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGK15WK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGK15WG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct GKResult {
  double integral;
  double error;
};

template <typename F>
GKResult gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - hw * kGK15X[i]);
    fv[14 - i] = f(c + hw * kGK15X[i]);
  }
  fv[7] = f(c);
  double ik = 0.0, ig = 0.0;
  for (int i = 0; i < 7; ++i) ik += kGK15WK[i] * (fv[i] + fv[14 - i]);
  ik += kGK15WK[7] * fv[7];
  for (int i = 0; i < 3; ++i) ig += kGK15WG[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  ig += kGK15WG[3] * fv[7];
  ik *= hw;
  ig *= hw;
  return {ik, std::fabs(ik - ig)};
}

template <typename F>
double adaptive(const F& f, double a, double b, double abs_tol, int depth) {
  const GKResult r = gk15(f, a, b);
  if (r.error <= abs_tol || depth >= 52) return r.integral;
  const double m = 0.5 * (a + b);
  return adaptive(f, a, m, 0.5 * abs_tol, depth + 1) +
         adaptive(f, m, b, 0.5 * abs_tol, depth + 1);
}

}  // namespace detail

/// Integrate f over [a,b] to absolute tolerance abs_tol.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-10) {
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw DomainError("integrate: non-finite interval");
  if (a == b) return 0.0;
  return detail::adaptive(f, a, b, abs_tol, 0);
}

/// Integrate a bump-shaped integrand over the whole real line. The domain is
/// truncated where |f| falls below rel_floor * |f(peak)|, then integrated
/// adaptively; suited to integrands with exponential or doubly exponential
/// tails on both sides of a single peak.
template <typename F>
double integrate_bump(const F& f, double v_peak, double abs_tol = 1e-10,
                      double rel_floor = 1e-16, double step = 1.0) {
  const double fpeak = std::fabs(f(v_peak));
  if (fpeak == 0.0) return 0.0;
  const double floor = fpeak * rel_floor;
  double lo = v_peak, hi = v_peak, w = step;
  for (int i = 0; i < 400 && std::fabs(f(lo)) > floor; ++i) {
    lo -= w;
    w *= 1.4;
  }
  w = step;
  for (int i = 0; i < 400 && std::fabs(f(hi)) > floor; ++i) {
    hi += w;
    w *= 1.4;
  }
  return integrate(f, lo, hi, abs_tol);
}

}  // namespace lqg
