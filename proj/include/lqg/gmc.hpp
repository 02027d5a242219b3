#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lqg/core.hpp"
#include "lqg/field.hpp"
#include "lqg/parallel.hpp"
#include "lqg/stats.hpp"

namespace lqg {

/// Gaussian multiplicative chaos on a grid: cell masses
///     exp(gamma X(c) - gamma^2/2 Var[X]) * h^2
/// with the variance taken from the model's cutoff. Mean cell mass equals
/// the cell area for every gamma in [0,2).

struct ChaosMeasure {
  GridSpec grid;
  double gamma = 0.0;
  double eps = 1.0;
  std::vector<double> cell_mass;

  double total() const { return pairwise_sum(cell_mass); }
};

inline ChaosMeasure build_measure(const FieldSample& field, double gamma) {
  if (!(gamma >= 0.0 && gamma < 2.0))
    throw DomainError("build_measure: gamma must lie in [0,2)");
  ChaosMeasure m;
  m.grid = field.grid;
  m.gamma = gamma;
  m.eps = field.eps;
  const double area = field.grid.h * field.grid.h;
  m.cell_mass.resize(field.values.size());
  if (gamma == 0.0) {
    for (auto& c : m.cell_mass) c = area;
    return m;
  }
  const double half_var = 0.5 * gamma * gamma * field.model.variance(field.eps);
  const std::size_t n = field.values.size();
  for (std::size_t i = 0; i < n; ++i)
    m.cell_mass[i] = std::exp(gamma * field.values[i] - half_var) * area;
  return m;
}

/// Mass of the closed ball B(center, radius) under the cell-center inclusion
/// convention.
inline double ball_mass(const ChaosMeasure& m, Vec2 center, double radius) {
  if (!(radius > 0.0)) throw DomainError("ball_mass: radius must be > 0");
  const GridSpec& g = m.grid;
  // Ball entirely outside the grid rectangle is a caller error.
  const double cx = std::clamp(center.x, g.x_min(), g.x_max());
  const double cy = std::clamp(center.y, g.y_min(), g.y_max());
  if (std::hypot(cx - center.x, cy - center.y) > radius)
    throw DomainError("ball_mass: ball does not intersect the grid");

  const double r2 = radius * radius;
  // Row range of candidate cell centers.
  const auto row_lo = static_cast<std::int64_t>(
      std::ceil((center.y - radius - g.origin.y) / g.h - 0.5));
  const auto row_hi = static_cast<std::int64_t>(
      std::floor((center.y + radius - g.origin.y) / g.h - 0.5));
  double sum = 0.0;
  for (std::int64_t iy = std::max<std::int64_t>(0, row_lo);
       iy <= std::min<std::int64_t>(g.ny - 1, row_hi); ++iy) {
    const double y = g.origin.y + (iy + 0.5) * g.h;
    const double dy2 = (y - center.y) * (y - center.y);
    if (dy2 > r2) continue;
    const double half = std::sqrt(r2 - dy2);
    const auto col_lo = static_cast<std::int64_t>(
        std::ceil((center.x - half - g.origin.x) / g.h - 0.5));
    const auto col_hi = static_cast<std::int64_t>(
        std::floor((center.x + half - g.origin.x) / g.h - 0.5));
    const std::int64_t a = std::max<std::int64_t>(0, col_lo);
    const std::int64_t b = std::min<std::int64_t>(g.nx - 1, col_hi);
    const double* row = m.cell_mass.data() + static_cast<std::size_t>(iy) * g.nx;
    for (std::int64_t ix = a; ix <= b; ++ix) sum += row[ix];
  }
  return sum;
}

/// Log-weighted mass
///   mu(x, r) = sum over cells z in B(x, 2r) of (1 + ln_+(1/|x-z|)) mass(z),
/// with the cell containing x weighted by 1 + ln(2/h).
inline double log_weighted_mass(const ChaosMeasure& m, Vec2 x, double r) {
  if (!(r > 0.0)) throw DomainError("log_weighted_mass: r must be > 0");
  if (r > 0.5) throw DomainError("log_weighted_mass: r must be <= 1/2");
  const GridSpec& g = m.grid;
  const double rr = 2.0 * r;
  const double cx = std::clamp(x.x, g.x_min(), g.x_max());
  const double cy = std::clamp(x.y, g.y_min(), g.y_max());
  if (std::hypot(cx - x.x, cy - x.y) > rr)
    throw DomainError("log_weighted_mass: B(x,2r) does not intersect the grid");

  const double self_weight = 1.0 + std::log(2.0 / g.h);
  const auto self_ix = static_cast<std::int64_t>(std::floor((x.x - g.origin.x) / g.h));
  const auto self_iy = static_cast<std::int64_t>(std::floor((x.y - g.origin.y) / g.h));

  const double r2 = rr * rr;
  const auto row_lo = static_cast<std::int64_t>(std::ceil((x.y - rr - g.origin.y) / g.h - 0.5));
  const auto row_hi = static_cast<std::int64_t>(std::floor((x.y + rr - g.origin.y) / g.h - 0.5));
  double sum = 0.0;
  for (std::int64_t iy = std::max<std::int64_t>(0, row_lo);
       iy <= std::min<std::int64_t>(g.ny - 1, row_hi); ++iy) {
    const double y = g.origin.y + (iy + 0.5) * g.h;
    const double dy2 = (y - x.y) * (y - x.y);
    if (dy2 > r2) continue;
    const double half = std::sqrt(r2 - dy2);
    const auto col_lo = static_cast<std::int64_t>(std::ceil((x.x - half - g.origin.x) / g.h - 0.5));
    const auto col_hi = static_cast<std::int64_t>(std::floor((x.x + half - g.origin.x) / g.h - 0.5));
    for (std::int64_t ix = std::max<std::int64_t>(0, col_lo);
         ix <= std::min<std::int64_t>(g.nx - 1, col_hi); ++ix) {
      const double mass = m.cell_mass[g.index(static_cast<std::uint32_t>(ix),
                                              static_cast<std::uint32_t>(iy))];
      double w;
      if (ix == self_ix && iy == self_iy) {
        w = self_weight;
      } else {
        const double d = std::hypot(g.origin.x + (ix + 0.5) * g.h - x.x, y - x.y);
        w = 1.0 + std::max(0.0, std::log(1.0 / d));
      }
      sum += w * mass;
    }
  }
  return sum;
}

/// Moment scaling exponent xi(q) = (2 + gamma^2/2) q - (gamma^2/2) q^2.
inline double xi(double q, double gamma) {
  const double g2 = 0.5 * gamma * gamma;
  return (2.0 + g2) * q - g2 * q * q;
}

struct SpectrumPoint {
  double q = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double xi_theory = 0.0;
};

struct SpectrumConfig {
  GridSpec grid = GridSpec::centered(256, 1.0);
  CovarianceModel model = CovarianceModel::white_noise(1.0);
  double eps = 0.0;  // 0 means "one cutoff length per cell" (eps = h)
  unsigned threads = 1;
  SampleOptions sample_options{};
};

/// Fit the scaling exponents of E[M(B(0,r))^q] against r over independent
/// replicas; balls are centered at the origin to avoid the long-range
/// correlation bias of spatial averaging.
inline std::vector<SpectrumPoint> moment_spectrum(double gamma,
                                                  const std::vector<double>& qs,
                                                  const std::vector<double>& radii,
                                                  std::size_t replicas,
                                                  std::uint64_t seed,
                                                  const SpectrumConfig& cfg = {}) {
  if (!(gamma >= 0.0 && gamma < 2.0))
    throw DomainError("moment_spectrum: gamma must lie in [0,2)");
  if (radii.size() < 3) throw DomainError("moment_spectrum: need >= 3 radii");
  if (replicas == 0) throw DomainError("moment_spectrum: need replicas >= 1");
  for (double q : qs)
    if (gamma > 0.0 && q >= 4.0 / (gamma * gamma))
      throw DomainError("moment_spectrum: q >= 4/gamma^2 has no finite moment");
  const double eps = cfg.eps > 0.0 ? cfg.eps : cfg.grid.h;

  // ball_masses[rep][ri]
  std::vector<std::vector<double>> ball(replicas,
                                        std::vector<double>(radii.size(), 0.0));
  parallel_for(
      replicas,
      [&](std::size_t rep) {
        FieldSample f = sample_field(cfg.grid, cfg.model, eps,
                                     derive_seed(seed, rep), cfg.sample_options);
        ChaosMeasure m = build_measure(f, gamma);
        for (std::size_t ri = 0; ri < radii.size(); ++ri)
          ball[rep][ri] = ball_mass(m, {0.0, 0.0}, radii[ri]);
      },
      cfg.threads);

  std::vector<double> log_r(radii.size());
  for (std::size_t ri = 0; ri < radii.size(); ++ri) log_r[ri] = std::log(radii[ri]);

  std::vector<SpectrumPoint> out;
  out.reserve(qs.size());
  for (double q : qs) {
    std::vector<double> log_moment(radii.size());
    std::vector<double> powed(replicas);
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      for (std::size_t rep = 0; rep < replicas; ++rep)
        powed[rep] = std::pow(ball[rep][ri], q);
      log_moment[ri] = std::log(pairwise_sum(powed) / static_cast<double>(replicas));
    }
    const LineFit fit = fit_line(log_r, log_moment);
    out.push_back({q, fit.slope, fit.slope_stderr, xi(q, gamma)});
  }
  return out;
}

/// sup over dyadic centers x in D_level of [0,1]^2 of
///     M(B(x, 2r)) / M(B(x, r))^{1-eta},   r = 2^{-level}.
inline double doubling_statistic(const ChaosMeasure& m, double eta, int level) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw DomainError("doubling_statistic: eta must lie in (0,1]");
  if (level < 0) throw DomainError("doubling_statistic: level must be >= 0");
  const double r = std::ldexp(1.0, -level);
  if (r < 2.0 * m.grid.h)
    throw DomainError("doubling_statistic: level too deep for the grid");
  const GridSpec& g = m.grid;
  if (g.x_min() > -2.0 * r || g.y_min() > -2.0 * r || g.x_max() < 1.0 + 2.0 * r ||
      g.y_max() < 1.0 + 2.0 * r)
    throw DomainError(
        "doubling_statistic: grid must cover [0,1]^2 with a 2r margin");
  const std::int64_t n = std::int64_t{1} << level;
  double best = 0.0;
  for (std::int64_t ky = 0; ky <= n; ++ky)
    for (std::int64_t kx = 0; kx <= n; ++kx) {
      const Vec2 x{static_cast<double>(kx) * r, static_cast<double>(ky) * r};
      const double inner = ball_mass(m, x, r);
      const double outer = ball_mass(m, x, 2.0 * r);
      if (inner <= 0.0) {
        if (outer > 0.0) return std::numeric_limits<double>::infinity();
        continue;
      }
      best = std::max(best, outer / std::pow(inner, 1.0 - eta));
    }
  return best;
}

}  // namespace lqg
