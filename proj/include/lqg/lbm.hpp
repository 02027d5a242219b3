#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqg/core.hpp"
#include "lqg/field.hpp"
#include "lqg/rng.hpp"

namespace lqg {

/// Brownian paths, Brownian bridges, and the Liouville clock
///     F(t) = int_0^t exp(gamma X(B_r) - gamma^2/2 Var[X]) dr
/// discretized as a left Riemann sum over the path grid. Liouville Brownian
/// motion is the path re-indexed by the piecewise-linear inverse of F.

enum class PathKind { BrownianMotion, BrownianBridge };

struct Path {
  std::vector<double> times;  // strictly increasing, starts at 0
  std::vector<Vec2> positions;
  PathKind kind = PathKind::BrownianMotion;
  Vec2 start{0, 0};
  Vec2 end{0, 0};  // bridge target when kind == BrownianBridge

  std::size_t size() const { return times.size(); }
};

inline Path sample_bm(Vec2 x, double T, std::size_t n_steps, std::uint64_t seed,
                      std::uint64_t stream = 0) {
  if (n_steps < 1) throw DomainError("sample_bm: n_steps must be >= 1");
  if (!(T > 0.0)) throw DomainError("sample_bm: T must be > 0");
  Rng rng(seed, stream);
  Path p;
  p.kind = PathKind::BrownianMotion;
  p.start = x;
  p.times.resize(n_steps + 1);
  p.positions.resize(n_steps + 1);
  const double sd = std::sqrt(T / static_cast<double>(n_steps));
  p.times[0] = 0.0;
  p.positions[0] = x;
  Vec2 cur = x;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    cur.x += sd * rng.normal();
    cur.y += sd * rng.normal();
    p.times[k] = T * (static_cast<double>(k) / static_cast<double>(n_steps));
    p.positions[k] = cur;
  }
  p.end = cur;
  return p;
}

/// Brownian bridge from x to y with lifetime t via the driving-noise
/// representation b_s = x + B_s - (s/t)(x + B_t - y); endpoints are pinned
/// exactly.
inline Path sample_bridge(Vec2 x, Vec2 y, double t, std::size_t n_steps,
                          std::uint64_t seed, std::uint64_t stream = 0) {
  if (n_steps < 1) throw DomainError("sample_bridge: n_steps must be >= 1");
  if (!(t > 0.0)) throw DomainError("sample_bridge: t must be > 0");
  Rng rng(seed, stream);
  Path p;
  p.kind = PathKind::BrownianBridge;
  p.start = x;
  p.end = y;
  p.times.resize(n_steps + 1);
  p.positions.resize(n_steps + 1);
  std::vector<Vec2> noise(n_steps + 1);
  noise[0] = {0, 0};
  const double sd = std::sqrt(t / static_cast<double>(n_steps));
  for (std::size_t k = 1; k <= n_steps; ++k) {
    noise[k].x = noise[k - 1].x + sd * rng.normal();
    noise[k].y = noise[k - 1].y + sd * rng.normal();
  }
  const Vec2 defect = {x.x + noise[n_steps].x - y.x, x.y + noise[n_steps].y - y.y};
  p.times[0] = 0.0;
  p.positions[0] = x;
  for (std::size_t k = 1; k < n_steps; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n_steps);
    p.times[k] = t * frac;
    p.positions[k] = {x.x + noise[k].x - frac * defect.x,
                      x.y + noise[k].y - frac * defect.y};
  }
  p.times[n_steps] = t;
  p.positions[n_steps] = y;
  return p;
}

struct TimeChange {
  std::vector<double> times;     // same grid as the source path
  std::vector<double> F_values;  // nondecreasing, F(0) = 0
  double gamma = 0.0;
  double eps = 1.0;

  double total() const { return F_values.back(); }
};

struct PartialClock {
  TimeChange clock;
  // Index of the first path sample outside the interpolable region, if the
  // path left the field; the clock is valid up to (and excluding) it.
  std::optional<std::size_t> exit_index;
};

/// Clock computation that stops at the first sample outside the field and
/// reports it instead of throwing.
inline PartialClock liouville_clock_partial(const Path& path,
                                            const FieldSample& field,
                                            double gamma) {
  if (!(gamma >= 0.0 && gamma < 2.0))
    throw DomainError("liouville_clock: gamma must lie in [0,2)");
  if (path.size() < 2) throw DomainError("liouville_clock: empty path");
  PartialClock out;
  TimeChange& tc = out.clock;
  tc.gamma = gamma;
  tc.eps = field.eps;
  const std::size_t n = path.size();
  tc.times.reserve(n);
  tc.F_values.reserve(n);
  tc.times.push_back(path.times[0]);
  tc.F_values.push_back(0.0);
  if (gamma == 0.0) {
    // Exact identity clock; the field plays no role.
    for (std::size_t k = 1; k < n; ++k) {
      tc.times.push_back(path.times[k]);
      tc.F_values.push_back(path.times[k]);
    }
    return out;
  }
  const double half_var = 0.5 * gamma * gamma * field.model.variance(field.eps);
  double F = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!field.interpolable(path.positions[k])) {
      out.exit_index = k;
      return out;
    }
    const double w = std::exp(gamma * field.bilinear(path.positions[k]) - half_var);
    F += w * (path.times[k + 1] - path.times[k]);
    tc.times.push_back(path.times[k + 1]);
    tc.F_values.push_back(F);
  }
  if (!field.interpolable(path.positions[n - 1])) out.exit_index = n - 1;
  return out;
}

/// Liouville clock along a path. Throws OutOfDomain at the first sample that
/// leaves the field.
inline TimeChange liouville_clock(const Path& path, const FieldSample& field,
                                  double gamma) {
  PartialClock pc = liouville_clock_partial(path, field, gamma);
  if (pc.exit_index)
    throw OutOfDomain("liouville_clock: path exits the field domain at sample " +
                          std::to_string(*pc.exit_index),
                      *pc.exit_index);
  return pc.clock;
}

/// Re-index the path by the piecewise-linear inverse of its clock, sampled
/// on a uniform grid of Liouville times in [0, F(T)] with as many points as
/// the input.
inline Path lbm_path(const Path& path, const TimeChange& clock) {
  const std::size_t n = path.size();
  if (clock.times.size() != n)
    throw DomainError("lbm_path: clock was not built from this path");
  for (std::size_t k = 1; k < n; ++k)
    if (!(clock.F_values[k] >= clock.F_values[k - 1]))
      throw InvariantViolation("lbm_path: clock is not monotone");
  const double FT = clock.F_values.back();
  Path out;
  out.kind = path.kind;
  out.start = path.start;
  out.times.resize(n);
  out.positions.resize(n);
  const std::size_t steps = n - 1;
  std::size_t seg = 0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double tau = FT * (static_cast<double>(i) / static_cast<double>(steps));
    while (seg + 2 < n && clock.F_values[seg + 1] <= tau) ++seg;
    const double f0 = clock.F_values[seg];
    const double f1 = clock.F_values[seg + 1];
    const double frac = f1 > f0 ? std::clamp((tau - f0) / (f1 - f0), 0.0, 1.0) : 0.0;
    out.times[i] = tau;
    out.positions[i] = {
        path.positions[seg].x + frac * (path.positions[seg + 1].x - path.positions[seg].x),
        path.positions[seg].y + frac * (path.positions[seg + 1].y - path.positions[seg].y)};
  }
  // The inverse hits F(T) at the last node.
  out.positions[steps] = path.positions[steps];
  out.end = out.positions[steps];
  return out;
}

/// First time the path leaves the closed ball B(center, radius), linearly
/// interpolated in the distance between the straddling grid times; nullopt
/// if it never exits.
inline std::optional<double> exit_time(const Path& path, Vec2 center,
                                       double radius) {
  if (!(radius > 0.0)) throw DomainError("exit_time: radius must be > 0");
  double prev_d = dist(path.positions[0], center);
  if (prev_d > radius) return 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double d = dist(path.positions[k], center);
    if (d > radius) {
      const double t0 = path.times[k - 1];
      const double t1 = path.times[k];
      return t0 + (radius - prev_d) / (d - prev_d) * (t1 - t0);
    }
    prev_d = d;
  }
  return std::nullopt;
}

}  // namespace lqg
