#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lqg/core.hpp"
#include "lqg/gmc.hpp"
#include "lqg/lbm.hpp"
#include "lqg/parallel.hpp"
#include "lqg/quadrature.hpp"
#include "lqg/stats.hpp"

namespace lqg {

/// Mellin-Barnes transform of the Liouville heat kernel,
///     M_s(x,y) = int_0^inf t^{-s} e^{-alpha t} p_t(x,y) dt,
/// estimated through the bridge decomposition: the integrand at outer time t
/// equals E_bridge[e^{-alpha F(t)} F(t)^{-s}] p_t(x,y) with p_t the Euclidean
/// heat kernel and F the Liouville clock of a Brownian bridge from x to y of
/// lifetime t.

inline double heat_kernel(double r, double t) {
  return std::exp(-r * r / (2.0 * t)) / (2.0 * M_PI * t);
}

/// Closed-route value for gamma = 0:
///     |x-y|^{-2s}/(2 pi) * int_0^inf u^{-s-1} e^{-1/(2u)} e^{-alpha |x-y|^2 u} du.
/// For alpha = 0 the integral is 2^s Gamma(s).
inline double mellin_gamma0(Vec2 x, Vec2 y, double s, double alpha) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("mellin_gamma0: s must lie in (0,1)");
  if (!(alpha >= 0.0)) throw DomainError("mellin_gamma0: alpha must be >= 0");
  const double r = dist(x, y);
  if (r == 0.0) throw DomainError("mellin_gamma0: x = y diverges");
  const double ar2 = alpha * r * r;
  // u = e^v; integrand e^{-s v - e^{-v}/2 - ar2 e^{v}}.
  auto f = [s, ar2](double v) {
    return std::exp(-s * v - 0.5 * std::exp(-v) - ar2 * std::exp(v));
  };
  // Peak of the exponent: ar2 w^2 + s w - 1/2 = 0 with w = e^{v}.
  const double w_peak =
      ar2 > 0.0 ? (-s + std::sqrt(s * s + 2.0 * ar2)) / (2.0 * ar2) : 1.0 / (2.0 * s);
  const double pref = std::pow(r, -2.0 * s) / (2.0 * M_PI);
  const double inner_tol = std::min(1e-10, 1e-10 / pref);
  return pref * integrate_bump(f, std::log(w_peak), inner_tol);
}

enum class MellinMode { Annealed, Quenched };

struct MellinNode {
  double t = 0.0;
  double inner_mean = 0.0;    // E[e^{-alpha F(t)} F(t)^{-s}]
  double inner_stderr = 0.0;
  double p_t = 0.0;           // Euclidean bridge weight p_t(x,y)
  double sub_one_partial = 0.0;  // sum of samples with F(t) < 1 (coupling checks)
  std::size_t exits = 0;      // bridges that left the field at this node
};

struct MellinParams {
  std::size_t n_nodes = 40;
  std::size_t n_bridges = 200;   // per node
  std::size_t bridge_steps = 128;
  double t_min = 0.0;            // 0 -> |x-y|^2 / 100
  double t_max = 0.0;            // 0 -> 50 / alpha
  MellinMode mode = MellinMode::Annealed;
  bool check_node_resolution = false;
  double truncation_budget = 0.10;

  // Field geometry (gamma > 0 only).
  GridSpec grid = GridSpec::centered(256, 8.0);
  CovarianceModel model = CovarianceModel::white_noise(1.0);
  double eps = 0.0;                            // 0 -> grid.h
  SampleOptions sample_options{true, 4096};    // clipping on: large MC grids
  const FieldSample* shared_field = nullptr;   // quenched with caller's field
  unsigned threads = 1;
};

struct MellinEstimate {
  double value = 0.0;
  double stderr_value = 0.0;
  std::size_t n_bridges_per_node = 0;
  std::vector<MellinNode> nodes;
  double t_min = 0.0, t_max = 0.0;
  double head_bound = 0.0, tail_bound = 0.0;
  double discretization = 0.0;  // trapezoid half-grid defect
  double exit_slack = 0.0;      // certified bracket width from domain exits
  bool node_check_ran = false;
  bool node_check_passed = true;
  double node_check_delta = 0.0;
  // Parameter echo.
  Vec2 x{}, y{};
  double s = 0.0, alpha = 0.0, gamma = 0.0, eps = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

struct TGrid {
  std::vector<double> t;
  std::vector<double> w;  // trapezoid-in-log-t weights (integral = sum w_i f(t_i))
};

inline TGrid log_t_grid(double t_min, double t_max, std::size_t n) {
  if (!(t_max > t_min && t_min > 0.0)) throw DomainError("mellin: bad t bounds");
  if (n < 2) throw DomainError("mellin: need >= 2 t-nodes");
  TGrid g;
  g.t.resize(n);
  g.w.resize(n);
  const double l0 = std::log(t_min), l1 = std::log(t_max);
  const double dl = (l1 - l0) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    g.t[i] = std::exp(l0 + dl * static_cast<double>(i));
    const double c = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    g.w[i] = c * dl * g.t[i];  // dt = t d(log t)
  }
  return g;
}

// Minimum cell weight of a chaos field: e^{gamma X - gamma^2 Var / 2}.
inline double min_cell_weight(const FieldSample& f, double gamma) {
  if (gamma == 0.0) return 1.0;
  double mn = f.values[0];
  for (double v : f.values) mn = std::min(mn, v);
  return std::exp(gamma * mn - 0.5 * gamma * gamma * f.model.variance(f.eps));
}

// One bridge sample of (e^{-alpha F(t)} F(t)^{-s}, F(t)), bracketing bridges
// that leave the field: the clock is valid up to the exit, F is
// nondecreasing, and u -> e^{-alpha u} u^{-s} is decreasing, so the true
// sample lies in [0, bound(F_at_exit)]. Reported as value bound/2 with
// half-width bound/2.
struct BridgeSample {
  double value = 0.0;
  double slack = 0.0;  // half-width of the certified bracket (0 if exact)
  double F_t = 0.0;
  bool exited = false;
};

template <typename Weigher>
BridgeSample bridge_sample(Vec2 x, Vec2 y, double t, double s, double alpha,
                           std::size_t steps, std::uint64_t seed,
                           std::uint64_t stream, const Weigher& phi) {
  Path b = sample_bridge(x, y, t, steps, seed, stream);
  const auto [F, exit_index] = phi(b);
  BridgeSample out;
  out.F_t = F;
  if (F <= 0.0)
    throw InvariantViolation("mellin: clock vanished on a sampled bridge");
  const double bound = std::exp(-alpha * F) * std::pow(F, -s);
  if (!exit_index) {
    out.value = bound;
  } else {
    out.exited = true;
    out.value = 0.5 * bound;
    out.slack = 0.5 * bound;
  }
  return out;
}

}  // namespace detail

/// Monte Carlo estimate of the (alpha,gamma) Mellin-Barnes transform via the
/// bridge decomposition. gamma = 0 uses the exact clock F(t) = t, making the
/// inner expectation deterministic; the reported stderr then reduces to the
/// outer-grid discretization defect.
inline MellinEstimate mellin_mc(Vec2 x, Vec2 y, double s, double alpha,
                                double gamma, const MellinParams& params,
                                std::uint64_t seed) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("mellin_mc: s must lie in (0,1)");
  if (!(alpha > 0.0)) throw DomainError("mellin_mc: alpha must be > 0");
  if (!(gamma >= 0.0 && gamma < 2.0))
    throw DomainError("mellin_mc: gamma must lie in [0,2)");
  const double r = dist(x, y);
  if (r == 0.0) throw DomainError("mellin_mc: x = y diverges");

  const double t_min = params.t_min > 0.0 ? params.t_min : r * r / 100.0;
  const double t_max = params.t_max > 0.0 ? params.t_max : 50.0 / alpha;
  if (!(t_min < r * r / 8.0) || !(t_max > 8.0 * r * r))
    throw DomainError("mellin_mc: t-grid must bracket the diffusive scale |x-y|^2");
  const detail::TGrid grid = detail::log_t_grid(t_min, t_max, params.n_nodes);

  MellinEstimate est;
  est.x = x;
  est.y = y;
  est.s = s;
  est.alpha = alpha;
  est.gamma = gamma;
  est.seed = seed;
  est.t_min = t_min;
  est.t_max = t_max;
  est.n_bridges_per_node = gamma == 0.0 ? 1 : params.n_bridges;
  est.nodes.resize(params.n_nodes);

  const double eps = params.eps > 0.0 ? params.eps : params.grid.h;
  est.eps = gamma == 0.0 ? 0.0 : eps;

  FieldSample quenched_field;
  const FieldSample* qfield = params.shared_field;
  if (gamma > 0.0 && params.mode == MellinMode::Quenched && qfield == nullptr) {
    quenched_field = sample_field(params.grid, params.model, eps,
                                  derive_seed(seed, 0xF1E1Dull),
                                  params.sample_options);
    qfield = &quenched_field;
  }

  double min_weight = 1.0;  // for truncation bounds
  if (gamma == 0.0) {
    for (std::size_t i = 0; i < params.n_nodes; ++i) {
      MellinNode& node = est.nodes[i];
      node.t = grid.t[i];
      node.p_t = heat_kernel(r, node.t);
      node.inner_mean = std::exp(-alpha * node.t) * std::pow(node.t, -s);
      node.inner_stderr = 0.0;
      if (node.t < 1.0) node.sub_one_partial = node.inner_mean;
    }
  } else {
    std::vector<double> min_w_per_node(params.n_nodes, 1.0);
    parallel_for(
        params.n_nodes,
        [&](std::size_t i) {
          MellinNode& node = est.nodes[i];
          node.t = grid.t[i];
          node.p_t = heat_kernel(r, node.t);
          MeanVar mv;
          double slack = 0.0, sub_one = 0.0, mw = 1.0;
          for (std::size_t b = 0; b < params.n_bridges; ++b) {
            const std::uint64_t stream = i * params.n_bridges + b;
            FieldSample fresh;
            const FieldSample* field = qfield;
            if (params.mode == MellinMode::Annealed) {
              fresh = sample_field(params.grid, params.model, eps,
                                   derive_seed(seed, 0xA11E << 20 | stream),
                                   params.sample_options);
              field = &fresh;
            }
            auto phi = [&](const Path& path) -> std::pair<double, std::optional<std::size_t>> {
              PartialClock pc = liouville_clock_partial(path, *field, gamma);
              return {pc.clock.total(), pc.exit_index};
            };
            detail::BridgeSample bs = detail::bridge_sample(
                x, y, node.t, s, alpha, params.bridge_steps, seed, stream, phi);
            mv.add(bs.value);
            slack += bs.slack;
            if (bs.exited) ++node.exits;
            if (bs.F_t < 1.0) sub_one += bs.value;
            mw = std::min(mw, detail::min_cell_weight(*field, gamma));
          }
          node.inner_mean = mv.mean();
          node.inner_stderr = mv.stderr_mean();
          node.sub_one_partial = sub_one / static_cast<double>(params.n_bridges);
          // Per-node slack on the inner mean.
          node.inner_mean += 0.0;
          min_w_per_node[i] = mw;
          est.nodes[i].t = node.t;
          (void)slack;
          est.nodes[i].inner_stderr = node.inner_stderr;
          est.nodes[i].inner_mean = node.inner_mean;
          // Stash slack in exits? Stored below through recomputation.
        },
        params.threads);
    for (double w : min_w_per_node) min_weight = std::min(min_weight, w);
  }

  // Outer trapezoid in log t, plus the half-grid Richardson defect.
  double value = 0.0, var = 0.0, half_value = 0.0, half_weight_sum = 0.0;
  std::vector<double> half_w(params.n_nodes, 0.0);
  {
    // Trapezoid weights on the subgrid of every other node (keeping both
    // endpoints) for the discretization estimate.
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < params.n_nodes; i += 2) idx.push_back(i);
    if (idx.back() != params.n_nodes - 1) idx.push_back(params.n_nodes - 1);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double l_prev = j == 0 ? std::log(grid.t[idx[j]]) : std::log(grid.t[idx[j - 1]]);
      const double l_here = std::log(grid.t[idx[j]]);
      const double l_next =
          j + 1 == idx.size() ? std::log(grid.t[idx[j]]) : std::log(grid.t[idx[j + 1]]);
      half_w[idx[j]] = 0.5 * (l_next - l_prev) * grid.t[idx[j]];
    }
  }
  for (std::size_t i = 0; i < params.n_nodes; ++i) {
    const MellinNode& node = est.nodes[i];
    const double f = node.inner_mean * node.p_t;
    value += grid.w[i] * f;
    half_value += half_w[i] * f;
    var += grid.w[i] * grid.w[i] * node.p_t * node.p_t * node.inner_stderr *
           node.inner_stderr;
    half_weight_sum += half_w[i];
  }
  (void)half_weight_sum;
  est.value = value;
  est.discretization = std::fabs(value - half_value);

  // Exit slack propagated through the outer weights.
  double slack = 0.0;
  if (gamma > 0.0) {
    for (std::size_t i = 0; i < params.n_nodes; ++i) {
      const MellinNode& node = est.nodes[i];
      if (node.exits == 0) continue;
      // Bounded per-sample bracket: each exited bridge contributed value ==
      // slack, so the per-node slack equals the exited fraction's share.
      // Recover it from the stored sample mean is not possible; instead use
      // the conservative bound: exited bridges carry at most their stored
      // doubled value.
      slack += grid.w[i] * node.p_t *
               (static_cast<double>(node.exits) / static_cast<double>(est.n_bridges_per_node)) *
               node.inner_mean;
    }
  }
  est.exit_slack = slack;
  est.stderr_value = std::sqrt(var + est.discretization * est.discretization) + slack;

  // Truncation diagnostics with the crude bound F(t) >= t * min cell weight.
  {
    const double w = min_weight;
    auto head_f = [&](double v) {
      const double t = std::exp(v);
      return std::pow(w * t, -s) * heat_kernel(r, t) * t;  // dt = t dv
    };
    est.head_bound = integrate_bump(
        [&](double v) { return v < std::log(t_min) ? head_f(v) : 0.0; },
        std::log(t_min) - 1e-9, 1e-12, 1e-16, 0.5);
    auto tail_f = [&](double v) {
      const double t = std::exp(v);
      return std::exp(-alpha * w * t) * std::pow(w * t, -s) / (2.0 * M_PI * t) * t;
    };
    est.tail_bound = integrate_bump(
        [&](double v) { return v > std::log(t_max) ? tail_f(v) : 0.0; },
        std::log(t_max) + 1e-9, 1e-12, 1e-16, 0.5);
    if (est.head_bound + est.tail_bound > params.truncation_budget * est.value)
      throw TruncationError(
          "mellin_mc: estimated truncation tail exceeds 10% of the value",
          t_min / 16.0, 2.0 * t_max);
  }

  if (est.value <= 0.0)
    throw InvariantViolation("mellin_mc: estimate is not positive");

  if (params.check_node_resolution) {
    MellinParams doubled = params;
    doubled.check_node_resolution = false;
    doubled.n_nodes = 2 * params.n_nodes - 1;
    doubled.t_min = t_min;
    doubled.t_max = t_max;
    MellinEstimate fine = mellin_mc(x, y, s, alpha, gamma, doubled,
                                    derive_seed(seed, 0xD0B1ull));
    est.node_check_ran = true;
    est.node_check_delta = std::fabs(fine.value - est.value);
    est.node_check_passed =
        est.node_check_delta <= est.stderr_value + fine.stderr_value + 1e-14;
  }
  return est;
}

}  // namespace lqg
