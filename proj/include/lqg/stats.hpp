#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "lqg/core.hpp"

namespace lqg {

/// Small statistical toolbox: running moments, deterministic reductions,
/// regression, rank correlation and the Hill tail-index estimator.

class MeanVar {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double stderr_mean() const {
    return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Order-independent-by-construction tree sum: the reduction shape depends
/// only on the element count, so totals do not vary with scheduling.
inline double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n <= 128) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size() || n < 2) throw DomainError("fit_line: need >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (f.intercept + f.slope * xs[i]);
      ssr += r * r;
    }
    f.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

namespace detail {
inline std::vector<double> ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace detail

/// Spearman rank correlation (tie-aware).
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DomainError("spearman: need matched samples of size >= 2");
  const auto rx = detail::ranks(xs);
  const auto ry = detail::ranks(ys);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= rx.size();
  my /= ry.size();
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

struct HillEstimate {
  double alpha = 0.0;
  double stderr_alpha = 0.0;
  std::size_t k = 0;  // order statistics used
};

/// Hill tail-index estimator over the top `top_fraction` order statistics.
inline HillEstimate hill_tail_exponent(std::span<const double> values,
                                       double top_fraction = 0.01) {
  if (!(top_fraction > 0.0 && top_fraction < 1.0))
    throw DomainError("hill_tail_exponent: top_fraction must lie in (0,1)");
  const std::size_t n = values.size();
  if (static_cast<double>(n) < 100.0 / top_fraction)
    throw DomainError("hill_tail_exponent: need at least 100/top_fraction samples");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x))
      throw DomainError("hill_tail_exponent: values must be positive finite");
  std::sort(v.begin(), v.end(), std::greater<>());
  const std::size_t k = static_cast<std::size_t>(top_fraction * n);
  if (v.front() == v.back() || v[0] == v[k])
    throw DomainError("hill_tail_exponent: degenerate (constant) input");
  double s = 0.0;
  const double log_xk = std::log(v[k]);
  for (std::size_t i = 0; i < k; ++i) s += std::log(v[i]) - log_xk;
  HillEstimate e;
  e.k = k;
  e.alpha = static_cast<double>(k) / s;
  e.stderr_alpha = e.alpha / std::sqrt(static_cast<double>(k));
  return e;
}

}  // namespace lqg
