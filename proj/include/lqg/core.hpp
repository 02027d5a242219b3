#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lqg {

/// Points, grids and the error taxonomy shared by every module.

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument or precondition violation. Message names the offending
// parameter.
struct DomainError : Error {
  using Error::Error;
};

// Circulant embedding produced significantly negative eigenvalues and
// clipping was not enabled.
struct EmbeddingError : Error {
  using Error::Error;
};

// A path left the sampled field; carries the first offending sample index.
struct OutOfDomain : Error {
  std::size_t exit_index;
  OutOfDomain(const std::string& what, std::size_t idx)
      : Error(what), exit_index(idx) {}
};

// Estimated truncation error of a t-integral exceeded its budget.
struct TruncationError : Error {
  double suggested_t_min;
  double suggested_t_max;
  TruncationError(const std::string& what, double tmin, double tmax)
      : Error(what), suggested_t_min(tmin), suggested_t_max(tmax) {}
};

// An internal consistency condition failed (should never happen).
struct InvariantViolation : Error {
  using Error::Error;
};

// A scan for a sign change / divergence bracket found none.
struct BracketNotFound : Error {
  using Error::Error;
};

/// Regular grid of nx x ny cells of spacing h. `origin` is the lower-left
/// corner of cell (0,0); values attach to cell centers.
struct GridSpec {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  double h = 0.0;
  Vec2 origin{0.0, 0.0};

  void validate() const {
    if (nx == 0 || ny == 0) throw DomainError("GridSpec: nx*ny must be >= 1");
    if (!(h > 0.0) || !std::isfinite(h))
      throw DomainError("GridSpec: h must be positive");
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y))
      throw DomainError("GridSpec: origin must be finite");
  }

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }

  Vec2 cell_center(std::uint32_t ix, std::uint32_t iy) const {
    return {origin.x + (ix + 0.5) * h, origin.y + (iy + 0.5) * h};
  }

  std::size_t index(std::uint32_t ix, std::uint32_t iy) const {
    return static_cast<std::size_t>(iy) * nx + ix;
  }

  // Grid rectangle covered by the cells.
  double x_min() const { return origin.x; }
  double y_min() const { return origin.y; }
  double x_max() const { return origin.x + nx * h; }
  double y_max() const { return origin.y + ny * h; }

  bool contains(Vec2 p) const {
    return p.x >= x_min() && p.x <= x_max() && p.y >= y_min() && p.y <= y_max();
  }

  /// Square grid of `n` cells per side centered on `center`, covering
  /// [-extent/2, extent/2]^2 around it.
  static GridSpec centered(std::uint32_t n, double extent, Vec2 center = {0, 0}) {
    GridSpec g;
    g.nx = g.ny = n;
    g.h = extent / n;
    g.origin = {center.x - extent / 2, center.y - extent / 2};
    return g;
  }
};

inline constexpr const char* artifact_version() {
#ifdef LQG_VERSION
  return LQG_VERSION;
#else
  return "0.0.0";
#endif
}

}  // namespace lqg
