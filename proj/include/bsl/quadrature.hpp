#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "bsl/error.hpp"

namespace bsl {

/// Uniform grid on [lower, upper] with both endpoints as nodes.
struct DomainSpec {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t grid_points = 101;

  void validate() const {
    require(std::isfinite(lower) && std::isfinite(upper), ErrorKind::InvalidArgument,
            "domain bounds must be finite");
    require(lower < upper, ErrorKind::InvalidArgument, "domain requires lower < upper");
    require(grid_points >= 101, ErrorKind::InvalidArgument, "domain requires at least 101 nodes");
  }

  double diameter() const { return upper - lower; }
  double step() const { return (upper - lower) / static_cast<double>(grid_points - 1); }
  double node(std::size_t i) const {
    return i + 1 == grid_points ? upper : lower + step() * static_cast<double>(i);
  }
  bool contains(double x) const { return x >= lower && x <= upper; }

  std::vector<double> nodes() const {
    std::vector<double> out(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) out[i] = node(i);
    return out;
  }

  friend bool operator==(const DomainSpec& a, const DomainSpec& b) {
    return a.lower == b.lower && a.upper == b.upper && a.grid_points == b.grid_points;
  }
};

/// Composite trapezoid weights: h/2 at the ends, h inside.
inline std::vector<double> trapezoid_weights(std::size_t n, double h) {
  std::vector<double> w(n, h);
  if (n > 0) {
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
  }
  return w;
}

inline std::vector<double> trapezoid_weights(const DomainSpec& d) {
  return trapezoid_weights(d.grid_points, d.step());
}

inline double trapezoid(const std::vector<double>& f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

/// Composite Simpson; an odd interval count finishes with a 3/8 panel.
inline double simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  if (n < 3) return trapezoid(f, h);
  const std::size_t intervals = n - 1;
  std::size_t even_end = intervals % 2 == 0 ? intervals : intervals - 3;
  double s = 0.0;
  for (std::size_t i = 0; i + 2 <= even_end; i += 2) s += f[i] + 4.0 * f[i + 1] + f[i + 2];
  s *= h / 3.0;
  if (intervals % 2 == 1) {
    if (intervals == 1) return trapezoid(f, h);
    const std::size_t i = even_end;
    s += 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  return s;
}

inline double weighted_sum(const std::vector<double>& w, const std::vector<double>& f) {
  return std::inner_product(w.begin(), w.end(), f.begin(), 0.0);
}

/// Discrete reference measure: atoms with nonnegative weights. A uniform grid
/// with trapezoid weights is the default; small hand fixtures build their own.
struct Lattice {
  std::vector<double> nodes;
  std::vector<double> weights;

  static Lattice from_domain(const DomainSpec& d) { return {d.nodes(), trapezoid_weights(d)}; }

  std::size_t size() const { return nodes.size(); }

  double integrate(const std::vector<double>& f) const { return weighted_sum(weights, f); }
};

}  // namespace bsl
