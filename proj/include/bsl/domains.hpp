#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "bsl/error.hpp"
#include "bsl/quadrature.hpp"

namespace bsl {

inline double normal_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

inline double normal_logpdf(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * z * z / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct Gaussian1D {
  double mean = 0.0;
  double variance = 1.0;

  void validate() const {
    require(std::isfinite(mean), ErrorKind::NonFinite, "gaussian mean must be finite");
    require(variance > 0.0 && std::isfinite(variance), ErrorKind::DegenerateVariance,
            "gaussian variance must be positive and finite");
  }

  double sd() const { return std::sqrt(variance); }
  double pdf(double x) const { return normal_pdf(x, mean, variance); }
  double logpdf(double x) const { return normal_logpdf(x, mean, variance); }
  double cdf(double x) const { return std_normal_cdf((x - mean) / sd()); }
};

/// Density with respect to Lebesgue measure sampled on the grid nodes.
/// An unnormalized instance is a positively scaled measure.
struct GridDensity {
  DomainSpec domain;
  std::vector<double> values;
  bool normalized = true;

  double mass() const { return trapezoid(values, domain.step()); }

  void validate() const {
    domain.validate();
    require(values.size() == domain.grid_points, ErrorKind::InvalidArgument,
            "grid density needs one value per node");
    for (double v : values) {
      require(std::isfinite(v), ErrorKind::NonFinite, "grid density value not finite");
      require(v >= 0.0, ErrorKind::InvalidArgument, "grid density value negative");
    }
    const double m = mass();
    require(std::isfinite(m) && m > 0.0, ErrorKind::Unnormalized, "grid density mass must be positive");
    if (normalized)
      require(std::abs(m - 1.0) <= 1e-8, ErrorKind::Unnormalized, "grid density does not integrate to 1");
  }
};

struct ParticleSet {
  std::vector<double> points;
  std::vector<double> weights;

  static ParticleSet uniform(std::vector<double> points) {
    const double w = 1.0 / static_cast<double>(points.size());
    std::vector<double> weights(points.size(), w);
    return {std::move(points), std::move(weights)};
  }

  std::size_t size() const { return points.size(); }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) m += weights[i] * points[i];
    return m;
  }

  void validate() const {
    require(!points.empty(), ErrorKind::InvalidArgument, "particle set is empty");
    require(points.size() == weights.size(), ErrorKind::InvalidArgument,
            "particle points and weights differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      require(std::isfinite(points[i]) && std::isfinite(weights[i]), ErrorKind::NonFinite,
              "particle entry not finite");
      require(weights[i] >= 0.0, ErrorKind::InvalidArgument, "particle weight negative");
      s += weights[i];
    }
    require(std::abs(s - 1.0) <= 1e-12, ErrorKind::Unnormalized, "particle weights must sum to 1");
  }
};

/// Joint density on X x W, row-major with index ix * n_w + iw.
struct JointGrid2D {
  DomainSpec x_domain;
  DomainSpec w_domain;
  std::vector<double> values;

  std::size_t nx() const { return x_domain.grid_points; }
  std::size_t nw() const { return w_domain.grid_points; }
  double& at(std::size_t ix, std::size_t iw) { return values[ix * nw() + iw]; }
  double at(std::size_t ix, std::size_t iw) const { return values[ix * nw() + iw]; }

  /// Product trapezoid weights in the same layout as values.
  std::vector<double> weights() const {
    const auto wx = trapezoid_weights(x_domain);
    const auto ww = trapezoid_weights(w_domain);
    std::vector<double> out(nx() * nw());
    for (std::size_t i = 0; i < nx(); ++i)
      for (std::size_t j = 0; j < nw(); ++j) out[i * nw() + j] = wx[i] * ww[j];
    return out;
  }

  double mass() const { return weighted_sum(weights(), values); }

  void validate() const {
    x_domain.validate();
    w_domain.validate();
    require(values.size() == nx() * nw(), ErrorKind::InvalidArgument, "joint grid size mismatch");
    for (double v : values) {
      require(std::isfinite(v), ErrorKind::NonFinite, "joint grid value not finite");
      require(v >= 0.0, ErrorKind::InvalidArgument, "joint grid value negative");
    }
    require(std::abs(mass() - 1.0) <= 1e-6, ErrorKind::Unnormalized, "joint grid does not integrate to 1");
  }

  GridDensity marginal_x() const {
    const auto ww = trapezoid_weights(w_domain);
    std::vector<double> m(nx(), 0.0);
    for (std::size_t i = 0; i < nx(); ++i)
      for (std::size_t j = 0; j < nw(); ++j) m[i] += ww[j] * at(i, j);
    return {x_domain, std::move(m), true};
  }
};

using Distribution = std::variant<Gaussian1D, GridDensity, ParticleSet, JointGrid2D>;

/// Probability mass outside [lower, upper].
inline double tail_mass(const Gaussian1D& g, const DomainSpec& d) {
  return std_normal_cdf((d.lower - g.mean) / g.sd()) + std_normal_cdf(-(d.upper - g.mean) / g.sd());
}

/// Pdf values on the nodes rescaled to unit trapezoid mass, without the tail check.
inline GridDensity grid_values(const Gaussian1D& g, const DomainSpec& d) {
  g.validate();
  d.validate();
  std::vector<double> v(d.grid_points);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = g.pdf(d.node(i));
  const double m = trapezoid(v, d.step());
  require(m > 0.0 && std::isfinite(m), ErrorKind::DomainTooSmall, "gaussian has no mass on the grid");
  for (double& x : v) x /= m;
  return {d, std::move(v), true};
}

inline GridDensity discretize(const Gaussian1D& g, const DomainSpec& d) {
  g.validate();
  d.validate();
  if (tail_mass(g, d) > 1e-10) fail(ErrorKind::DomainTooSmall, "gaussian tail mass beyond domain exceeds 1e-10");
  return grid_values(g, d);
}

inline std::pair<double, double> moments(const GridDensity& g) {
  const double h = g.domain.step();
  const double m0 = trapezoid(g.values, h);
  if (std::abs(m0 - 1.0) > 1e-8) fail(ErrorKind::Unnormalized, "moments need a normalized density");
  std::vector<double> f(g.values.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = g.domain.node(i) * g.values[i];
  const double mean = trapezoid(f, h) / m0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = g.domain.node(i) - mean;
    f[i] = z * z * g.values[i];
  }
  return {mean, trapezoid(f, h) / m0};
}

/// Density values of a continuous representation on the domain grid.
inline GridDensity as_grid(const Distribution& dist, const DomainSpec& d) {
  if (auto g = std::get_if<Gaussian1D>(&dist)) return grid_values(*g, d);
  if (auto gd = std::get_if<GridDensity>(&dist)) {
    if (!(gd->domain == d)) fail(ErrorKind::DomainMismatch, "grid density lives on a different domain");
    return *gd;
  }
  if (auto j = std::get_if<JointGrid2D>(&dist)) {
    if (!(j->x_domain == d)) fail(ErrorKind::DomainMismatch, "joint grid lives on a different domain");
    return j->marginal_x();
  }
  fail(ErrorKind::UnsupportedRepresentation, "particle sets have no density");
}

/// Inverse-CDF sampling of the piecewise-linear density.
template <class Rng>
std::vector<double> sample(const GridDensity& g, std::size_t n, Rng& rng) {
  const std::size_t m = g.values.size();
  const double h = g.domain.step();
  std::vector<double> cdf(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) cdf[i] = cdf[i - 1] + 0.5 * h * (g.values[i - 1] + g.values[i]);
  const double total = cdf.back();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) {
    const double u = unif(rng) * total;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    i = std::clamp<std::size_t>(i, 1, m - 1) - 1;
    // solve p0 t + (p1 - p0) t^2 / (2h) = r for t in [0, h]
    const double r = u - cdf[i], p0 = g.values[i], p1 = g.values[i + 1];
    const double a = (p1 - p0) / (2.0 * h);
    double t;
    if (std::abs(a) < 1e-14 * std::max(p0, 1e-300)) {
      t = p0 > 0.0 ? r / p0 : 0.5 * h;
    } else {
      const double disc = std::max(0.0, p0 * p0 + 4.0 * a * r);
      t = 2.0 * r / (p0 + std::sqrt(disc));
    }
    x = std::min(g.domain.node(i) + std::clamp(t, 0.0, h), g.domain.upper);
  }
  return out;
}

}  // namespace bsl
