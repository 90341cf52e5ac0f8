#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

#include "bsl/domains.hpp"
#include "bsl/error.hpp"
#include "bsl/quadrature.hpp"

namespace bsl {

enum class Metric { TV, Hellinger, W1 };
enum class DistanceMethod { ClosedForm, Quadrature, CdfL1, Empirical };

constexpr std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::TV: return "tv";
    case Metric::Hellinger: return "hellinger";
    case Metric::W1: return "w1";
  }
  return "?";
}

struct DistanceReport {
  Metric metric;
  double value;
  DistanceMethod method;
  double est_numerical_error;
};

namespace detail {

inline void reject_particles(const Distribution& a, const Distribution& b) {
  if (std::holds_alternative<ParticleSet>(a) || std::holds_alternative<ParticleSet>(b))
    fail(ErrorKind::UnsupportedRepresentation, "TV and Hellinger are not defined against a particle set here");
}

inline bool both_joint(const Distribution& a, const Distribution& b) {
  return std::holds_alternative<JointGrid2D>(a) && std::holds_alternative<JointGrid2D>(b);
}

inline void same_joint_layout(const JointGrid2D& a, const JointGrid2D& b) {
  if (!(a.x_domain == b.x_domain) || !(a.w_domain == b.w_domain))
    fail(ErrorKind::DomainMismatch, "joint grids on different domains");
}

inline std::vector<double> abs_diff(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> f(p.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::abs(p[i] - q[i]);
  return f;
}

inline std::vector<double> sqrt_diff_sq(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> f(p.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    f[i] = d * d;
  }
  return f;
}

inline double hellinger_from_integral(double integral) { return std::sqrt(std::max(0.0, 0.5 * integral)); }

/// Real roots of a x^2 + b x + c = 0, sorted.
inline std::vector<double> quadratic_roots(double a, double b, double c) {
  std::vector<double> r;
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) return r;
  if (std::abs(a) <= 1e-15 * scale) {
    if (b != 0.0) r.push_back(-c / b);
    return r;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return r;
  const double sq = std::sqrt(disc);
  const double qv = -0.5 * (b + std::copysign(sq, b));
  if (qv != 0.0) {
    r.push_back(qv / a);
    r.push_back(c / qv);
  } else {
    r.push_back(0.0);
  }
  std::sort(r.begin(), r.end());
  return r;
}

inline double tv_gaussian_closed(const Gaussian1D& a, const Gaussian1D& b) {
  const double qa = 0.5 / b.variance - 0.5 / a.variance;
  const double qb = a.mean / a.variance - b.mean / b.variance;
  const double qc = 0.5 * b.mean * b.mean / b.variance - 0.5 * a.mean * a.mean / a.variance +
                    0.5 * std::log(b.variance / a.variance);
  auto cuts = quadratic_roots(qa, qb, qc);
  // mass difference on each interval between pdf crossings
  std::vector<double> edges{-INFINITY};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(INFINITY);
  double tv = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double lo = edges[i], hi = edges[i + 1];
    double probe;
    if (std::isinf(lo) && std::isinf(hi)) probe = 0.5 * (a.mean + b.mean);
    else if (std::isinf(lo)) probe = hi - 1.0;
    else if (std::isinf(hi)) probe = lo + 1.0;
    else probe = 0.5 * (lo + hi);
    if (a.logpdf(probe) > b.logpdf(probe)) {
      const double pa = (std::isinf(hi) ? 1.0 : a.cdf(hi)) - (std::isinf(lo) ? 0.0 : a.cdf(lo));
      const double pb = (std::isinf(hi) ? 1.0 : b.cdf(hi)) - (std::isinf(lo) ? 0.0 : b.cdf(lo));
      tv += pa - pb;
    }
  }
  return std::clamp(tv, 0.0, 1.0);
}

inline double bhattacharyya_gaussian(const Gaussian1D& a, const Gaussian1D& b) {
  const double s = a.variance + b.variance;
  const double dm = a.mean - b.mean;
  return std::sqrt(2.0 * std::sqrt(a.variance * b.variance) / s) * std::exp(-dm * dm / (4.0 * s));
}

inline double hellinger_gaussian_closed(const Gaussian1D& a, const Gaussian1D& b) {
  return std::sqrt(std::max(0.0, 1.0 - bhattacharyya_gaussian(a, b)));
}

/// Right-continuous CDF of either a piecewise-linear grid density or an atom set.
class PiecewiseCdf {
 public:
  explicit PiecewiseCdf(const GridDensity& g) : grid_(true), domain_(g.domain), dens_(g.values) {
    const double h = domain_.step();
    node_cdf_.assign(dens_.size(), 0.0);
    for (std::size_t i = 1; i < dens_.size(); ++i)
      node_cdf_[i] = node_cdf_[i - 1] + 0.5 * h * (dens_[i - 1] + dens_[i]);
    const double total = node_cdf_.back();
    for (auto& v : node_cdf_) v /= total;
    for (auto& v : dens_) v /= total;
  }

  explicit PiecewiseCdf(const ParticleSet& p) : grid_(false) {
    std::vector<std::size_t> idx(p.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p.points[a] < p.points[b]; });
    double acc = 0.0;
    for (auto i : idx) {
      acc += p.weights[i];
      if (!atoms_.empty() && atoms_.back() == p.points[i]) {
        atom_cdf_.back() = acc;
      } else {
        atoms_.push_back(p.points[i]);
        atom_cdf_.push_back(acc);
      }
    }
    for (auto& v : atom_cdf_) v /= acc;
  }

  bool is_grid() const { return grid_; }
  const std::vector<double>& atoms() const { return atoms_; }

  double operator()(double x) const {
    if (grid_) {
      if (x <= domain_.lower) return 0.0;
      if (x >= domain_.upper) return 1.0;
      const double h = domain_.step();
      std::size_t i = static_cast<std::size_t>((x - domain_.lower) / h);
      i = std::min(i, dens_.size() - 2);
      const double t = x - domain_.node(i);
      return node_cdf_[i] + dens_[i] * t + (dens_[i + 1] - dens_[i]) * t * t / (2.0 * h);
    }
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
    if (it == atoms_.begin()) return 0.0;
    return atom_cdf_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
  }

  /// Value just left of x; differs from operator() only at atoms.
  double left_limit(double x) const {
    if (grid_) return (*this)(x);
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x);
    if (it == atoms_.begin()) return 0.0;
    return atom_cdf_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
  }

 private:
  bool grid_;
  DomainSpec domain_{};
  std::vector<double> dens_, node_cdf_;
  std::vector<double> atoms_, atom_cdf_;
};

/// Exact integral of |c0 + c1 s + c2 s^2| over [0, L].
inline double abs_quadratic_integral(double c0, double c1, double c2, double L) {
  auto F = [&](double s) { return c0 * s + 0.5 * c1 * s * s + c2 * s * s * s / 3.0; };
  std::vector<double> pts{0.0};
  for (double r : quadratic_roots(c2, c1, c0))
    if (r > 0.0 && r < L) pts.push_back(r);
  pts.push_back(L);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += std::abs(F(pts[i + 1]) - F(pts[i]));
  return total;
}

}  // namespace detail

inline DistanceReport tv(const Distribution& a, const Distribution& b, const DomainSpec& d) {
  detail::reject_particles(a, b);
  if (detail::both_joint(a, b)) {
    const auto& ja = std::get<JointGrid2D>(a);
    const auto& jb = std::get<JointGrid2D>(b);
    detail::same_joint_layout(ja, jb);
    const double v = 0.5 * weighted_sum(ja.weights(), detail::abs_diff(ja.values, jb.values));
    return {Metric::TV, std::min(v, 1.0), DistanceMethod::Quadrature, 0.0};
  }
  const auto pa = as_grid(a, d);
  const auto pb = as_grid(b, d);
  const auto f = detail::abs_diff(pa.values, pb.values);
  const double h = d.step();
  const double trap = 0.5 * trapezoid(f, h);
  if (auto ga = std::get_if<Gaussian1D>(&a)) {
    if (auto gb = std::get_if<Gaussian1D>(&b)) {
      const double closed = detail::tv_gaussian_closed(*ga, *gb);
      return {Metric::TV, closed, DistanceMethod::ClosedForm, std::abs(closed - trap)};
    }
  }
  return {Metric::TV, std::min(trap, 1.0), DistanceMethod::Quadrature, std::abs(trap - 0.5 * simpson(f, h))};
}

inline DistanceReport hellinger(const Distribution& a, const Distribution& b, const DomainSpec& d) {
  detail::reject_particles(a, b);
  if (detail::both_joint(a, b)) {
    const auto& ja = std::get<JointGrid2D>(a);
    const auto& jb = std::get<JointGrid2D>(b);
    detail::same_joint_layout(ja, jb);
    const double v = detail::hellinger_from_integral(weighted_sum(ja.weights(), detail::sqrt_diff_sq(ja.values, jb.values)));
    return {Metric::Hellinger, std::min(v, 1.0), DistanceMethod::Quadrature, 0.0};
  }
  const auto pa = as_grid(a, d);
  const auto pb = as_grid(b, d);
  const auto f = detail::sqrt_diff_sq(pa.values, pb.values);
  const double h = d.step();
  const double trap = detail::hellinger_from_integral(trapezoid(f, h));
  if (auto ga = std::get_if<Gaussian1D>(&a)) {
    if (auto gb = std::get_if<Gaussian1D>(&b)) {
      const double closed = detail::hellinger_gaussian_closed(*ga, *gb);
      return {Metric::Hellinger, closed, DistanceMethod::ClosedForm, std::abs(closed - trap)};
    }
  }
  const double simp = detail::hellinger_from_integral(simpson(f, h));
  return {Metric::Hellinger, std::min(trap, 1.0), DistanceMethod::Quadrature, std::abs(trap - simp)};
}

inline DistanceReport w1(const Distribution& a, const Distribution& b, const DomainSpec& d) {
  d.validate();
  auto make = [&](const Distribution& x) -> detail::PiecewiseCdf {
    if (auto p = std::get_if<ParticleSet>(&x)) {
      p->validate();
      for (double v : p->points)
        if (!d.contains(v)) fail(ErrorKind::DomainMismatch, "particle outside the domain");
      return detail::PiecewiseCdf(*p);
    }
    return detail::PiecewiseCdf(as_grid(x, d));
  };
  const auto fa = make(a);
  const auto fb = make(b);

  std::vector<double> cuts = d.nodes();
  for (const auto* f : {&fa, &fb})
    if (!f->is_grid()) cuts.insert(cuts.end(), f->atoms().begin(), f->atoms().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double exact = 0.0, trap = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1], L = hi - lo;
    // both CDFs are at most quadratic on (lo, hi)
    const double d0 = fa(lo) - fb(lo);
    const double dm = fa(lo + 0.5 * L) - fb(lo + 0.5 * L);
    const double d1 = fa.left_limit(hi) - fb.left_limit(hi);
    const double c0 = d0;
    const double c2 = 2.0 * (d0 - 2.0 * dm + d1) / (L * L);
    const double c1 = (d1 - d0) / L - c2 * L;
    exact += detail::abs_quadratic_integral(c0, c1, c2, L);
    trap += 0.5 * L * (std::abs(d0) + std::abs(d1));
  }
  const bool empirical = std::holds_alternative<ParticleSet>(a) && std::holds_alternative<ParticleSet>(b);
  return {Metric::W1, exact, empirical ? DistanceMethod::Empirical : DistanceMethod::CdfL1, std::abs(exact - trap)};
}

inline DistanceReport distance(Metric m, const Distribution& a, const Distribution& b, const DomainSpec& d) {
  switch (m) {
    case Metric::TV: return tv(a, b, d);
    case Metric::Hellinger: return hellinger(a, b, d);
    case Metric::W1: return w1(a, b, d);
  }
  fail(ErrorKind::InvalidArgument, "unknown metric");
}

/// d~_H between two scaled densities on the same grid.
inline double scaled_hellinger(const GridDensity& a, const GridDensity& b) {
  if (!(a.domain == b.domain)) fail(ErrorKind::DomainMismatch, "scaled densities on different domains");
  for (const auto* g : {&a, &b}) {
    for (double v : g->values)
      if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::NonFinite, "scaled density value invalid");
    const double m = g->mass();
    if (!std::isfinite(m) || m <= 0.0) fail(ErrorKind::NonFinite, "scaled density mass must be finite and positive");
  }
  return detail::hellinger_from_integral(trapezoid(detail::sqrt_diff_sq(a.values, b.values), a.domain.step()));
}

/// Distances between two atom measures sharing a lattice (density values w.r.t. its weights).
inline double tv_on(const Lattice& nu, const std::vector<double>& p, const std::vector<double>& q) {
  return 0.5 * nu.integrate(detail::abs_diff(p, q));
}

inline double hellinger_on(const Lattice& nu, const std::vector<double>& p, const std::vector<double>& q) {
  return detail::hellinger_from_integral(nu.integrate(detail::sqrt_diff_sq(p, q)));
}

/// W1 of the atom measures; lattice nodes must be sorted.
inline double w1_on(const Lattice& nu, const std::vector<double>& p, const std::vector<double>& q) {
  double mp = 0.0, mq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    mp += nu.weights[i] * p[i];
    mq += nu.weights[i] * q[i];
  }
  double fp = 0.0, fq = 0.0, out = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    fp += nu.weights[i] * p[i] / mp;
    fq += nu.weights[i] * q[i] / mq;
    out += std::abs(fp - fq) * (nu.nodes[i + 1] - nu.nodes[i]);
  }
  return out;
}

}  // namespace bsl
