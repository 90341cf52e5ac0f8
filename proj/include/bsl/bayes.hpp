#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "bsl/domains.hpp"
#include "bsl/error.hpp"
#include "bsl/metrics.hpp"
#include "bsl/models.hpp"

namespace bsl {

constexpr double kEvidenceFloor = 1e-300;
constexpr double kBoundaryMassLimit = 1e-8;

struct UpdateResult {
  Distribution posterior;
  double evidence = 0.0;
  std::optional<Distribution> predicted;
};

inline UpdateResult conjugate_update_ip(const Gaussian1D& prior, double a, double noise_var, double y) {
  prior.validate();
  if (!(noise_var > 0.0)) fail(ErrorKind::DegenerateVariance, "noise variance must be positive");
  const double var = 1.0 / (1.0 / prior.variance + a * a / noise_var);
  const double mean = var * (prior.mean / prior.variance + a * y / noise_var);
  const double z = normal_pdf(y, a * prior.mean, a * a * prior.variance + noise_var);
  return {Gaussian1D{mean, var}, z, std::nullopt};
}

/// Seeded engine for step k of a run; one stream per (seed, k).
inline std::mt19937_64 step_rng(std::uint64_t seed, std::uint64_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), 0x5eedu};
  return std::mt19937_64(seq);
}

namespace detail {

/// Density values on the system grid ([ix * nw + iw] for PS).
inline std::vector<double> prior_values(const SystemSpec& s, const Distribution& prior) {
  if (s.problem == Problem::PS) {
    auto j = std::get_if<JointGrid2D>(&prior);
    if (!j) fail(ErrorKind::UnsupportedRepresentation, "parameter-state priors must be joint grids");
    if (!(j->x_domain == s.x_domain) || !(j->w_domain == s.w_domain))
      fail(ErrorKind::DomainMismatch, "joint prior on a different domain");
    return j->values;
  }
  if (auto g = std::get_if<Gaussian1D>(&prior)) return discretize(*g, s.x_domain).values;
  if (auto gd = std::get_if<GridDensity>(&prior)) {
    if (!(gd->domain == s.x_domain)) fail(ErrorKind::DomainMismatch, "prior on a different domain");
    return gd->values;
  }
  fail(ErrorKind::UnsupportedRepresentation, "prior representation not supported here");
}

inline std::vector<double> system_weights(const SystemSpec& s) {
  if (s.problem != Problem::PS) return trapezoid_weights(s.x_domain);
  return JointGrid2D{s.x_domain, s.w_domain, {}}.weights();
}

inline void check_boundary(const SystemSpec& s, const std::vector<double>& post) {
  const std::size_t n = s.x_domain.grid_points, nw = s.nw();
  const double h = s.x_domain.step();
  const auto ww = s.problem == Problem::PS ? trapezoid_weights(s.w_domain) : std::vector<double>{1.0};
  double edge = 0.0;
  for (std::size_t iw = 0; iw < nw; ++iw) {
    auto v = [&](std::size_t i) { return post[i * nw + iw]; };
    edge += ww[iw] * 0.5 * h * (v(0) + v(1) + v(n - 2) + v(n - 1));
  }
  if (edge > kBoundaryMassLimit) fail(ErrorKind::DomainTooSmall, "posterior mass at the domain boundary");
}

}  // namespace detail

/// Pushforward through the grid kernel: p-(x_i, w) = sum_j wt_j T(x_i | x_j, w) p(x_j, w).
inline std::vector<double> predict_values(const SystemSpec& s, const std::vector<double>& prior) {
  if (s.problem == Problem::IP) return prior;
  const auto& K = s.kernel();
  const std::size_t n = s.x_domain.grid_points, nw = s.nw();
  const auto wt = trapezoid_weights(s.x_domain);
  std::vector<double> out(n * nw, 0.0);
  std::vector<double> u(n);
  for (std::size_t iw = 0; iw < nw; ++iw) {
    for (std::size_t j = 0; j < n; ++j) u[j] = wt[j] * prior[j * nw + iw];
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &K.values[(iw * n + i) * n];
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * u[j];
      out[i * nw + iw] = acc;
    }
  }
  return out;
}

/// Predicted density of a particle set under the grid-truncated kernel.
inline std::vector<double> predict_particles(const SystemSpec& s, const ParticleSet& p) {
  const std::size_t n = s.x_domain.grid_points;
  // resampled sets repeat points; merge them so each column is built once
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(p.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p.weights[j] != 0.0) atoms.emplace_back(p.points[j], p.weights[j]);
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < atoms.size();) {
    const double x = atoms[j].first;
    double w = 0.0;
    for (; j < atoms.size() && atoms[j].first == x; ++j) w += atoms[j].second;
    const auto col = kernel_column(s.T, s.x_domain, x, 0.0);
    for (std::size_t i = 0; i < n; ++i) out[i] += w * col[i];
  }
  return out;
}

namespace detail {

inline double checked_evidence(double z) {
  if (!std::isfinite(z)) fail(ErrorKind::NonFinite, "evidence is not finite");
  if (!(z > kEvidenceFloor)) fail(ErrorKind::ZeroEvidence, "prior is not admissible for this data");
  return z;
}

}  // namespace detail

inline UpdateResult grid_update(const SystemSpec& s, std::size_t k, const Distribution& prior) {
  const auto lik = likelihood_on_grid(s, k);

  if (auto p = std::get_if<ParticleSet>(&prior)) {
    p->validate();
    if (s.problem == Problem::IP) {
      ParticleSet post = *p;
      double z = 0.0;
      for (std::size_t i = 0; i < post.size(); ++i) {
        post.weights[i] *= s.h(s.y(k), post.points[i], 0.0);
        z += post.weights[i];
      }
      detail::checked_evidence(z);
      for (auto& w : post.weights) w /= z;
      return {post, z, std::nullopt};
    }
    if (s.problem == Problem::PS) fail(ErrorKind::UnsupportedRepresentation, "particle priors need a 1-D state");
    auto pred = predict_particles(s, *p);
    std::vector<double> post(pred.size());
    for (std::size_t i = 0; i < post.size(); ++i) post[i] = lik[i] * pred[i];
    const double z = detail::checked_evidence(trapezoid(post, s.x_domain.step()));
    for (auto& v : post) v /= z;
    detail::check_boundary(s, post);
    return {GridDensity{s.x_domain, std::move(post), true}, z, GridDensity{s.x_domain, std::move(pred), true}};
  }

  const auto prior_v = detail::prior_values(s, prior);
  auto pred = predict_values(s, prior_v);
  const auto w = detail::system_weights(s);
  std::vector<double> post(pred.size());
  for (std::size_t i = 0; i < post.size(); ++i) post[i] = lik[i] * pred[i];
  const double z = detail::checked_evidence(weighted_sum(w, post));
  for (auto& v : post) v /= z;
  detail::check_boundary(s, post);

  std::optional<Distribution> predicted;
  if (s.problem == Problem::SE) predicted = GridDensity{s.x_domain, pred, true};
  if (s.problem == Problem::PS) predicted = JointGrid2D{s.x_domain, s.w_domain, pred};
  if (s.problem == Problem::PS) return {JointGrid2D{s.x_domain, s.w_domain, std::move(post)}, z, predicted};
  return {GridDensity{s.x_domain, std::move(post), true}, z, predicted};
}

/// Evidence Z_k(prior) without forming the posterior.
inline double evidence(const SystemSpec& s, std::size_t k, const Distribution& prior) {
  const auto lik = likelihood_on_grid(s, k);
  if (auto p = std::get_if<ParticleSet>(&prior)) {
    if (s.problem == Problem::IP) {
      double z = 0.0;
      for (std::size_t i = 0; i < p->size(); ++i) z += p->weights[i] * s.h(s.y(k), p->points[i], 0.0);
      return z;
    }
    const auto pred = predict_particles(s, *p);
    std::vector<double> f(pred.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = lik[i] * pred[i];
    return trapezoid(f, s.x_domain.step());
  }
  const auto pred = predict_values(s, detail::prior_values(s, prior));
  const auto w = detail::system_weights(s);
  double z = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) z += w[i] * lik[i] * pred[i];
  return z;
}

/// Admissibility certificate: the evidence itself, when strictly positive and finite.
inline double validate_admissible(const SystemSpec& s, std::size_t k, const Distribution& prior) {
  return detail::checked_evidence(evidence(s, k, prior));
}

struct IncrementalError {
  double tv = 0.0;
  double hellinger = 0.0;
  double w1 = 0.0;

  double get(Metric m) const { return m == Metric::TV ? tv : m == Metric::Hellinger ? hellinger : w1; }
};

struct ProjectionStep {
  Gaussian1D approx;
  UpdateResult exact;
  IncrementalError incremental_error;
};

/// Exact grid update followed by moment matching to a Gaussian.
inline ProjectionStep gaussian_projection_step(const SystemSpec& s, std::size_t k, const Gaussian1D& prior) {
  if (s.problem == Problem::PS) fail(ErrorKind::UnsupportedRepresentation, "projection filter needs a 1-D state");
  auto exact = grid_update(s, k, prior);
  const auto& post = std::get<GridDensity>(exact.posterior);
  const auto [m, v] = moments(post);
  const Gaussian1D approx{m, v};
  const Distribution qa = grid_values(approx, s.x_domain);
  IncrementalError e;
  e.tv = tv(post, qa, s.x_domain).value;
  e.hellinger = hellinger(post, qa, s.x_domain).value;
  e.w1 = w1(post, qa, s.x_domain).value;
  return {approx, std::move(exact), e};
}

namespace detail {

inline double propagate_one(const SystemSpec& s, double x, std::mt19937_64& rng) {
  const auto& T = s.T;
  if (T.sampler) return std::clamp(T.sampler(x, 0.0, rng), s.x_domain.lower, s.x_domain.upper);
  if (T.family == Family::LinearGaussian) {
    std::normal_distribution<double> nd(T.a * x, std::sqrt(T.q));
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double v = nd(rng);
      if (s.x_domain.contains(v)) return v;
    }
  }
  // inverse CDF of the truncated column
  const GridDensity col{s.x_domain, kernel_column(T, s.x_domain, x, 0.0), true};
  return sample(col, 1, rng).front();
}

}  // namespace detail

/// Bootstrap particle step: propagate, weight by the likelihood, multinomial resample.
inline ParticleSet particle_step(const SystemSpec& s, std::size_t k, const ParticleSet& prior, std::size_t n,
                                 std::uint64_t seed) {
  if (s.problem != Problem::SE) fail(ErrorKind::UnsupportedRepresentation, "particle filter is for state estimation");
  if (n < 1) fail(ErrorKind::InvalidArgument, "particle count must be positive");
  prior.validate();
  auto rng = step_rng(seed, k);
  const double y = s.y(k);
  std::vector<double> moved(prior.size()), cum(prior.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    moved[i] = detail::propagate_one(s, prior.points[i], rng);
    const double w = prior.weights[i] * s.h(y, moved[i], 0.0);
    if (!std::isfinite(w) || w < 0.0) fail(ErrorKind::NonFinite, "particle weight not finite");
    acc += w;
    cum[i] = acc;
  }
  if (!(acc > 0.0)) fail(ErrorKind::AllWeightsZero, "every particle has zero likelihood");
  std::uniform_real_distribution<double> unif(0.0, acc);
  std::vector<double> out(n);
  for (auto& x : out) {
    auto it = std::upper_bound(cum.begin(), cum.end(), unif(rng));
    if (it == cum.end()) --it;
    x = moved[static_cast<std::size_t>(it - cum.begin())];
  }
  return ParticleSet::uniform(std::move(out));
}

/// n equally weighted draws from a grid density.
inline ParticleSet sample_particles(const GridDensity& g, std::size_t n, std::uint64_t seed) {
  auto rng = step_rng(seed, 0);
  return ParticleSet::uniform(sample(g, n, rng));
}

}  // namespace bsl
