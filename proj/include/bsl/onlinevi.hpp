#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "bsl/bayes.hpp"
#include "bsl/domains.hpp"
#include "bsl/error.hpp"
#include "bsl/metrics.hpp"
#include "bsl/models.hpp"

namespace bsl {

/// Per-step ingredients of the parameter-error term.
struct BetaInput {
  double c_vi_tilde = 0.0;
  double param_error = 0.0;
  double evidence_hat = 1.0;
};

struct VIBoundInputs {
  int r = 1;
  double det_gamma = 1.0;
  std::vector<double> elbo_floors;
  /// Z_i(Q_{i-1}) for i = 1..k, or the exact one-step evidences for the exact-sequence form.
  std::vector<double> evidences;
  std::optional<double> D;
  std::vector<BetaInput> beta_inputs;
};

/// -(r/2) log(2 pi) - (1/2) log det(Gamma): log of the Gaussian likelihood peak.
inline double vi_log_peak(int r, double det_gamma) {
  return -0.5 * r * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det_gamma);
}

namespace detail {

inline std::vector<double> vi_roots(const VIBoundInputs& in) {
  if (in.r < 1) fail(ErrorKind::InvalidArgument, "data dimension must be positive");
  if (!(in.det_gamma > 0.0)) fail(ErrorKind::InvalidArgument, "det(Gamma) must be positive");
  if (in.elbo_floors.empty()) fail(ErrorKind::InvalidArgument, "need at least one ELBO floor");
  if (in.evidences.size() != in.elbo_floors.size()) fail(ErrorKind::InvalidArgument, "one evidence per step");
  const double A = vi_log_peak(in.r, in.det_gamma);
  std::vector<double> out;
  for (double e : in.elbo_floors) {
    const double arg = A - e;
    if (!(arg >= 0.0)) fail(ErrorKind::VacuousBound, "ELBO floor exceeds the likelihood peak");
    out.push_back(std::sqrt(arg));
  }
  for (double z : in.evidences)
    if (!(z > 0.0)) fail(ErrorKind::ZeroEvidence, "evidences must be positive");
  return out;
}

inline double vi_scale(const VIBoundInputs& in, Metric metric) {
  if (metric != Metric::W1) return 1.0;
  if (!in.D) fail(ErrorKind::MissingD, "W1 bound needs the domain diameter");
  return *in.D;
}

/// Sum_j C(j) t_j + alpha t_k where C(j) = scale * prod_{i>j} factor_i / sqrt(2).
inline double vi_sum(const VIBoundInputs& in, Metric metric, const std::vector<double>& terms) {
  const double peak = std::exp(vi_log_peak(in.r, in.det_gamma));
  const double scale = vi_scale(in, metric);
  const std::size_t k = terms.size();
  double total = 0.0, prod = 1.0;
  for (std::size_t j = k; j-- > 0;) {
    total += prod * terms[j];
    const double ratio = peak / in.evidences[j];
    prod *= metric == Metric::Hellinger ? 2.0 * std::sqrt(ratio) : ratio;
  }
  return scale * total / std::numbers::sqrt2;
}

}  // namespace detail

inline double vi_bound_type1(const VIBoundInputs& in, Metric metric) {
  return detail::vi_sum(in, metric, detail::vi_roots(in));
}

inline double vi_beta(const BetaInput& b, Metric metric) {
  if (!(b.evidence_hat > 0.0)) fail(ErrorKind::ZeroEvidence, "estimated-parameter evidence must be positive");
  const double ratio = b.c_vi_tilde * b.param_error / b.evidence_hat;
  return metric == Metric::Hellinger ? 2.0 * std::sqrt(ratio) : std::numbers::sqrt2 * ratio;
}

inline double vi_bound_type2(const VIBoundInputs& in, Metric metric) {
  auto terms = detail::vi_roots(in);
  if (in.beta_inputs.size() != terms.size()) fail(ErrorKind::InvalidArgument, "one beta input per step");
  for (std::size_t j = 0; j < terms.size(); ++j) terms[j] += vi_beta(in.beta_inputs[j], metric);
  return detail::vi_sum(in, metric, terms);
}

struct ElboEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

/// Linear interpolation of grid values; zero outside the domain.
inline double interp(const DomainSpec& d, const std::vector<double>& v, double x) {
  if (x < d.lower || x > d.upper) return 0.0;
  const double t = (x - d.lower) / d.step();
  std::size_t i = std::min(static_cast<std::size_t>(t), d.grid_points - 2);
  const double f = t - static_cast<double>(i);
  return (1.0 - f) * v[i] + f * v[i + 1];
}

}  // namespace detail

/// Monte Carlo ELBO of a Gaussian q for a 1-D system. The predicted prior is the
/// previous approximation pushed through the transition (closed form when both are Gaussian).
inline ElboEstimate elbo_mc(const Gaussian1D& q, const SystemSpec& s, std::size_t k, const Distribution& prev_q,
                            std::size_t n, std::uint64_t seed) {
  q.validate();
  if (n < 100) fail(ErrorKind::InvalidArgument, "use at least 100 samples");
  if (s.problem == Problem::PS) fail(ErrorKind::UnsupportedRepresentation, "use elbo_grid for joint systems");
  std::function<double(double)> log_pred;
  const auto* g = std::get_if<Gaussian1D>(&prev_q);
  if (g && (s.problem == Problem::IP || s.T.family == Family::LinearGaussian)) {
    Gaussian1D pred = *g;
    if (s.problem == Problem::SE) pred = {s.T.a * g->mean, s.T.a * s.T.a * g->variance + s.T.q};
    log_pred = [pred](double x) { return pred.logpdf(x); };
  } else {
    const auto vals = s.problem == Problem::IP ? detail::prior_values(s, prev_q)
                                               : predict_values(s, detail::prior_values(s, prev_q));
    log_pred = [&s, vals](double x) { return std::log(detail::interp(s.x_domain, vals, x)); };
  }
  const double y = s.y(k);
  auto rng = step_rng(seed, k);
  std::normal_distribution<double> nd(q.mean, q.sd());
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = nd(rng);
    const double v = std::log(s.h(y, x, 0.0)) + log_pred(x) - q.logpdf(x);
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "log density vanished at a sampled point");
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(n - 1))};
}

/// Exact ELBO of a grid approximation q against the grid model: sum w q log(h q- / q).
inline double elbo_grid(const Distribution& q, const SystemSpec& s, std::size_t k, const Distribution& prev_q) {
  const auto qv = detail::prior_values(s, q);
  const auto pred = predict_values(s, detail::prior_values(s, prev_q));
  const auto lik = likelihood_on_grid(s, k);
  const auto w = detail::system_weights(s);
  double out = 0.0;
  for (std::size_t i = 0; i < qv.size(); ++i) {
    if (qv[i] == 0.0) continue;
    const double v = std::log(lik[i] * pred[i] / qv[i]);
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "approximation puts mass where the model has none");
    out += w[i] * qv[i] * v;
  }
  return out;
}

/// Bivariate Gaussian on (x, w).
struct Gaussian2D {
  double mx = 0.0, mw = 0.0;
  double vxx = 1.0, vxw = 0.0, vww = 1.0;

  double pdf(double x, double w) const {
    const double det = vxx * vww - vxw * vxw;
    if (!(det > 0.0)) fail(ErrorKind::DegenerateVariance, "covariance must be positive definite");
    const double dx = x - mx, dw = w - mw;
    const double quad = (vww * dx * dx - 2.0 * vxw * dx * dw + vxx * dw * dw) / det;
    return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
  }
};

inline JointGrid2D discretize(const Gaussian2D& g, const DomainSpec& xd, const DomainSpec& wd) {
  JointGrid2D j{xd, wd, std::vector<double>(xd.grid_points * wd.grid_points)};
  for (std::size_t i = 0; i < j.nx(); ++i)
    for (std::size_t l = 0; l < j.nw(); ++l) j.at(i, l) = g.pdf(xd.node(i), wd.node(l));
  const double m = j.mass();
  if (!(m > 0.0)) fail(ErrorKind::DomainTooSmall, "gaussian has no mass on the grid");
  for (double& v : j.values) v /= m;
  return j;
}

inline Gaussian2D moment_match(const JointGrid2D& j) {
  const auto w = j.weights();
  double m0 = 0.0, mx = 0.0, mw = 0.0;
  for (std::size_t i = 0; i < j.nx(); ++i)
    for (std::size_t l = 0; l < j.nw(); ++l) {
      const double p = w[i * j.nw() + l] * j.at(i, l);
      m0 += p;
      mx += p * j.x_domain.node(i);
      mw += p * j.w_domain.node(l);
    }
  mx /= m0;
  mw /= m0;
  double vxx = 0.0, vxw = 0.0, vww = 0.0;
  for (std::size_t i = 0; i < j.nx(); ++i)
    for (std::size_t l = 0; l < j.nw(); ++l) {
      const double p = w[i * j.nw() + l] * j.at(i, l) / m0;
      const double dx = j.x_domain.node(i) - mx, dw = j.w_domain.node(l) - mw;
      vxx += p * dx * dx;
      vxw += p * dx * dw;
      vww += p * dw * dw;
    }
  return {mx, mw, vxx, vxw, vww};
}

/// Integral of the likelihood against the worst-case parameter sensitivity of T,
/// from adjacent parameter-node quotients with the usual safety factor.
inline double c_vi_tilde(const SystemSpec& s, std::size_t k) {
  if (s.problem != Problem::PS) fail(ErrorKind::InvalidArgument, "needs a parameterized transition");
  const auto& K = s.kernel();
  const std::size_t n = s.x_domain.grid_points, nw = s.nw();
  const double hw = s.w_domain.step(), y = s.y(k);
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lip = 0.0;
    for (std::size_t iw = 0; iw + 1 < nw; ++iw)
      for (std::size_t j = 0; j < n; ++j)
        lip = std::max(lip, std::abs(K(iw + 1, i, j) - K(iw, i, j)) / hw);
    f[i] = s.h(y, s.x_domain.node(i), 0.0) * lip;
  }
  return 2.0 * trapezoid(f, s.x_domain.step());
}

}  // namespace bsl
