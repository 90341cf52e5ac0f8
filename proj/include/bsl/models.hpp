#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "bsl/domains.hpp"
#include "bsl/error.hpp"
#include "bsl/metrics.hpp"
#include "bsl/quadrature.hpp"

namespace bsl {

enum class Family { LinearGaussian, Custom };
enum class Problem { IP, SE, PS };

/// h(y | x, w). Built-in family: y ~ N(gain * x + param_gain * w, noise_var).
/// Custom evaluators must be reentrant.
struct LikelihoodModel {
  Family family = Family::Custom;
  double gain = 1.0;
  double noise_var = 1.0;
  double param_gain = 0.0;
  std::function<double(double y, double x, double w)> custom;
  std::optional<double> declared_sup;
  std::optional<double> declared_lip;

  static LikelihoodModel linear_gaussian(double gain, double noise_var, double param_gain = 0.0) {
    require(noise_var > 0.0, ErrorKind::DegenerateVariance, "likelihood noise variance must be positive");
    LikelihoodModel m;
    m.family = Family::LinearGaussian;
    m.gain = gain;
    m.noise_var = noise_var;
    m.param_gain = param_gain;
    return m;
  }

  static LikelihoodModel make_custom(std::function<double(double, double, double)> fn,
                                     std::optional<double> sup = std::nullopt,
                                     std::optional<double> lip = std::nullopt) {
    LikelihoodModel m;
    m.custom = std::move(fn);
    m.declared_sup = sup;
    m.declared_lip = lip;
    return m;
  }

  double operator()(double y, double x, double w = 0.0) const {
    if (family == Family::LinearGaussian) return normal_pdf(y, gain * x + param_gain * w, noise_var);
    return custom(y, x, w);
  }
};

/// T(x_next | x_prev, w). Built-in family: x_next ~ N(a * x_prev + b * w, q).
/// On a grid the kernel is renormalized per column so that mass stays inside the domain.
struct TransitionModel {
  Family family = Family::LinearGaussian;
  double a = 1.0;
  double q = 1.0;
  double b = 0.0;
  std::function<double(double x_next, double x_prev, double w)> custom;
  /// Optional direct sampler used by particle propagation.
  std::function<double(double x_prev, double w, std::mt19937_64& rng)> sampler;

  static TransitionModel linear_gaussian(double a, double q, double b = 0.0) {
    require(q > 0.0, ErrorKind::DegenerateVariance, "transition variance must be positive");
    TransitionModel t;
    t.a = a;
    t.q = q;
    t.b = b;
    return t;
  }

  static TransitionModel make_custom(std::function<double(double, double, double)> fn) {
    TransitionModel t;
    t.family = Family::Custom;
    t.custom = std::move(fn);
    return t;
  }

  double raw(double x_next, double x_prev, double w = 0.0) const {
    if (family == Family::LinearGaussian) return normal_pdf(x_next, a * x_prev + b * w, q);
    return custom(x_next, x_prev, w);
  }
};

/// Grid-truncated kernel values; entry (iw, i, j) = T(x_i | x_j, w_iw), each column unit mass.
struct GridKernel {
  std::size_t nx = 0, nw = 1;
  std::vector<double> values;

  double operator()(std::size_t iw, std::size_t i, std::size_t j) const { return values[(iw * nx + i) * nx + j]; }
};

/// Normalized kernel column T(. | x_prev, w) on the domain nodes.
inline std::vector<double> kernel_column(const TransitionModel& t, const DomainSpec& d, double x_prev, double w) {
  std::vector<double> col(d.grid_points);
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = t.raw(d.node(i), x_prev, w);
  const double m = trapezoid(col, d.step());
  if (!(m > 0.0) || !std::isfinite(m)) fail(ErrorKind::DomainTooSmall, "transition leaves the domain entirely");
  for (double& v : col) v /= m;
  return col;
}

struct SystemSpec {
  Problem problem = Problem::IP;
  LikelihoodModel h;
  TransitionModel T;
  std::vector<double> ys;
  DomainSpec x_domain;
  DomainSpec w_domain;

  static SystemSpec inverse(LikelihoodModel h, std::vector<double> ys, DomainSpec d) {
    SystemSpec s;
    s.problem = Problem::IP;
    s.h = std::move(h);
    s.ys = std::move(ys);
    s.x_domain = d;
    s.validate();
    return s;
  }

  static SystemSpec state_estimation(TransitionModel t, LikelihoodModel h, std::vector<double> ys, DomainSpec d) {
    SystemSpec s = inverse(std::move(h), std::move(ys), d);
    s.problem = Problem::SE;
    s.T = std::move(t);
    return s;
  }

  static SystemSpec parameter_state(TransitionModel t, LikelihoodModel h, std::vector<double> ys, DomainSpec xd,
                                    DomainSpec wd) {
    SystemSpec s = state_estimation(std::move(t), std::move(h), std::move(ys), xd);
    s.problem = Problem::PS;
    wd.validate();
    s.w_domain = wd;
    return s;
  }

  void validate() const {
    x_domain.validate();
    for (double y : ys) require(std::isfinite(y), ErrorKind::NonFinite, "data must be finite");
    if (h.family == Family::Custom) require(static_cast<bool>(h.custom), ErrorKind::InvalidArgument, "custom likelihood missing");
  }

  double y(std::size_t k) const {
    if (k < 1 || k > ys.size()) fail(ErrorKind::InvalidArgument, "step outside the data sequence");
    return ys[k - 1];
  }

  /// Diameter under |x - x'| (+ |w - w'| for parameter-state problems).
  double D() const { return x_domain.diameter() + (problem == Problem::PS ? w_domain.diameter() : 0.0); }

  std::size_t nw() const { return problem == Problem::PS ? w_domain.grid_points : 1; }
  double w_node(std::size_t iw) const { return problem == Problem::PS ? w_domain.node(iw) : 0.0; }

  /// Lazily built, shared between copies, thread-safe.
  const GridKernel& kernel() const {
    std::call_once(cache_->once, [&] {
      auto& K = cache_->kernel;
      const std::size_t n = x_domain.grid_points;
      K.nx = n;
      K.nw = nw();
      K.values.resize(K.nw * n * n);
      for (std::size_t iw = 0; iw < K.nw; ++iw)
        for (std::size_t j = 0; j < n; ++j) {
          const auto col = kernel_column(T, x_domain, x_domain.node(j), w_node(iw));
          for (std::size_t i = 0; i < n; ++i) K.values[(iw * n + i) * n + j] = col[i];
        }
    });
    return cache_->kernel;
  }

 private:
  struct Cache {
    std::once_flag once;
    GridKernel kernel;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Likelihood on the grid nodes at step k; for PS the layout is [ix * nw + iw].
inline std::vector<double> likelihood_on_grid(const SystemSpec& s, std::size_t k) {
  const double y = s.y(k);
  const std::size_t n = s.x_domain.grid_points, nw = s.nw();
  std::vector<double> out(n * nw);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t iw = 0; iw < nw; ++iw) {
      const double v = s.h(y, s.x_domain.node(i), s.w_node(iw));
      if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::NonFinite, "likelihood must be finite and nonnegative");
      out[i * nw + iw] = v;
    }
  return out;
}

/// g(x_prev[, w]) = integral of h(y_k, x) T(x | x_prev, w) dx on the grid.
/// For IP this is h itself.
inline std::vector<double> transition_integral(const SystemSpec& s, std::size_t k) {
  const auto lik = likelihood_on_grid(s, k);
  if (s.problem == Problem::IP) return lik;
  const auto& K = s.kernel();
  const std::size_t n = s.x_domain.grid_points, nw = s.nw();
  const auto wt = trapezoid_weights(s.x_domain);
  std::vector<double> g(n * nw, 0.0);
  for (std::size_t iw = 0; iw < nw; ++iw)
    for (std::size_t i = 0; i < n; ++i) {
      const double a = wt[i] * lik[i * nw + iw];
      if (a == 0.0) continue;
      const double* row = &K.values[(iw * n + i) * n];
      for (std::size_t j = 0; j < n; ++j) g[j * nw + iw] += a * row[j];
    }
  return g;
}

struct ConstantsReport {
  std::optional<double> C_h;
  std::optional<double> C_Th;
  std::optional<double> C_Th_star;
  std::optional<double> C_Th_tilde;
  std::optional<double> C_Th_tilde_star;
  std::optional<double> h_lip;
  double D = 0.0;
  Problem problem = Problem::IP;
};

namespace detail {

inline DomainSpec refined(const DomainSpec& d, std::size_t factor) {
  return {d.lower, d.upper, (d.grid_points - 1) * factor + 1};
}

inline double grid_sup(const std::function<double(double)>& f, const DomainSpec& d) {
  double m = 0.0;
  for (std::size_t i = 0; i < d.grid_points; ++i) {
    const double v = f(d.node(i));
    if (!std::isfinite(v)) fail(ErrorKind::UnboundedConstant, "function not finite on the grid");
    m = std::max(m, v);
  }
  return m;
}

inline double grid_lip(const std::function<double(double)>& f, const DomainSpec& d) {
  double m = 0.0, prev = f(d.node(0));
  const double hstep = d.step();
  for (std::size_t i = 1; i < d.grid_points; ++i) {
    const double cur = f(d.node(i));
    if (!std::isfinite(cur)) fail(ErrorKind::UnboundedConstant, "function not finite on the grid");
    m = std::max(m, std::abs(cur - prev) / hstep);
    prev = cur;
  }
  return m;
}

/// Estimate on the grid and on a 4x refinement; a jump beyond 2x means divergence.
inline double refined_estimate(const std::function<double(const DomainSpec&)>& est, const DomainSpec& d) {
  const double coarse = est(d);
  const double fine = est(refined(d, 4));
  if (fine > 2.0 * coarse && fine > 1e-300)
    fail(ErrorKind::UnboundedConstant, "grid estimate keeps growing under refinement");
  return std::max(coarse, fine);
}

constexpr double kLipSafety = 2.0;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

inline double gauss_lip(double slope, double var) {
  // sup over x of |d/dx N(z; slope * x, var)|
  return std::abs(slope) * std::exp(-0.5) * kInvSqrt2Pi / var;
}

}  // namespace detail

/// Grid brute-force sup of h(y_k, .) on the model nodes.
inline double grid_C_h(const SystemSpec& s, std::size_t k) {
  const double y = s.y(k);
  return detail::grid_sup([&](double x) { return s.h(y, x, 0.0); }, s.x_domain);
}

inline double grid_h_lip(const SystemSpec& s, std::size_t k) {
  const double y = s.y(k);
  return detail::grid_lip([&](double x) { return s.h(y, x, 0.0); }, s.x_domain);
}

inline double grid_C_Th(const SystemSpec& s, std::size_t k) {
  const auto g = transition_integral(s, k);
  return *std::max_element(g.begin(), g.end());
}

/// Integral over x_k of h(y_k, x_k) times the adjacent-node Lipschitz quotient of T(x_k | .).
inline double grid_C_Th_star(const SystemSpec& s, std::size_t k) {
  const auto& K = s.kernel();
  const auto lik = likelihood_on_grid(s, k);
  const std::size_t n = s.x_domain.grid_points;
  const double hstep = s.x_domain.step();
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &K.values[i * n];
    double lip = 0.0;
    for (std::size_t j = 1; j < n; ++j) lip = std::max(lip, std::abs(row[j] - row[j - 1]) / hstep);
    f[i] = lik[i] * lip;
  }
  return trapezoid(f, hstep);
}

/// PS analogue under the metric |x - x'| + |w - w'|: the Lipschitz constant of
/// f(x, w) = h(y, x_k, w) T(x_k | x, w) is the sup of the larger partial quotient.
inline double grid_C_Th_tilde_star(const SystemSpec& s, std::size_t k) {
  const auto& K = s.kernel();
  const auto lik = likelihood_on_grid(s, k);
  const std::size_t n = s.x_domain.grid_points, nw = s.nw();
  const double hx = s.x_domain.step(), hw = s.w_domain.step();
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lip = 0.0;
    for (std::size_t iw = 0; iw < nw; ++iw) {
      const double* row = &K.values[(iw * n + i) * n];
      const double li = lik[i * nw + iw];
      for (std::size_t j = 1; j < n; ++j) lip = std::max(lip, li * std::abs(row[j] - row[j - 1]) / hx);
      if (iw + 1 < nw) {
        const double* next = &K.values[((iw + 1) * n + i) * n];
        const double ln = lik[i * nw + iw + 1];
        for (std::size_t j = 0; j < n; ++j) lip = std::max(lip, std::abs(ln * next[j] - li * row[j]) / hw);
      }
    }
    f[i] = lip;
  }
  return trapezoid(f, hx);
}

inline ConstantsReport system_constants(const SystemSpec& s, std::size_t k, Metric metric) {
  ConstantsReport r;
  r.problem = s.problem;
  r.D = s.D();
  const double y = s.y(k);
  const bool lg_h = s.h.family == Family::LinearGaussian;
  const bool lg_t = s.T.family == Family::LinearGaussian;

  if (s.problem == Problem::IP) {
    double ch = grid_C_h(s, k);
    if (lg_h) {
      const double closed = s.h.gain != 0.0 ? detail::kInvSqrt2Pi / std::sqrt(s.h.noise_var) : normal_pdf(y, 0.0, s.h.noise_var);
      ch = std::max(ch, closed);
    } else if (s.h.declared_sup) {
      if (ch > *s.h.declared_sup * (1.0 + 1e-9)) fail(ErrorKind::InvalidArgument, "declared sup below grid maximum");
      ch = *s.h.declared_sup;
    } else {
      ch = detail::refined_estimate(
          [&](const DomainSpec& d) { return detail::grid_sup([&](double x) { return s.h(y, x, 0.0); }, d); }, s.x_domain);
    }
    r.C_h = ch;
    if (metric == Metric::W1) {
      double lip = grid_h_lip(s, k);
      if (lg_h) {
        lip = std::max(lip, detail::gauss_lip(s.h.gain, s.h.noise_var));
      } else if (s.h.declared_lip) {
        lip = *s.h.declared_lip;
      } else {
        lip = detail::kLipSafety *
              detail::refined_estimate(
                  [&](const DomainSpec& d) { return detail::grid_lip([&](double x) { return s.h(y, x, 0.0); }, d); },
                  s.x_domain);
      }
      r.h_lip = lip;
    }
  } else if (s.problem == Problem::SE) {
    double c = grid_C_Th(s, k);
    if (lg_h && lg_t) {
      const double v = s.h.gain * s.h.gain * s.T.q + s.h.noise_var;
      c = std::max(c, detail::kInvSqrt2Pi / std::sqrt(v));
    }
    r.C_Th = c;
    if (metric == Metric::W1) {
      double cs = grid_C_Th_star(s, k);
      if (lg_h && lg_t && s.h.gain != 0.0) {
        const double tlip = detail::gauss_lip(s.T.a, s.T.q);
        cs = std::max(cs, tlip / std::abs(s.h.gain));
      } else {
        cs *= detail::kLipSafety;
      }
      r.C_Th_star = cs;
    }
  } else {
    double c = grid_C_Th(s, k);
    if (lg_h && lg_t) {
      const double v = s.h.gain * s.h.gain * s.T.q + s.h.noise_var;
      c = std::max(c, detail::kInvSqrt2Pi / std::sqrt(v));
    }
    r.C_Th_tilde = c;
    if (metric == Metric::W1) r.C_Th_tilde_star = detail::kLipSafety * grid_C_Th_tilde_star(s, k);
  }
  return r;
}

}  // namespace bsl
