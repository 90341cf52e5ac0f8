#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "bsl/bayes.hpp"
#include "bsl/error.hpp"
#include "bsl/metrics.hpp"
#include "bsl/models.hpp"
#include "bsl/quadrature.hpp"

namespace bsl {

enum class ReductionTheorem { TV, H_ER1, H_ER2, W1_IP, W1_DYN };

constexpr std::string_view to_string(ReductionTheorem t) {
  switch (t) {
    case ReductionTheorem::TV: return "tv";
    case ReductionTheorem::H_ER1: return "hellinger-er1";
    case ReductionTheorem::H_ER2: return "hellinger-er2";
    case ReductionTheorem::W1_IP: return "w1-ip";
    case ReductionTheorem::W1_DYN: return "w1-dyn";
  }
  return "?";
}

/// One sufficient condition written as lhs <= rhs.
struct ConditionValue {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

/// NOT guaranteed only means this reference measure gave no certificate.
struct ReductionVerdict {
  ReductionTheorem theorem = ReductionTheorem::TV;
  std::vector<ConditionValue> conditions;
  bool guaranteed = false;
  double measured_prior_dist = 0.0;
  double measured_post_dist = 0.0;
};

namespace detail {

inline bool all_hold(const std::vector<ConditionValue>& c) {
  return std::all_of(c.begin(), c.end(), [](const auto& x) { return x.holds(); });
}

inline double mass(const Lattice& nu, const std::vector<double>& p) { return nu.integrate(p); }

/// E[|X - X'| a(X) b(X')] for independent X ~ p nu, X' ~ q nu (unnormalized), O(n).
inline double product_distance(const Lattice& nu, const std::vector<double>& pa, const std::vector<double>& qb) {
  const std::size_t n = nu.size();
  double v_tot = 0.0, xv_tot = 0.0;
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    v[j] = nu.weights[j] * qb[j];
    v_tot += v[j];
    xv_tot += v[j] * nu.nodes[j];
  }
  double below = 0.0, xbelow = 0.0, out = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = nu.nodes[i];
    const double above = v_tot - below - v[i], xabove = xv_tot - xbelow - v[i] * x;
    out += nu.weights[i] * pa[i] * (x * below - xbelow + xabove - x * above);
    below += v[i];
    xbelow += v[i] * x;
  }
  return out;
}

/// sup over lattice nodes x0 of |E_P|X - x0| - E_Q|X - x0||, both normalized.
inline double sup_mean_distance_gap(const Lattice& nu, const std::vector<double>& p, const std::vector<double>& q) {
  const std::size_t n = nu.size();
  const double mp = mass(nu, p), mq = mass(nu, q);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = nu.weights[i] * (p[i] / mp - q[i] / mq);
  double tot = 0.0, xtot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tot += f[i];
    xtot += f[i] * nu.nodes[i];
  }
  double below = 0.0, xbelow = 0.0, best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = nu.nodes[i];
    below += f[i];
    xbelow += f[i] * x;
    const double above = tot - below, xabove = xtot - xbelow;
    best = std::max(best, std::abs(x * below - xbelow + xabove - x * above));
  }
  return best;
}

inline std::vector<double> times(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace detail

/// Error-reduction conditions for TV on the reference lattice.
inline std::vector<ConditionValue> tv_conditions(const Lattice& nu, const std::vector<double>& p,
                                                 const std::vector<double>& q, const std::vector<double>& g) {
  const double zp = nu.integrate(detail::times(g, p)), zq = nu.integrate(detail::times(g, q));
  const bool p_branch = zp >= zq;
  double g_diff = 0.0, g_mass = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const bool in = p_branch ? p[i] >= q[i] : p[i] <= q[i];
    if (!in) continue;
    const double w = nu.weights[i], d = std::abs(p[i] - q[i]);
    g_diff += w * g[i] * d;
    g_mass += w * g[i];
    diff += w * d;
  }
  return {{"weighted_diff", g_diff, g_mass * diff}, {"g_mass", g_mass, std::max(zp, zq)}};
}

struct HellingerConditions {
  std::vector<ConditionValue> er1;
  std::vector<ConditionValue> er2;
};

inline HellingerConditions hellinger_conditions(const Lattice& nu, const std::vector<double>& p,
                                                const std::vector<double>& q, const std::vector<double>& g) {
  const std::size_t n = nu.size();
  std::vector<double> root(n), sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    root[i] = std::sqrt(p[i] * q[i]);
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    sq[i] = d * d;
  }
  const double G = nu.integrate(g);
  const double zp = nu.integrate(detail::times(g, p)), zq = nu.integrate(detail::times(g, q));
  const double geo = std::sqrt(zp * zq);
  HellingerConditions c;
  c.er1 = {{"affinity", G * nu.integrate(root), nu.integrate(detail::times(g, root))}, {"g_mass", geo, G}};
  c.er2 = {{"weighted_sq", nu.integrate(detail::times(g, sq)), G * nu.integrate(sq)}, {"g_mass", G, geo}};
  return c;
}

inline std::vector<ConditionValue> w1_ip_conditions(const Lattice& nu, const std::vector<double>& p,
                                                    const std::vector<double>& q, const std::vector<double>& h) {
  const double zp = nu.integrate(detail::times(h, p)), zq = nu.integrate(detail::times(h, q));
  const double lhs = detail::product_distance(nu, detail::times(p, h), detail::times(q, h)) / (zp * zq);
  return {{"posterior_coupling", lhs, detail::sup_mean_distance_gap(nu, p, q)}};
}

/// p_pred, q_pred are the predicted densities; h the likelihood, all on the lattice.
inline std::vector<ConditionValue> w1_dyn_conditions(const Lattice& nu, const std::vector<double>& p_prev,
                                                     const std::vector<double>& q_prev,
                                                     const std::vector<double>& p_pred,
                                                     const std::vector<double>& q_pred, const std::vector<double>& h) {
  const double mp = detail::mass(nu, p_pred), mq = detail::mass(nu, q_pred);
  const double H = nu.integrate(h);
  const double ed = detail::product_distance(nu, p_pred, q_pred) / (mp * mq);
  const double edhh = detail::product_distance(nu, detail::times(p_pred, h), detail::times(q_pred, h)) / (mp * mq);
  const double ehp = nu.integrate(detail::times(h, p_pred)) / mp, ehq = nu.integrate(detail::times(h, q_pred)) / mq;
  return {{"weighted_coupling", edhh, H * H * ed},
          {"coupling_vs_prior_gap", ed, detail::sup_mean_distance_gap(nu, p_prev, q_prev)},
          {"likelihood_mass", H * H, ehp * ehq}};
}

/// Reduction function g on the system grid ([ix * nw + iw] for PS).
inline std::vector<double> g_function(const SystemSpec& s, std::size_t k) { return transition_integral(s, k); }

namespace detail {

inline Lattice system_lattice(const SystemSpec& s) {
  if (s.problem != Problem::PS) return Lattice::from_domain(s.x_domain);
  // atom positions are not used for TV/Hellinger on the joint grid
  const auto w = system_weights(s);
  return {std::vector<double>(w.size(), 0.0), w};
}

inline std::vector<double> posterior_values(const UpdateResult& u) {
  if (auto g = std::get_if<GridDensity>(&u.posterior)) return g->values;
  return std::get<JointGrid2D>(u.posterior).values;
}

struct PairUpdate {
  Lattice nu;
  std::vector<double> p, q, p_post, q_post;
  double zp = 0.0, zq = 0.0;
  std::vector<double> p_pred, q_pred;
};

inline PairUpdate update_pair(const SystemSpec& s, std::size_t k, const Distribution& a, const Distribution& b) {
  PairUpdate r;
  r.nu = system_lattice(s);
  r.p = prior_values(s, a);
  r.q = prior_values(s, b);
  const auto ua = grid_update(s, k, a);
  const auto ub = grid_update(s, k, b);
  r.zp = ua.evidence;
  r.zq = ub.evidence;
  r.p_post = posterior_values(ua);
  r.q_post = posterior_values(ub);
  r.p_pred = predict_values(s, r.p);
  r.q_pred = predict_values(s, r.q);
  return r;
}

}  // namespace detail

inline ReductionVerdict check_tv(const SystemSpec& s, std::size_t k, const Distribution& p_prev,
                                 const Distribution& q_prev) {
  const auto u = detail::update_pair(s, k, p_prev, q_prev);
  ReductionVerdict v;
  v.theorem = ReductionTheorem::TV;
  v.conditions = tv_conditions(u.nu, u.p, u.q, g_function(s, k));
  v.guaranteed = detail::all_hold(v.conditions);
  v.measured_prior_dist = tv_on(u.nu, u.p, u.q);
  v.measured_post_dist = tv_on(u.nu, u.p_post, u.q_post);
  return v;
}

/// Guaranteed if either Hellinger condition set holds; the tag names the one that did.
inline ReductionVerdict check_hellinger(const SystemSpec& s, std::size_t k, const Distribution& p_prev,
                                        const Distribution& q_prev) {
  const auto u = detail::update_pair(s, k, p_prev, q_prev);
  const auto c = hellinger_conditions(u.nu, u.p, u.q, g_function(s, k));
  ReductionVerdict v;
  const bool er1 = detail::all_hold(c.er1), er2 = detail::all_hold(c.er2);
  v.theorem = er1 || !er2 ? ReductionTheorem::H_ER1 : ReductionTheorem::H_ER2;
  for (auto x : c.er1) {
    x.name = "er1_" + x.name;
    v.conditions.push_back(x);
  }
  for (auto x : c.er2) {
    x.name = "er2_" + x.name;
    v.conditions.push_back(x);
  }
  v.guaranteed = er1 || er2;
  v.measured_prior_dist = hellinger_on(u.nu, u.p, u.q);
  v.measured_post_dist = hellinger_on(u.nu, u.p_post, u.q_post);
  return v;
}

enum class W1Variant { IP, DYN };

inline ReductionVerdict check_w1(const SystemSpec& s, std::size_t k, const Distribution& p_prev,
                                 const Distribution& q_prev, W1Variant variant) {
  if (s.problem == Problem::PS) fail(ErrorKind::UnsupportedRepresentation, "joint W1 reduction is not implemented");
  if (variant == W1Variant::IP && s.problem != Problem::IP)
    fail(ErrorKind::InvalidArgument, "the static W1 condition applies to inverse problems");
  if (variant == W1Variant::DYN && s.problem != Problem::SE)
    fail(ErrorKind::InvalidArgument, "the dynamic W1 condition needs a transition model");
  const auto u = detail::update_pair(s, k, p_prev, q_prev);
  const auto lik = likelihood_on_grid(s, k);
  ReductionVerdict v;
  if (variant == W1Variant::IP) {
    v.theorem = ReductionTheorem::W1_IP;
    v.conditions = w1_ip_conditions(u.nu, u.p, u.q, lik);
  } else {
    v.theorem = ReductionTheorem::W1_DYN;
    v.conditions = w1_dyn_conditions(u.nu, u.p, u.q, u.p_pred, u.q_pred, lik);
  }
  v.guaranteed = detail::all_hold(v.conditions);
  v.measured_prior_dist = w1_on(u.nu, u.p, u.q);
  v.measured_post_dist = w1_on(u.nu, u.p_post, u.q_post);
  return v;
}

/// E[|X - X'|] under independent draws from two densities on the domain grid.
inline double expected_distance(const GridDensity& a, const GridDensity& b) {
  const auto nu = Lattice::from_domain(a.domain);
  return detail::product_distance(nu, a.values, b.values) / (a.mass() * b.mass());
}

}  // namespace bsl
