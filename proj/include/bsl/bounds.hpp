#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bsl/error.hpp"
#include "bsl/metrics.hpp"
#include "bsl/models.hpp"

namespace bsl {

enum class LedgerVariant { Set1, Set2 };

struct LedgerRecord {
  std::size_t k = 0;
  double K = 0.0;
  double eps = 0.0;
  double cum_bound = 0.0;
};

/// Per-step audit trail of B_k = K_k * B_{k-1} + eps_k.
struct BoundLedger {
  Metric metric = Metric::TV;
  LedgerVariant variant = LedgerVariant::Set1;
  double initial = 0.0;
  std::vector<LedgerRecord> records;

  double final_bound() const { return records.empty() ? initial : records.back().cum_bound; }

  /// Recomputes every cumulative value from the stored factors.
  bool replay_consistent() const;
};

namespace detail {

inline double ledger_step(double K, double prev, double eps) {
  if (prev == 0.0) return eps;
  const double v = K * prev + eps;
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

inline double need(const std::optional<double>& v, const char* what) {
  if (!v) fail(ErrorKind::MissingConstant, what);
  return *v;
}

}  // namespace detail

inline bool BoundLedger::replay_consistent() const {
  double prev = initial;
  for (const auto& r : records) {
    if (r.K < 0.0 || r.eps < 0.0 || r.cum_bound < 0.0) return false;
    if (detail::ledger_step(r.K, prev, r.eps) != r.cum_bound) return false;
    prev = r.cum_bound;
  }
  return true;
}

/// One-step Lipschitz constant of the prior-to-posterior map for the given evidence.
inline double pointwise_K(const ConstantsReport& c, Metric metric, double Z) {
  if (!(Z > 0.0)) fail(ErrorKind::ZeroEvidence, "evidence must be positive");
  const double D = c.D;
  switch (c.problem) {
    case Problem::IP: {
      const double ch = detail::need(c.C_h, "C_h missing");
      if (metric == Metric::TV) return ch / Z;
      if (metric == Metric::Hellinger) return 2.0 * std::sqrt(ch / Z);
      return (2.0 * D * detail::need(c.h_lip, "Lipschitz constant of h missing") + ch) / Z;
    }
    case Problem::SE: {
      if (metric == Metric::W1) return 2.0 * D * detail::need(c.C_Th_star, "C*_Th missing") / Z;
      const double cth = detail::need(c.C_Th, "C_Th missing");
      return metric == Metric::TV ? cth / Z : 2.0 * std::sqrt(cth / Z);
    }
    case Problem::PS: {
      const double ct = detail::need(c.C_Th_tilde, "tilde C_Th missing");
      if (metric == Metric::W1) return (2.0 * D * detail::need(c.C_Th_tilde_star, "tilde C*_Th missing") + ct) / Z;
      return metric == Metric::TV ? ct / Z : 2.0 * std::sqrt(ct / Z);
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown problem");
}

inline double pointwise_K(const SystemSpec& s, std::size_t k, Metric metric, double Z) {
  return pointwise_K(system_constants(s, k, metric), metric, Z);
}

/// Bound on d(F mu, F mu') using the larger of the two evidences.
inline double step_bound_symmetric(Metric metric, const ConstantsReport& c, double Z_a, double Z_b, double prior_dist) {
  if (!(Z_a > 0.0) || !(Z_b > 0.0)) fail(ErrorKind::ZeroEvidence, "evidences must be positive");
  if (prior_dist == 0.0) return 0.0;
  return pointwise_K(c, metric, std::max(Z_a, Z_b)) * prior_dist;
}

/// Ledger from precomputed factors. Steps k <= window_start are excluded;
/// `initial` seeds B at the first included step's predecessor.
inline BoundLedger ledger_from_factors(Metric metric, LedgerVariant variant, const std::vector<double>& Ks,
                                       const std::vector<double>& eps, std::size_t window_start = 0,
                                       double initial = 0.0) {
  if (Ks.size() != eps.size()) fail(ErrorKind::InvalidArgument, "factor and error sequences differ in length");
  if (initial < 0.0) fail(ErrorKind::InvalidArgument, "initial error must be nonnegative");
  BoundLedger L{metric, variant, initial, {}};
  double prev = initial;
  for (std::size_t k = window_start + 1; k <= Ks.size(); ++k) {
    const double K = Ks[k - 1], e = eps[k - 1];
    if (!(K >= 0.0) || !(e >= 0.0)) fail(ErrorKind::InvalidArgument, "factors and errors must be nonnegative");
    prev = detail::ledger_step(K, prev, e);
    L.records.push_back({k, K, e, prev});
  }
  return L;
}

inline BoundLedger recursion_from_constants(Metric metric, LedgerVariant variant,
                                            const std::vector<ConstantsReport>& constants,
                                            const std::vector<double>& evidences, const std::vector<double>& eps,
                                            std::size_t window_start = 0, double initial = 0.0) {
  if (constants.size() != evidences.size() || evidences.size() != eps.size())
    fail(ErrorKind::InvalidArgument, "sequence lengths differ");
  std::vector<double> Ks(eps.size());
  for (std::size_t i = 0; i < Ks.size(); ++i) Ks[i] = pointwise_K(constants[i], metric, evidences[i]);
  return ledger_from_factors(metric, variant, Ks, eps, window_start, initial);
}

namespace detail {

inline std::vector<ConstantsReport> constants_for(const SystemSpec& s, Metric metric, std::size_t steps) {
  std::vector<ConstantsReport> out;
  out.reserve(steps);
  for (std::size_t k = 1; k <= steps; ++k) out.push_back(system_constants(s, k, metric));
  return out;
}

}  // namespace detail

/// Bound from the exact-sequence evidences Z_i(P_{i-1}).
inline BoundLedger recursion_set1(Metric metric, const SystemSpec& s, const std::vector<double>& exact_evidences,
                                  const std::vector<double>& eps, std::size_t window_start = 0) {
  return recursion_from_constants(metric, LedgerVariant::Set1, detail::constants_for(s, metric, eps.size()),
                                  exact_evidences, eps, window_start);
}

/// Computable bound from the approximate-sequence evidences Z_i(Q_{i-1}).
inline BoundLedger recursion_set2(Metric metric, const SystemSpec& s, const std::vector<double>& approx_evidences,
                                  const std::vector<double>& eps, std::size_t window_start = 0) {
  return recursion_from_constants(metric, LedgerVariant::Set2, detail::constants_for(s, metric, eps.size()),
                                  approx_evidences, eps, window_start);
}

inline double tv_to_w1_bound(double tv_bound, double D) {
  if (tv_bound < 0.0 || D < 0.0) fail(ErrorKind::InvalidArgument, "inputs must be nonnegative");
  return D * tv_bound;
}

/// Learning-error ledger when the initial prior is off by d0. The step-1
/// constant uses evidences[0], so the extra term is prod_{i<=k} K_i * d0.
inline BoundLedger inaccurate_prior_bound(Metric metric, const std::vector<ConstantsReport>& constants,
                                          const std::vector<double>& evidences, const std::vector<double>& eps,
                                          double d0, LedgerVariant variant = LedgerVariant::Set1) {
  if (d0 < 0.0) fail(ErrorKind::InvalidArgument, "prior error must be nonnegative");
  return recursion_from_constants(metric, variant, constants, evidences, eps, 0, d0);
}

inline BoundLedger inaccurate_prior_bound(Metric metric, const SystemSpec& s, const std::vector<double>& evidences,
                                          const std::vector<double>& eps, double d0) {
  return inaccurate_prior_bound(metric, detail::constants_for(s, metric, eps.size()), evidences, eps, d0);
}

/// Distance between two outputs of one approximate method.
inline double two_output_bound(Metric metric, const std::vector<ConstantsReport>& constants,
                               const std::vector<double>& eps_a, const std::vector<double>& eps_b,
                               const std::vector<double>& exact_evidences) {
  if (eps_a.size() != eps_b.size()) fail(ErrorKind::InvalidArgument, "error sequences differ in length");
  const auto a = recursion_from_constants(metric, LedgerVariant::Set1, constants, exact_evidences, eps_a);
  const auto b = recursion_from_constants(metric, LedgerVariant::Set1, constants, exact_evidences, eps_b);
  return a.final_bound() + b.final_bound();
}

inline double two_output_bound(Metric metric, const SystemSpec& s, const std::vector<double>& eps_a,
                               const std::vector<double>& eps_b, const std::vector<double>& exact_evidences) {
  return two_output_bound(metric, detail::constants_for(s, metric, eps_a.size()), eps_a, eps_b, exact_evidences);
}

struct LiteratureComparison {
  double ours;
  double lit_tv;
  double ratio;
};

inline LiteratureComparison literature_ratio(double Z_a, double Z_b) {
  if (!(Z_a > 0.0) || !(Z_b > 0.0)) fail(ErrorKind::ZeroEvidence, "evidences must be positive");
  // both constants share the 1/(Z v Z') factor, so the ratio is that of the numerators
  constexpr double kOurs = 1.0, kLit = 2.0;
  const double m = std::max(Z_a, Z_b);
  return {kOurs / m, kLit / m, kOurs / kLit};
}

}  // namespace bsl
