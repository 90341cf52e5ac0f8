#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bsl/bayes.hpp"
#include "bsl/bounds.hpp"
#include "bsl/emit.hpp"
#include "bsl/models.hpp"
#include "bsl/onlinevi.hpp"
#include "bsl/parallel.hpp"
#include "bsl/reduction.hpp"

namespace bsl {

enum class Experiment { ReproduceCase1, ReproduceCase2, ReproduceCase3, BoundValidate, ReductionFuzz, VIDemo };
enum class FilterKind { GaussProj, Particle };
enum class FuzzTheorem { TV, Hellinger, W1_IP, W1_DYN };

inline const char* to_string(FilterKind f) { return f == FilterKind::GaussProj ? "gauss-proj" : "particle"; }

inline const char* to_string(FuzzTheorem t) {
  switch (t) {
    case FuzzTheorem::TV: return "tv";
    case FuzzTheorem::Hellinger: return "hellinger";
    case FuzzTheorem::W1_IP: return "w1-ip";
    case FuzzTheorem::W1_DYN: return "w1-dyn";
  }
  return "?";
}

struct ExperimentConfig {
  Experiment experiment = Experiment::ReproduceCase1;
  std::size_t steps = 20;
  std::uint64_t seed = 0;
  std::optional<DomainSpec> domain;
  std::string output_dir = "out";
  FilterKind filter = FilterKind::GaussProj;
  FuzzTheorem theorem = FuzzTheorem::TV;
  std::size_t trials = 1000;
  std::size_t threads = 1;

  void validate() const {
    if (steps < 1) fail(ErrorKind::InvalidArgument, "steps must be at least 1");
    if (domain) domain->validate();
    if (output_dir.empty()) fail(ErrorKind::InvalidArgument, "output directory must be set");
  }
};

/// Rows for one metric, in step order.
inline RunRecord select_metric(const RunRecord& r, Metric m) {
  RunRecord out{r.name + "_" + std::string(to_string(m)), {}};
  for (const auto& row : r.rows)
    if (row.metric == m) out.rows.push_back(row);
  return out;
}

/// One file per metric present in the record.
inline std::vector<std::filesystem::path> emit_per_metric(const RunRecord& r, EmitFormat fmt,
                                                          const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (Metric m : {Metric::TV, Metric::Hellinger, Metric::W1}) {
    const auto sub = select_metric(r, m);
    if (!sub.rows.empty()) out.push_back(emit(sub, fmt, dir));
  }
  if (out.empty()) fail(ErrorKind::InvalidArgument, "refusing to emit an empty record");
  return out;
}

// Two-prior reproduction: a = 1.1, noise variance 3, one observation reused every step.

constexpr double kReproGain = 1.1;
constexpr double kReproNoiseVar = 3.0;

inline DomainSpec default_repro_domain() { return {-40.0, 40.0, 8001}; }

struct ReproduceResult {
  RunRecord record;
  Gaussian1D prior_a, prior_b;
  double x_star = 0.0;
  double y = 0.0;
};

inline std::pair<Gaussian1D, Gaussian1D> case_priors(int which, std::mt19937_64& rng) {
  switch (which) {
    case 1: return {{-10.0, 5.0}, {8.0, 5.0}};
    case 2: return {{0.0, 1.0}, {2.0, 1.0}};
    case 3: {
      std::uniform_real_distribution<double> mean(-10.0, 10.0), var(0.0, 5.0);
      auto draw = [&] {
        const double m = mean(rng);
        return Gaussian1D{m, std::max(1e-3, var(rng))};
      };
      const auto a = draw();
      return {a, draw()};
    }
    default: fail(ErrorKind::InvalidArgument, "case must be 1, 2 or 3");
  }
}

inline ReproduceResult reproduce(int which, std::size_t steps, std::uint64_t seed,
                                 const DomainSpec& domain = default_repro_domain()) {
  if (steps < 1) fail(ErrorKind::InvalidArgument, "steps must be at least 1");
  domain.validate();
  auto rng = step_rng(seed, 0);
  auto [pa, pb] = case_priors(which, rng);
  const double x_star = std::normal_distribution<double>(pa.mean, pa.sd())(rng);
  const double y = kReproGain * x_star + std::normal_distribution<double>(0.0, std::sqrt(kReproNoiseVar))(rng);

  const auto sys = SystemSpec::inverse(LikelihoodModel::linear_gaussian(kReproGain, kReproNoiseVar),
                                       std::vector<double>(steps, y), domain);
  const auto consts = system_constants(sys, 1, Metric::TV);

  ReproduceResult out{{"case" + std::to_string(which) + "_seed" + std::to_string(seed), {}}, pa, pb, x_star, y};
  Gaussian1D a = pa, b = pb;
  std::vector<RunRow> tv_rows, h_rows;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double prior_tv = detail::tv_gaussian_closed(a, b), prior_h = detail::hellinger_gaussian_closed(a, b);
    const auto ua = conjugate_update_ip(a, kReproGain, kReproNoiseVar, y);
    const auto ub = conjugate_update_ip(b, kReproGain, kReproNoiseVar, y);
    detail::checked_evidence(ua.evidence);
    detail::checked_evidence(ub.evidence);
    a = std::get<Gaussian1D>(ua.posterior);
    b = std::get<Gaussian1D>(ub.posterior);
    tv_rows.push_back({k, Metric::TV, detail::tv_gaussian_closed(a, b),
                       step_bound_symmetric(Metric::TV, consts, ua.evidence, ub.evidence, prior_tv), ua.evidence,
                       ub.evidence});
    h_rows.push_back({k, Metric::Hellinger, detail::hellinger_gaussian_closed(a, b),
                      step_bound_symmetric(Metric::Hellinger, consts, ua.evidence, ub.evidence, prior_h), ua.evidence,
                      ub.evidence});
  }
  out.record.rows = tv_rows;
  out.record.rows.insert(out.record.rows.end(), h_rows.begin(), h_rows.end());
  return out;
}

// Filter validation runs.

struct BoundValidateResult {
  RunRecord set1, set2;
  std::vector<double> eps_tv, eps_hellinger, eps_w1;
};

/// Bimodal inverse problem: h(y|x) = 0.6 N(y; x, 1) + 0.4 N(y; -x, 1).
inline SystemSpec bimodal_system(std::vector<double> ys, DomainSpec d = {-40.0, 40.0, 8001}) {
  auto fn = [](double y, double x, double) { return 0.6 * normal_pdf(y, x, 1.0) + 0.4 * normal_pdf(y, -x, 1.0); };
  return SystemSpec::inverse(LikelihoodModel::make_custom(fn, 1.0 / std::sqrt(2.0 * std::numbers::pi), std::nullopt),
                             std::move(ys), d);
}

inline std::vector<double> bimodal_data(std::size_t steps, std::uint64_t seed, double x_true = 1.5) {
  auto rng = step_rng(seed, 1ull << 40);
  std::bernoulli_distribution first(0.6);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> ys(steps);
  for (auto& y : ys) y = (first(rng) ? x_true : -x_true) + noise(rng);
  return ys;
}

/// Linear-Gaussian state estimation: x' = 0.9 x + N(0, 0.5), y = x + N(0, 1).
inline SystemSpec particle_system(std::vector<double> ys, DomainSpec d = {-20.0, 20.0, 2001}) {
  return SystemSpec::state_estimation(TransitionModel::linear_gaussian(0.9, 0.5),
                                      LikelihoodModel::linear_gaussian(1.0, 1.0), std::move(ys), d);
}

inline std::vector<double> particle_data(std::size_t steps, std::uint64_t seed) {
  auto rng = step_rng(seed, 1ull << 40);
  std::normal_distribution<double> n01(0.0, 1.0);
  double x = n01(rng);
  std::vector<double> ys(steps);
  for (auto& y : ys) {
    x = 0.9 * x + std::sqrt(0.5) * n01(rng);
    y = x + n01(rng);
  }
  return ys;
}

constexpr std::size_t kParticleCount = 2000;

namespace detail {

inline void ledger_rows(RunRecord& out, Metric m, const BoundLedger& L, const std::vector<double>& dist,
                        const std::vector<double>& zp, const std::vector<double>& zq) {
  for (const auto& r : L.records)
    out.rows.push_back({r.k, m, dist[r.k - 1], r.cum_bound, zp[r.k - 1], zq[r.k - 1]});
}

}  // namespace detail

inline BoundValidateResult bound_validate_gauss_proj(std::size_t steps, std::uint64_t seed) {
  if (steps < 1) fail(ErrorKind::InvalidArgument, "steps must be at least 1");
  const auto s = bimodal_system(bimodal_data(steps, seed));
  const Gaussian1D p0{0.0, 4.0};
  Distribution P = p0;
  Gaussian1D Q = p0;
  std::vector<double> zp, zq, d_tv, d_h;
  BoundValidateResult out;
  for (std::size_t k = 1; k <= steps; ++k) {
    auto exact = grid_update(s, k, P);
    auto proj = gaussian_projection_step(s, k, Q);
    zp.push_back(exact.evidence);
    zq.push_back(proj.exact.evidence);
    out.eps_tv.push_back(proj.incremental_error.tv);
    out.eps_hellinger.push_back(proj.incremental_error.hellinger);
    out.eps_w1.push_back(proj.incremental_error.w1);
    P = exact.posterior;
    Q = proj.approx;
    const Distribution qg = grid_values(Q, s.x_domain);
    d_tv.push_back(tv(P, qg, s.x_domain).value);
    d_h.push_back(hellinger(P, qg, s.x_domain).value);
  }
  const std::string base = std::string(to_string(FilterKind::GaussProj)) + "_seed" + std::to_string(seed);
  out.set1.name = base + "_set1";
  out.set2.name = base + "_set2";
  for (auto [m, eps, dist] : {std::tuple{Metric::TV, &out.eps_tv, &d_tv},
                              std::tuple{Metric::Hellinger, &out.eps_hellinger, &d_h}}) {
    detail::ledger_rows(out.set1, m, recursion_set1(m, s, zp, *eps), *dist, zp, zq);
    detail::ledger_rows(out.set2, m, recursion_set2(m, s, zq, *eps), *dist, zp, zq);
  }
  return out;
}

inline BoundValidateResult bound_validate_particle(std::size_t steps, std::uint64_t seed,
                                                   std::size_t n = kParticleCount) {
  if (steps < 1) fail(ErrorKind::InvalidArgument, "steps must be at least 1");
  const auto s = particle_system(particle_data(steps, seed));
  const auto p0 = discretize(Gaussian1D{0.0, 1.0}, s.x_domain);
  Distribution P = p0;
  ParticleSet Q = sample_particles(p0, n, seed);
  std::vector<double> zp, zq, d_w1;
  BoundValidateResult out;
  for (std::size_t k = 1; k <= steps; ++k) {
    auto exact = grid_update(s, k, P);
    // the exact update of Q_{k-1}; at k = 1 the approximate prior is P_0 itself
    auto q_star = k == 1 ? exact : grid_update(s, k, Q);
    zp.push_back(exact.evidence);
    zq.push_back(q_star.evidence);
    Q = particle_step(s, k, Q, n, seed);
    P = exact.posterior;
    out.eps_w1.push_back(w1(q_star.posterior, Q, s.x_domain).value);
    d_w1.push_back(w1(P, Q, s.x_domain).value);
  }
  const std::string base = std::string(to_string(FilterKind::Particle)) + "_seed" + std::to_string(seed);
  out.set1 = {base + "_set1", {}};
  out.set2 = {base + "_set2", {}};
  detail::ledger_rows(out.set1, Metric::W1, recursion_set1(Metric::W1, s, zp, out.eps_w1), d_w1, zp, zq);
  detail::ledger_rows(out.set2, Metric::W1, recursion_set2(Metric::W1, s, zq, out.eps_w1), d_w1, zp, zq);
  return out;
}

inline BoundValidateResult bound_validate(FilterKind f, std::size_t steps, std::uint64_t seed) {
  return f == FilterKind::GaussProj ? bound_validate_gauss_proj(steps, seed) : bound_validate_particle(steps, seed);
}

// Reduction fuzzing.

/// Parameters of one randomized reduction instance.
struct FuzzCase {
  Problem problem = Problem::IP;
  double lower = -1.0, upper = 1.0;
  std::size_t n = 401;
  double c = 1.0, s = 1.0;  // likelihood gain and noise variance
  double a = 1.0, q = 1.0;  // transition slope and noise variance
  double b = 0.0;           // parameter gain (joint systems)
  double y = 0.0;
  Gaussian1D p, p2;
  Gaussian1D w_prior{0.0, 0.1};
};

inline SystemSpec fuzz_system(const FuzzCase& f) {
  const DomainSpec d{f.lower, f.upper, f.n};
  const auto h = LikelihoodModel::linear_gaussian(f.c, f.s);
  switch (f.problem) {
    case Problem::IP: return SystemSpec::inverse(h, {f.y}, d);
    case Problem::SE: return SystemSpec::state_estimation(TransitionModel::linear_gaussian(f.a, f.q), h, {f.y}, d);
    case Problem::PS:
      return SystemSpec::parameter_state(TransitionModel::linear_gaussian(f.a, f.q, f.b), h, {f.y}, d,
                                         DomainSpec{-1.0, 1.0, 101});
  }
  fail(ErrorKind::InvalidArgument, "unknown problem");
}

inline std::pair<Distribution, Distribution> fuzz_priors(const FuzzCase& f, const SystemSpec& s) {
  if (f.problem != Problem::PS) return {f.p, f.p2};
  auto joint = [&](const Gaussian1D& x) {
    return discretize(Gaussian2D{x.mean, f.w_prior.mean, x.variance, 0.0, f.w_prior.variance}, s.x_domain,
                      s.w_domain);
  };
  return {joint(f.p), joint(f.p2)};
}

inline FuzzCase draw_fuzz_case(FuzzTheorem t, std::uint64_t seed, std::size_t trial) {
  auto rng = step_rng(seed, trial);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto loguni = [&](double lo, double hi) { return lo * std::pow(hi / lo, u01(rng)); };
  FuzzCase f;
  const double r = u01(rng);
  if (t == FuzzTheorem::W1_IP) f.problem = Problem::IP;
  else if (t == FuzzTheorem::W1_DYN) f.problem = Problem::SE;
  else f.problem = r < 0.4 ? Problem::IP : r < 0.8 ? Problem::SE : Problem::PS;
  const double L = loguni(0.5, 30.0);
  f.lower = -L;
  f.upper = L;
  f.n = f.problem == Problem::PS ? 101 : 401;
  auto prior = [&] { return Gaussian1D{(2.0 * u01(rng) - 1.0) * L / 4.0, std::pow(loguni(L / 100.0, L / 12.0), 2)}; };
  f.p = prior();
  f.p2 = prior();
  if (u01(rng) < 0.5) {
    // nearby pair: the regime where reduction certificates are attainable
    f.p2 = {f.p.mean + (u01(rng) - 0.5) * f.p.sd(), f.p.variance * loguni(0.8, 1.25)};
  }
  f.c = (u01(rng) < 0.5 ? -1.0 : 1.0) * loguni(0.1, 10.0);
  f.s = std::pow(loguni(L / 300.0, 2.0 * L), 2);
  f.a = (u01(rng) < 0.8 ? 1.0 : -1.0) * loguni(0.1, 1.0);
  f.q = std::pow(loguni(L / 50.0, L / 8.0), 2);
  f.b = loguni(0.05, 1.0);
  f.w_prior = {0.5 * (2.0 * u01(rng) - 1.0), std::pow(loguni(0.05, 0.3), 2)};
  const double x_true = std::normal_distribution<double>(f.p.mean, f.p.sd())(rng);
  f.y = f.c * x_true + std::normal_distribution<double>(0.0, std::sqrt(f.s))(rng);
  return f;
}

inline ReductionVerdict run_fuzz_case(FuzzTheorem t, const FuzzCase& f) {
  const auto s = fuzz_system(f);
  const auto [p, q] = fuzz_priors(f, s);
  switch (t) {
    case FuzzTheorem::TV: return check_tv(s, 1, p, q);
    case FuzzTheorem::Hellinger: return check_hellinger(s, 1, p, q);
    case FuzzTheorem::W1_IP: return check_w1(s, 1, p, q, W1Variant::IP);
    case FuzzTheorem::W1_DYN: return check_w1(s, 1, p, q, W1Variant::DYN);
  }
  fail(ErrorKind::InvalidArgument, "unknown theorem");
}

constexpr double kReductionSlack = 1e-8;

struct FuzzTrial {
  bool evaluated = false;
  std::optional<ReductionVerdict> verdict;
};

struct FuzzSummary {
  FuzzTheorem theorem = FuzzTheorem::TV;
  std::size_t attempted = 0, evaluated = 0, skipped = 0;
  std::size_t guaranteed = 0, unsound = 0;
  std::size_t guaranteed_er1 = 0, guaranteed_er2 = 0;
  std::vector<std::size_t> guaranteed_trials;
};

inline bool unsound(const ReductionVerdict& v) {
  return v.guaranteed && v.measured_post_dist > v.measured_prior_dist + kReductionSlack;
}

/// Runs trials in index order until `trials` instances have been evaluated.
/// Instances whose posteriors leave the domain are skipped.
inline FuzzSummary reduction_fuzz(FuzzTheorem t, std::size_t trials, std::uint64_t seed, std::size_t threads = 1) {
  if (trials < 1) fail(ErrorKind::InvalidArgument, "trials must be at least 1");
  FuzzSummary out;
  out.theorem = t;
  std::size_t next = 0;
  const std::size_t cap = 20 * trials;
  while (out.evaluated < trials && next < cap) {
    const std::size_t batch = std::min(trials - out.evaluated, cap - next);
    const auto res = parallel_map(batch, threads, [&](std::size_t i) {
      FuzzTrial r;
      try {
        r.verdict = run_fuzz_case(t, draw_fuzz_case(t, seed, next + i));
        r.evaluated = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DomainTooSmall && e.kind() != ErrorKind::ZeroEvidence) throw;
      }
      return r;
    });
    for (std::size_t i = 0; i < batch; ++i) {
      ++out.attempted;
      if (!res[i].evaluated) {
        ++out.skipped;
        continue;
      }
      ++out.evaluated;
      const auto& v = *res[i].verdict;
      if (v.guaranteed) {
        ++out.guaranteed;
        out.guaranteed_trials.push_back(next + i);
        if (v.theorem == ReductionTheorem::H_ER1) ++out.guaranteed_er1;
        if (v.theorem == ReductionTheorem::H_ER2) ++out.guaranteed_er2;
      }
      if (unsound(v)) ++out.unsound;
    }
    next += batch;
  }
  return out;
}

// Online VI demo on a joint parameter-state toy.

/// x' = 0.8 x + 0.5 w + N(0, 0.5), y = x + N(0, 1), w held fixed at its true value 0.5.
inline SystemSpec vi_toy_system(std::vector<double> ys) {
  return SystemSpec::parameter_state(TransitionModel::linear_gaussian(0.8, 0.5, 0.5),
                                     LikelihoodModel::linear_gaussian(1.0, 1.0), std::move(ys),
                                     DomainSpec{-12.0, 12.0, 121}, DomainSpec{-3.0, 3.0, 101});
}

inline std::vector<double> vi_toy_data(std::size_t steps, std::uint64_t seed, double w_true = 0.5) {
  auto rng = step_rng(seed, 1ull << 40);
  std::normal_distribution<double> n01(0.0, 1.0);
  double x = n01(rng);
  std::vector<double> ys(steps);
  for (auto& y : ys) {
    x = 0.8 * x + 0.5 * w_true + std::sqrt(0.5) * n01(rng);
    y = x + n01(rng);
  }
  return ys;
}

struct VIDemoResult {
  RunRecord record;
  VIBoundInputs inputs;
};

/// Moment-matched Gaussian Q_k, ELBO floors set to the exact grid ELBO of each Q_k.
inline VIDemoResult vi_demo(std::size_t steps, std::uint64_t seed) {
  if (steps < 1) fail(ErrorKind::InvalidArgument, "steps must be at least 1");
  const auto s = vi_toy_system(vi_toy_data(steps, seed));
  const auto p0 = discretize(Gaussian2D{0.0, 0.3, 1.0, 0.0, 0.25}, s.x_domain, s.w_domain);
  Distribution P = p0, Q = p0;
  VIDemoResult out{{"vi-demo_seed" + std::to_string(seed), {}}, {}};
  out.inputs.r = 1;
  out.inputs.det_gamma = s.h.noise_var;
  std::vector<double> zp;
  for (std::size_t k = 1; k <= steps; ++k) {
    auto exact = grid_update(s, k, P);
    auto q_star = grid_update(s, k, Q);
    Distribution q_next = discretize(moment_match(std::get<JointGrid2D>(q_star.posterior)), s.x_domain, s.w_domain);
    out.inputs.elbo_floors.push_back(elbo_grid(q_next, s, k, Q));
    out.inputs.evidences.push_back(q_star.evidence);
    zp.push_back(exact.evidence);
    P = exact.posterior;
    Q = q_next;
    auto prefix = out.inputs;
    out.record.rows.push_back({k, Metric::TV, tv(P, Q, s.x_domain).value, vi_bound_type1(prefix, Metric::TV),
                               exact.evidence, q_star.evidence});
  }
  return out;
}

}  // namespace bsl
