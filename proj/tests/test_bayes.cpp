#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bsl/bsl.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const bsl::DomainSpec kWide{-40.0, 40.0, 8001};

bsl::SystemSpec ip_system(std::vector<double> ys) {
  return bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.1, 3.0), std::move(ys), kWide);
}

const bsl::GridDensity& grid(const bsl::Distribution& d) { return std::get<bsl::GridDensity>(d); }

}  // namespace

TEST_CASE("conjugate update examples") {
  const auto r = bsl::conjugate_update_ip({0, 1}, 1.1, 3.0, 1.0);
  const auto& post = std::get<bsl::Gaussian1D>(r.posterior);
  // grid oracle
  const auto g = bsl::grid_update(ip_system({1.0}), 1, bsl::Gaussian1D{0, 1});
  const auto [gm, gv] = bsl::moments(grid(g.posterior));
  CHECK_THAT(post.mean, WithinAbs(gm, 1e-7));
  CHECK_THAT(post.variance, WithinRel(gv, 1e-6));
  CHECK_THAT(r.evidence, WithinAbs(g.evidence, 1e-9));
  CHECK_THAT(post.mean, WithinAbs(0.26128, 1e-5));
  CHECK_THAT(post.variance, WithinAbs(0.71259, 1e-5));
  CHECK_THAT(r.evidence, WithinAbs(0.17266, 1e-5));

  const auto flat = bsl::conjugate_update_ip({0.3, 2.0}, 0.0, 3.0, 1.7);
  CHECK(std::get<bsl::Gaussian1D>(flat.posterior).mean == 0.3);
  CHECK(std::get<bsl::Gaussian1D>(flat.posterior).variance == 2.0);
  CHECK_THAT(flat.evidence, WithinAbs(bsl::normal_pdf(1.7, 0.0, 3.0), 1e-15));

  const auto fixed = bsl::conjugate_update_ip({-10, 5}, 1.1, 3.0, 1.1 * -10.0);
  CHECK_THAT(std::get<bsl::Gaussian1D>(fixed.posterior).mean, WithinAbs(-10.0, 1e-12));

  CHECK_THROWS_AS(bsl::conjugate_update_ip({0, 0}, 1.0, 1.0, 0.0), bsl::Error);
  CHECK_THROWS_AS(bsl::conjugate_update_ip({0, 1}, 1.0, 0.0, 0.0), bsl::Error);
}

TEST_CASE("constant likelihood leaves the prior unchanged") {
  const auto h = bsl::LikelihoodModel::make_custom([](double, double, double) { return 0.37; });
  const auto s = bsl::SystemSpec::inverse(h, {0.0}, kWide);
  const auto prior = bsl::discretize({1.0, 2.0}, kWide);
  const auto r = bsl::grid_update(s, 1, prior);
  CHECK_THAT(r.evidence, WithinAbs(0.37, 1e-12));
  const auto& post = grid(r.posterior);
  for (std::size_t i = 0; i < post.values.size(); ++i) CHECK_THAT(post.values[i], WithinAbs(prior.values[i], 1e-12));
}

TEST_CASE("grid update matches the conjugate posterior") {
  const auto r = bsl::grid_update(ip_system({1.0}), 1, bsl::Gaussian1D{0, 1});
  const auto c = bsl::conjugate_update_ip({0, 1}, 1.1, 3.0, 1.0);
  CHECK(bsl::tv(r.posterior, c.posterior, kWide).value < 1e-7);
  CHECK_THAT(grid(r.posterior).mass(), WithinAbs(1.0, 1e-8));
}

TEST_CASE("state estimation update matches the two-stage conjugate result") {
  const bsl::DomainSpec d{-20.0, 20.0, 801};
  const auto s = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(1.0, 1.0),
                                                   bsl::LikelihoodModel::linear_gaussian(1.0, 3.0), {0.0}, d);
  const auto r = bsl::grid_update(s, 1, bsl::Gaussian1D{0, 1});
  const auto [m, v] = bsl::moments(grid(r.posterior));
  CHECK_THAT(m, WithinAbs(0.0, 1e-9));
  CHECK_THAT(v, WithinAbs(1.2, 1e-6));
  REQUIRE(r.predicted);
  const auto& pred = grid(*r.predicted);
  CHECK_THAT(pred.mass(), WithinAbs(1.0, 1e-6));
  const auto [pm, pv] = bsl::moments(pred);
  CHECK_THAT(pv, WithinAbs(2.0, 1e-6));
  CHECK_THAT(r.evidence, WithinAbs(bsl::validate_admissible(s, 1, bsl::Gaussian1D{0, 1}), 1e-12));
}

TEST_CASE("posterior normalization and evidence agreement", "[property]") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> m(-4.0, 4.0), lv(std::log(0.1), std::log(4.0)), y(-5.0, 5.0);
  const bsl::DomainSpec d{-20.0, 20.0, 401};
  for (int t = 0; t < 30; ++t) {
    const bsl::Gaussian1D prior{m(rng), std::exp(lv(rng))};
    const double obs = y(rng);
    const auto ip = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(0.8, 1.5), {obs}, d);
    const auto se = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(0.9, 0.5),
                                                      bsl::LikelihoodModel::linear_gaussian(0.8, 1.5), {obs}, d);
    for (const auto* s : {&ip, &se}) {
      const auto r = bsl::grid_update(*s, 1, prior);
      CHECK_THAT(grid(r.posterior).mass(), WithinAbs(1.0, 1e-8));
      CHECK_THAT(r.evidence, WithinRel(bsl::validate_admissible(*s, 1, prior), 1e-12));
      if (r.predicted) CHECK_THAT(grid(*r.predicted).mass(), WithinAbs(1.0, 1e-6));
    }
  }
}

TEST_CASE("conjugate and grid agree over twenty steps", "[property]") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> noise(0.0, std::sqrt(3.0));
  std::vector<double> ys(20);
  for (auto& v : ys) v = 1.1 * -9.0 + noise(rng);
  const auto s = ip_system(ys);
  bsl::Gaussian1D c{-10, 5};
  bsl::Distribution g = bsl::Gaussian1D{-10, 5};
  for (std::size_t k = 1; k <= ys.size(); ++k) {
    c = std::get<bsl::Gaussian1D>(bsl::conjugate_update_ip(c, 1.1, 3.0, ys[k - 1]).posterior);
    g = bsl::grid_update(s, k, g).posterior;
    const auto [m, v] = bsl::moments(grid(g));
    CHECK_THAT(m, WithinAbs(c.mean, 1e-6));
    CHECK_THAT(v, WithinRel(c.variance, 1e-6));
  }
}

TEST_CASE("boundary mass is reported") {
  const bsl::DomainSpec d{-10.0, 10.0, 2001};
  const auto s = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.0, 0.01), {9.9}, d);
  try {
    bsl::grid_update(s, 1, bsl::Gaussian1D{0, 1.5});
    FAIL("expected DomainTooSmall");
  } catch (const bsl::Error& e) {
    CHECK(e.kind() == bsl::ErrorKind::DomainTooSmall);
  }
}

TEST_CASE("gaussian projection of a conjugate system is exact") {
  const auto s = ip_system({1.0});
  const auto p = bsl::gaussian_projection_step(s, 1, {0, 1});
  CHECK(p.incremental_error.tv < 1e-6);
  CHECK(p.incremental_error.hellinger < 1e-6);
  CHECK(p.incremental_error.w1 < 1e-6);
  CHECK_THAT(p.approx.mean, WithinAbs(0.26128, 1e-5));
}

TEST_CASE("gaussian projection of a bimodal system loses mass") {
  const auto s = bsl::bimodal_system({1.5, 1.5});
  const auto p = bsl::gaussian_projection_step(s, 1, {0, 4});
  CHECK(p.incremental_error.tv > 0.05);
  const auto again = bsl::gaussian_projection_step(s, 1, {0, 4});
  CHECK(again.approx.mean == p.approx.mean);
  CHECK(again.approx.variance == p.approx.variance);
  CHECK(again.incremental_error.tv == p.incremental_error.tv);
  CHECK(again.incremental_error.hellinger == p.incremental_error.hellinger);
  CHECK(again.incremental_error.w1 == p.incremental_error.w1);
}

TEST_CASE("uninformative particle step resamples its input") {
  const bsl::DomainSpec d{-10.0, 10.0, 201};
  auto T = bsl::TransitionModel::linear_gaussian(1.0, 1.0);
  T.sampler = [](double x, double, std::mt19937_64&) { return x; };
  const auto h = bsl::LikelihoodModel::make_custom([](double, double, double) { return 1.0; });
  const auto s = bsl::SystemSpec::state_estimation(T, h, {0.0}, d);
  const auto prior = bsl::ParticleSet::uniform({-2.0, -1.0, 0.5, 3.0});
  double avg = 0.0;
  const int seeds = 400;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto out = bsl::particle_step(s, 1, prior, 50, static_cast<std::uint64_t>(seed));
    for (double x : out.points) CHECK(std::find(prior.points.begin(), prior.points.end(), x) != prior.points.end());
    avg += out.mean();
  }
  avg /= seeds;
  // sd of one resampled mean is about 1.8 / sqrt(50)
  CHECK_THAT(avg, WithinAbs(prior.mean(), 5.0 * 1.8 / std::sqrt(50.0 * seeds)));
}

TEST_CASE("particle step approximates the exact posterior") {
  const auto s = bsl::particle_system({0.8});
  const auto prior = bsl::discretize({0, 1}, s.x_domain);
  const auto particles = bsl::sample_particles(prior, 2000, 0);
  const auto out = bsl::particle_step(s, 1, particles, 2000, 0);
  const auto exact = bsl::grid_update(s, 1, prior);
  CHECK(bsl::w1(out, exact.posterior, s.x_domain).value < 0.1);
  const auto again = bsl::particle_step(s, 1, particles, 2000, 0);
  CHECK(again.points == out.points);
}

TEST_CASE("all-zero particle weights are reported") {
  const auto h = bsl::LikelihoodModel::make_custom([](double, double, double) { return 0.0; });
  const auto s = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(1.0, 1.0), h, {0.0},
                                                   {-10.0, 10.0, 201});
  try {
    bsl::particle_step(s, 1, bsl::ParticleSet::uniform({0.0, 1.0}), 10, 1);
    FAIL("expected AllWeightsZero");
  } catch (const bsl::Error& e) {
    CHECK(e.kind() == bsl::ErrorKind::AllWeightsZero);
  }
}

TEST_CASE("particle mean error halves when n quadruples", "[property]") {
  const auto s = bsl::particle_system({0.8});
  const auto prior = bsl::discretize({0, 1}, s.x_domain);
  const auto exact = bsl::grid_update(s, 1, prior);
  const double target = bsl::moments(grid(exact.posterior)).first;
  auto err = [&](std::size_t n) {
    double e = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto p0 = bsl::sample_particles(prior, n, seed + 1000);
      e += std::abs(bsl::particle_step(s, 1, p0, n, seed).mean() - target);
    }
    return e / 50.0;
  };
  const double ratio = err(500) / err(2000);
  CHECK(ratio >= 2.0 * 0.7);
  CHECK(ratio <= 2.0 * 1.3);
}

TEST_CASE("particle priors propagate through the grid kernel") {
  const auto s = bsl::particle_system({0.3});
  const auto p = bsl::ParticleSet::uniform({-1.0, 0.0, 0.0, 2.0});
  const auto r = bsl::grid_update(s, 1, p);
  CHECK_THAT(grid(r.posterior).mass(), WithinAbs(1.0, 1e-8));
  // predicted mean is 0.9 times the particle mean
  const auto [pm, pv] = bsl::moments(grid(*r.predicted));
  CHECK_THAT(pm, WithinAbs(0.9 * p.mean(), 1e-8));
}
