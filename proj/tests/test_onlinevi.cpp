#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "bsl/bsl.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// Direct transcription of the approximate-sequence cells of the VI table.
double table_cell(bsl::Metric m, int r, double det, const std::vector<double>& Z, std::size_t j, std::size_t k, double D) {
  const double kj = static_cast<double>(k - j);
  double prodZ = 1.0;
  for (std::size_t i = j + 1; i <= k; ++i) prodZ *= Z[i - 1];
  const double tv = std::pow(2.0 * std::numbers::pi, -r * kj / 2.0) * std::pow(det, -kj / 2.0) / (std::sqrt(2.0) * prodZ);
  if (m == bsl::Metric::TV) return tv;
  if (m == bsl::Metric::W1) return D * std::pow(2.0 * std::numbers::pi, -r * kj / 2.0) * std::pow(det, -kj / 2.0) /
                                   (std::sqrt(2.0) * prodZ);
  return std::pow(2.0, kj) * std::pow(2.0 * std::numbers::pi, -r * kj / 4.0) * std::pow(det, -kj / 4.0) /
         (std::sqrt(2.0) * std::sqrt(prodZ));
}

double table_alpha(bsl::Metric m, double D) { return m == bsl::Metric::W1 ? D / std::sqrt(2.0) : 1.0 / std::sqrt(2.0); }

double transcribed_bound(bsl::Metric m, const bsl::VIBoundInputs& in) {
  const std::size_t k = in.elbo_floors.size();
  const double D = in.D.value_or(0.0);
  auto root = [&](std::size_t j) {
    return std::sqrt(-in.r / 2.0 * kLog2Pi - 0.5 * std::log(in.det_gamma) - in.elbo_floors[j - 1]);
  };
  double total = table_alpha(m, D) * root(k);
  for (std::size_t j = 1; j < k; ++j) total += table_cell(m, in.r, in.det_gamma, in.evidences, j, k, D) * root(j);
  return total;
}

bsl::VIBoundInputs random_inputs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bsl::VIBoundInputs in;
  in.r = 1 + static_cast<int>(u(rng) * 3.0);
  in.det_gamma = 0.2 + 3.0 * u(rng);
  in.D = 5.0 + 50.0 * u(rng);
  const std::size_t k = 1 + static_cast<std::size_t>(u(rng) * 6.0);
  const double peak = bsl::vi_log_peak(in.r, in.det_gamma);
  for (std::size_t i = 0; i < k; ++i) {
    in.elbo_floors.push_back(peak - 3.0 * u(rng));
    in.evidences.push_back(0.02 + 0.5 * u(rng));
  }
  return in;
}

}  // namespace

TEST_CASE("type 1 examples") {
  bsl::VIBoundInputs in;
  in.r = 1;
  in.det_gamma = 3.0;
  in.elbo_floors = {-2.0};
  in.evidences = {0.2};
  const double expect = std::sqrt(-0.5 * kLog2Pi - 0.5 * std::log(3.0) + 2.0) / std::sqrt(2.0);
  CHECK_THAT(bsl::vi_bound_type1(in, bsl::Metric::TV), WithinAbs(expect, 1e-15));
  CHECK_THAT(bsl::vi_bound_type1(in, bsl::Metric::TV), WithinAbs(0.51563, 1e-5));

  in.elbo_floors = {bsl::vi_log_peak(1, 3.0), bsl::vi_log_peak(1, 3.0)};
  in.evidences = {0.2, 0.3};
  CHECK(bsl::vi_bound_type1(in, bsl::Metric::TV) == 0.0);
  CHECK(bsl::vi_bound_type1(in, bsl::Metric::Hellinger) == 0.0);
}

TEST_CASE("vacuous and incomplete inputs are rejected") {
  bsl::VIBoundInputs in;
  in.det_gamma = 3.0;
  in.elbo_floors = {0.0};
  in.evidences = {0.2};
  try {
    bsl::vi_bound_type1(in, bsl::Metric::TV);
    FAIL("expected VacuousBound");
  } catch (const bsl::Error& e) {
    CHECK(e.kind() == bsl::ErrorKind::VacuousBound);
  }
  in.elbo_floors = {-3.0};
  try {
    bsl::vi_bound_type1(in, bsl::Metric::W1);
    FAIL("expected MissingD");
  } catch (const bsl::Error& e) {
    CHECK(e.kind() == bsl::ErrorKind::MissingD);
  }
}

TEST_CASE("type 1 matches a direct transcription of the table", "[property]") {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 300; ++t) {
    const auto in = random_inputs(rng);
    for (auto m : {bsl::Metric::TV, bsl::Metric::Hellinger, bsl::Metric::W1})
      CHECK_THAT(bsl::vi_bound_type1(in, m), WithinRel(transcribed_bound(m, in), 1e-12));
    // W1 row is D times the TV row
    CHECK_THAT(bsl::vi_bound_type1(in, bsl::Metric::W1), WithinRel(*in.D * bsl::vi_bound_type1(in, bsl::Metric::TV), 1e-12));
    // squared Hellinger cell against the TV cell
    const std::size_t k = in.elbo_floors.size();
    for (std::size_t j = 1; j < k; ++j) {
      const double h = table_cell(bsl::Metric::Hellinger, in.r, in.det_gamma, in.evidences, j, k, 0.0);
      const double tv = table_cell(bsl::Metric::TV, in.r, in.det_gamma, in.evidences, j, k, 0.0);
      CHECK_THAT(h * h, WithinRel(std::pow(4.0, static_cast<double>(k - j)) * tv / std::sqrt(2.0), 1e-12));
    }
  }
}

TEST_CASE("type 2 examples") {
  bsl::VIBoundInputs in;
  in.r = 1;
  in.det_gamma = 3.0;
  in.elbo_floors = {-2.0};
  in.evidences = {0.2};
  in.beta_inputs = {{0.1, 0.5, 0.2}};
  const double root = std::sqrt(-0.5 * kLog2Pi - 0.5 * std::log(3.0) + 2.0);
  CHECK_THAT(bsl::vi_bound_type2(in, bsl::Metric::TV), WithinAbs((root + std::sqrt(2.0) * 0.1 * 0.5 / 0.2) / std::sqrt(2.0), 1e-15));
  CHECK_THAT(bsl::vi_bound_type2(in, bsl::Metric::TV), WithinAbs(0.7657, 1e-4));
  CHECK(bsl::vi_beta({0.4, 0.5, 0.2}, bsl::Metric::Hellinger) == 2.0);
  CHECK_THROWS_AS(bsl::vi_bound_type2(in, bsl::Metric::TV) + bsl::vi_beta({0.1, 0.5, 0.0}, bsl::Metric::TV), bsl::Error);
}

TEST_CASE("zero parameter error reduces type 2 to type 1", "[property]") {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 100; ++t) {
    auto in = random_inputs(rng);
    for (std::size_t i = 0; i < in.elbo_floors.size(); ++i) in.beta_inputs.push_back({u(rng), 0.0, u(rng)});
    for (auto m : {bsl::Metric::TV, bsl::Metric::Hellinger, bsl::Metric::W1}) {
      for (const auto& b : in.beta_inputs) CHECK(bsl::vi_beta(b, m) == 0.0);
      CHECK(bsl::vi_bound_type2(in, m) == bsl::vi_bound_type1(in, m));
    }
  }
}

TEST_CASE("elbo of the exact posterior is the log evidence") {
  const auto s = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.1, 3.0), {1.0}, {-40.0, 40.0, 8001});
  const bsl::Gaussian1D prior{0, 1};
  const auto c = bsl::conjugate_update_ip(prior, 1.1, 3.0, 1.0);
  const auto post = std::get<bsl::Gaussian1D>(c.posterior);
  const auto e = bsl::elbo_mc(post, s, 1, prior, 2000, 3);
  CHECK(std::abs(e.value - std::log(c.evidence)) <= 2.0 * e.std_error + 1e-10);

  // a Gaussian shifted by 10 posterior sds: the gap is the KL, 50 nats
  const bsl::Gaussian1D far{post.mean + 10.0 * post.sd(), post.variance};
  const auto f = bsl::elbo_mc(far, s, 1, prior, 2000, 3);
  CHECK(f.value < std::log(c.evidence) - 1.0);
  CHECK_THAT(std::log(c.evidence) - f.value, WithinAbs(50.0, 5.0 * f.std_error + 1e-6));

  const auto again = bsl::elbo_mc(far, s, 1, prior, 2000, 3);
  CHECK(again.value == f.value);
  CHECK(again.std_error == f.std_error);
  CHECK_THROWS_AS(bsl::elbo_mc(far, s, 1, prior, 10, 3), bsl::Error);
}

TEST_CASE("elbo never exceeds the log evidence", "[property]") {
  const auto s = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.1, 3.0), {1.0}, {-40.0, 40.0, 8001});
  const bsl::Gaussian1D prior{0, 1};
  const double logz = std::log(bsl::conjugate_update_ip(prior, 1.1, 3.0, 1.0).evidence);
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> m(-1.5, 2.0), lv(std::log(0.05), std::log(3.0));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const bsl::Gaussian1D q{m(rng), std::exp(lv(rng))};
    const auto e = bsl::elbo_mc(q, s, 1, prior, 1000, seed);
    CHECK(e.value <= logz + 3.0 * e.std_error);
  }
}

TEST_CASE("state estimation elbo uses the predicted prior") {
  const bsl::DomainSpec d{-20.0, 20.0, 801};
  const auto s = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(1.0, 1.0),
                                                   bsl::LikelihoodModel::linear_gaussian(1.0, 3.0), {0.0}, d);
  // predicted N(0, 2), posterior N(0, 1.2), evidence N(0; 0, 5)
  const auto e = bsl::elbo_mc({0.0, 1.2}, s, 1, bsl::Gaussian1D{0, 1}, 500, 1);
  CHECK_THAT(e.value, WithinAbs(std::log(bsl::normal_pdf(0.0, 0.0, 5.0)), 1e-10));
}

TEST_CASE("grid elbo obeys Jensen on the joint toy") {
  const auto s = bsl::vi_toy_system(bsl::vi_toy_data(3, 4));
  const auto p0 = bsl::discretize(bsl::Gaussian2D{0.0, 0.3, 1.0, 0.0, 0.25}, s.x_domain, s.w_domain);
  bsl::Distribution Q = p0;
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto star = bsl::grid_update(s, k, Q);
    bsl::Distribution next = bsl::discretize(bsl::moment_match(std::get<bsl::JointGrid2D>(star.posterior)), s.x_domain, s.w_domain);
    CHECK(bsl::elbo_grid(next, s, k, Q) <= std::log(star.evidence) + 1e-12);
    CHECK_THAT(bsl::elbo_grid(star.posterior, s, k, Q), WithinAbs(std::log(star.evidence), 1e-10));
    Q = next;
  }
}

TEST_CASE("parameter sensitivity constant is finite and positive") {
  const auto s = bsl::vi_toy_system({0.3});
  const double c = bsl::c_vi_tilde(s, 1);
  CHECK(std::isfinite(c));
  CHECK(c > 0.0);
  CHECK_THROWS_AS(bsl::c_vi_tilde(bsl::particle_system({0.3}), 1), bsl::Error);
}

TEST_CASE("type 1 bound dominates on the joint toy", "[property]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = bsl::vi_demo(5, seed);
    REQUIRE(r.record.rows.size() == 5);
    for (const auto& row : r.record.rows) CHECK(row.distance <= row.bound + 1e-9);
    CHECK(r.record.violations() == 0);
  }
}
