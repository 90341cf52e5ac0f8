#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "bsl/bsl.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const bsl::DomainSpec kWide{-40.0, 40.0, 8001};

/// Brute-force sup of f on a dense independent grid.
template <class F>
double dense_sup(F f, double lo, double hi, std::size_t n = 400001) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, f(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1)));
  return m;
}

/// Simpson integral of f on [lo, hi].
template <class F>
double dense_integral(F f, double lo, double hi, std::size_t n = 20001) {
  const bsl::DomainSpec d{lo, hi, n};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(d.node(i));
  return bsl::simpson(v, d.step());
}

}  // namespace

TEST_CASE("C_h of a gaussian likelihood") {
  const auto s = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.1, 3.0), {1.0}, kWide);
  const auto c = bsl::system_constants(s, 1, bsl::Metric::TV);
  const double oracle = dense_sup([](double x) { return bsl::normal_pdf(1.0, 1.1 * x, 3.0); }, -5.0, 5.0);
  REQUIRE(c.C_h);
  CHECK_THAT(*c.C_h, WithinAbs(oracle, 1e-9));
  CHECK_THAT(*c.C_h, WithinAbs(0.23033, 1e-5));
  CHECK_FALSE(c.h_lip);
}

TEST_CASE("Lipschitz constant of a gaussian likelihood") {
  const auto s = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.1, 3.0), {1.0}, kWide);
  const auto c = bsl::system_constants(s, 1, bsl::Metric::W1);
  const double lo = -10.0, hi = 10.0;
  const std::size_t n = 400001;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  const double oracle = dense_sup(
      [&](double x) { return std::abs(bsl::normal_pdf(1.0, 1.1 * (x + h), 3.0) - bsl::normal_pdf(1.0, 1.1 * x, 3.0)) / h; },
      lo, hi, n);
  REQUIRE(c.h_lip);
  CHECK_THAT(*c.h_lip, WithinRel(oracle, 1e-6));
  CHECK_THAT(*c.h_lip, WithinAbs(0.08872, 1e-5));
  CHECK(c.D == 80.0);
}

TEST_CASE("C_Th of a gaussian state estimation system") {
  const bsl::DomainSpec d{-20.0, 20.0, 801};
  const auto s = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(1.0, 1.0),
                                                   bsl::LikelihoodModel::linear_gaussian(1.0, 3.0), {0.5}, d);
  const auto c = bsl::system_constants(s, 1, bsl::Metric::TV);
  // g(x_prev) = integral of h(y, x) T(x | x_prev) dx, maximized over x_prev
  double oracle = 0.0;
  for (double xp = -1.0; xp <= 2.0; xp += 0.01)
    oracle = std::max(oracle, dense_integral([&](double x) { return bsl::normal_pdf(0.5, x, 3.0) * bsl::normal_pdf(x, xp, 1.0); },
                                             -30.0, 30.0));
  REQUIRE(c.C_Th);
  CHECK_THAT(*c.C_Th, WithinAbs(oracle, 1e-8));
  CHECK_THAT(*c.C_Th, WithinAbs(0.19947, 1e-5));
  CHECK(*c.C_Th >= bsl::grid_C_Th(s, 1));
  // the SE constant never exceeds the sup of h
  CHECK(*c.C_Th <= 1.0 / std::sqrt(2.0 * std::numbers::pi * 3.0));
}

TEST_CASE("evidence and admissibility") {
  const auto ip = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.1, 3.0), {1.0}, kWide);
  const double z = bsl::validate_admissible(ip, 1, bsl::Gaussian1D{0, 1});
  CHECK_THAT(z, WithinAbs(bsl::normal_pdf(1.0, 0.0, 4.21), 1e-10));
  CHECK_THAT(z, WithinAbs(0.17266, 1e-5));

  const bsl::DomainSpec d{-20.0, 20.0, 801};
  const auto se = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(1.0, 1.0),
                                                    bsl::LikelihoodModel::linear_gaussian(1.0, 3.0), {0.0}, d);
  const double zs = bsl::validate_admissible(se, 1, bsl::Gaussian1D{0, 1});
  CHECK_THAT(zs, WithinAbs(bsl::normal_pdf(0.0, 0.0, 5.0), 1e-6));
  CHECK_THAT(zs, WithinAbs(0.17841, 1e-5));
}

TEST_CASE("zero evidence is rejected") {
  const bsl::DomainSpec d{-10.0, 10.0, 2001};
  const auto h = bsl::LikelihoodModel::make_custom([](double, double x, double) { return x >= 5.0 && x <= 6.0 ? 1.0 : 0.0; });
  const auto s = bsl::SystemSpec::inverse(h, {0.0}, d);
  std::vector<double> v(d.grid_points, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (d.node(i) < 3.0) v[i] = bsl::normal_pdf(d.node(i), 0.0, 1.0);
  bsl::GridDensity p{d, v, true};
  const double m = p.mass();
  for (auto& x : p.values) x /= m;
  try {
    bsl::validate_admissible(s, 1, p);
    FAIL("expected ZeroEvidence");
  } catch (const bsl::Error& e) {
    CHECK(e.kind() == bsl::ErrorKind::ZeroEvidence);
  }
}

TEST_CASE("closed-form constants match refined grid estimates", "[property]") {
  auto gap = [](std::size_t n) {
    const auto s = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.1, 3.0), {1.0}, {-40.0, 40.0, n});
    const auto c = bsl::system_constants(s, 1, bsl::Metric::W1);
    return std::pair{(*c.C_h - bsl::grid_C_h(s, 1)) / *c.C_h, (*c.h_lip - bsl::grid_h_lip(s, 1)) / *c.h_lip};
  };
  const auto [ch8, lip8] = gap(8001);
  const auto [ch32, lip32] = gap(32001);
  CHECK(ch8 >= 0.0);
  CHECK(lip8 >= 0.0);
  CHECK(ch8 < 1e-4);
  CHECK(lip8 < 1e-4);
  CHECK(ch32 <= ch8);
  CHECK(lip32 <= lip8);
}

TEST_CASE("reported constants dominate grid estimates", "[property]") {
  const bsl::DomainSpec d{-15.0, 15.0, 301};
  for (double a : {0.5, 1.0, 1.7})
    for (double y : {-1.0, 0.0, 2.0}) {
      const auto se = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(a, 0.7),
                                                        bsl::LikelihoodModel::linear_gaussian(0.9, 1.5), {y}, d);
      const auto c = bsl::system_constants(se, 1, bsl::Metric::W1);
      CHECK(*c.C_Th >= bsl::grid_C_Th(se, 1));
      CHECK(*c.C_Th_star >= bsl::grid_C_Th_star(se, 1));
      CHECK(*c.C_Th <= *bsl::system_constants(bsl::SystemSpec::inverse(se.h, {y}, d), 1, bsl::Metric::TV).C_h);
    }
  const auto bump = bsl::LikelihoodModel::make_custom([](double y, double x, double) {
    return 0.6 * bsl::normal_pdf(y, x, 1.0) + 0.4 * bsl::normal_pdf(y, -x, 1.0);
  });
  const auto ip = bsl::SystemSpec::inverse(bump, {1.3}, d);
  const auto c = bsl::system_constants(ip, 1, bsl::Metric::W1);
  CHECK(*c.C_h >= bsl::grid_C_h(ip, 1));
  CHECK(*c.h_lip >= bsl::grid_h_lip(ip, 1));
}

TEST_CASE("declared sup below the grid maximum is rejected") {
  const auto h = bsl::LikelihoodModel::make_custom([](double y, double x, double) { return bsl::normal_pdf(y, x, 1.0); }, 0.1);
  const auto s = bsl::SystemSpec::inverse(h, {0.0}, {-10.0, 10.0, 201});
  CHECK_THROWS_AS(bsl::system_constants(s, 1, bsl::Metric::TV), bsl::Error);
}

TEST_CASE("unbounded likelihood is reported") {
  const auto h = bsl::LikelihoodModel::make_custom([](double, double x, double) { return 1.0 / std::abs(x); });
  const auto s = bsl::SystemSpec::inverse(h, {0.0}, {-1.0, 1.0, 201});
  try {
    bsl::system_constants(s, 1, bsl::Metric::TV);
    FAIL("expected an error");
  } catch (const bsl::Error& e) {
    CHECK((e.kind() == bsl::ErrorKind::UnboundedConstant || e.kind() == bsl::ErrorKind::NonFinite));
  }
}

TEST_CASE("grid kernel columns have unit mass") {
  const bsl::DomainSpec d{-10.0, 10.0, 201};
  const auto s = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(0.9, 0.5),
                                                   bsl::LikelihoodModel::linear_gaussian(1.0, 1.0), {0.0}, d);
  const auto& K = s.kernel();
  const auto w = bsl::trapezoid_weights(d);
  for (std::size_t j = 0; j < d.grid_points; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < d.grid_points; ++i) m += w[i] * K(0, i, j);
    CHECK_THAT(m, WithinAbs(1.0, 1e-6));
  }
}

TEST_CASE("g equals the transition integral") {
  const bsl::DomainSpec d{-12.0, 12.0, 241};
  const auto s = bsl::SystemSpec::state_estimation(bsl::TransitionModel::linear_gaussian(0.8, 0.6),
                                                   bsl::LikelihoodModel::linear_gaussian(1.2, 0.9), {0.7}, d);
  const auto g = bsl::transition_integral(s, 1);
  for (std::size_t j = 0; j < d.grid_points; j += 20) {
    // closed form of the untruncated integral: y ~ N(1.2 * 0.8 x, 1.44 * 0.6 + 0.9)
    const double x = d.node(j);
    if (std::abs(0.8 * x) > 8.0) continue;
    CHECK_THAT(g[j], WithinAbs(bsl::normal_pdf(0.7, 0.96 * x, 1.44 * 0.6 + 0.9), 1e-4));
  }
}

TEST_CASE("steps outside the data are rejected") {
  const auto s = bsl::SystemSpec::inverse(bsl::LikelihoodModel::linear_gaussian(1.0, 1.0), {0.0, 1.0}, kWide);
  CHECK_THROWS_AS(s.y(0), bsl::Error);
  CHECK_THROWS_AS(s.y(3), bsl::Error);
  CHECK(s.y(2) == 1.0);
}

TEST_CASE("parameter state diameter adds the parameter domain") {
  const auto s = bsl::SystemSpec::parameter_state(bsl::TransitionModel::linear_gaussian(0.8, 0.5, 0.5),
                                                  bsl::LikelihoodModel::linear_gaussian(1.0, 1.0), {0.0},
                                                  {-12.0, 12.0, 121}, {-3.0, 3.0, 101});
  CHECK(s.D() == 30.0);
  CHECK(s.nw() == 101);
}
