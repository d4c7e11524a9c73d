#include <doctest.h>

#include <cmath>
#include <random>

#include "fdlab/norms.hpp"
#include "oracles.hpp"

using namespace fdlab;

namespace {

// Independent triple loop for the mixed norm.
double mixed_norm_loop(const Field& F, double p, double q) {
  const auto& g = F.grid();
  double total = 0;
  for (int k = 0; k <= g.M(); ++k) {
    double s = 0;
    for (std::size_t i = 0; i < g.slice_size(); ++i) s += std::pow(std::abs(F(k, i)), p);
    total += g.time_weight(k) * std::pow(s * g.cell_volume(), q / p);
  }
  return std::pow(total, 1 / q);
}

Field random_field(const SpaceTimeGrid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Field F = Field::space_time(g);
  for (double& v : F.values()) v = d(rng);
  return F;
}

}  // namespace

TEST_CASE("conjugate exponents") {
  CHECK(conjugate(2.0) == 2.0);
  CHECK(conjugate(4.0) == doctest::Approx(4.0 / 3));
  CHECK(conjugate(1.0) == kInf);
  CHECK(conjugate(kInf) == 1.0);
  MixedExponents e{3.0, 1.5};
  CHECK(e.p_dual() == doctest::Approx(1.5));
  CHECK(e.q_dual() == doctest::Approx(3.0));
  CHECK_THROWS_AS(validate_exponents(0.5, 2), InvalidArgument);
}

TEST_CASE("slice and mixed norms against direct sums") {
  auto g = make_grid(1, 2 * oracle::pi, 64, 1.0, 8);
  std::vector<double> c(g.N());
  for (int j = 0; j < g.N(); ++j) c[j] = std::cos(g.x(j));
  // Rectangle rule is exact for trigonometric polynomials: ||cos||_2^2 = pi.
  CHECK(slice_norm(g, c, 2) == doctest::Approx(std::sqrt(oracle::pi)).epsilon(1e-13));
  CHECK(slice_norm(g, c, kInf) == doctest::Approx(1.0));
  for (auto [p, q] : {std::pair{1.0, 2.0}, {2.0, 2.0}, {3.0, 1.5}, {1.5, 4.0}}) {
    Field F = random_field(g, 3);
    CHECK(mixed_norm(F, p, q) == doctest::Approx(mixed_norm_loop(F, p, q)).epsilon(1e-12));
  }
  // Trapezoid in time: the constant 1 on [0,1] x [-pi,pi) has norm (2 pi)^(1/p).
  Field one = Field::space_time(g, 1.0);
  CHECK(mixed_norm(one, 3.0, 2.0) == doctest::Approx(std::pow(2 * oracle::pi, 1.0 / 3)).epsilon(1e-13));
  CHECK_THROWS_AS(mixed_norm(Field::slice(g), 2, 2), InvalidArgument);
}

TEST_CASE("mixed norm of the leading levels ignores the rest") {
  auto g = make_grid(2, 4.0, 8, 1.0, 6);
  Field F = random_field(g, 5);
  int k_end = 3;
  Field G = F;
  for (int k = k_end + 1; k <= g.M(); ++k)
    for (auto& v : G.at_time(k)) v = 0;
  auto head = F.values().subspan(0, (k_end + 1) * g.slice_size());
  CHECK(mixed_norm_levels(g, head, k_end, 2.5, 3.0) == doctest::Approx(mixed_norm(G, 2.5, 3.0)).epsilon(1e-13));
}

TEST_CASE("duality map attains the norm and has unit dual norm") {
  auto g = make_grid(1, 4.0, 16, 1.0, 8);
  Field F = random_field(g, 9);
  for (auto [p, q] : {std::pair{2.0, 2.0}, {3.0, 1.5}, {1.5, 4.0}}) {
    auto J = duality_map(g, F.values(), g.M(), p, q);
    double pair = 0;
    for (int k = 0; k <= g.M(); ++k)
      for (std::size_t i = 0; i < g.slice_size(); ++i)
        pair += g.time_weight(k) * g.cell_volume() * J[k * g.slice_size() + i] * F(k, i);
    CHECK(pair == doctest::Approx(mixed_norm(F, p, q)).epsilon(1e-12));
    Field JF(g, FieldKind::SpaceTime, J);
    CHECK(mixed_norm(JF, conjugate(p), conjugate(q)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("power-law and line fits") {
  std::vector<std::pair<double, double>> s;
  for (double r : {1.0, 0.5, 0.25, 0.125}) s.emplace_back(r, 3 * std::pow(r, 0.7));
  auto f = fit_power_law(s);
  CHECK(f.fitted_exponent == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_power_law({{1, 1}, {0.5, 1}}), InvalidArgument);
  CHECK_THROWS_AS(fit_power_law({{1, 1}, {2, 1}, {3, 1}}), InvalidArgument);
  auto l = fit_line({0, 1, 2}, {1, 3, 5});
  CHECK(l.slope == doctest::Approx(2.0));
  CHECK(l.intercept == doctest::Approx(1.0));
}

TEST_CASE("Strichartz exponent arithmetic") {
  CHECK(strichartz_q_tilde(1, 0.5, 1, 2) == doctest::Approx(2.0));
  bool unrestricted = false;
  strichartz_q_tilde(1, 0.75, 1, 8, &unrestricted);
  CHECK(unrestricted);
  // (1/2 - 1/4) + (1 - 1/2) = 3/4, one quarter short of the relation.
  CHECK(strichartz_relation_residual(1, 0.5, 1, 2, 2, 4) == doctest::Approx(-0.25));
  CHECK(strichartz_relation_residual(1, 0.5, 1, 4.0 / 3, 2, 4) == doctest::Approx(0.0).scale(1));
  CHECK_THROWS_AS(strichartz_q_tilde(1, 0.5, 2, 1), InvalidArgument);
  auto g = make_grid(1, 16.0, 128, 1.0, 32);
  CHECK_THROWS_AS(strichartz_ratio_S(0.5, 1, 2, 2, 4, g, 4, 1), InvalidArgument);
}

TEST_CASE("Strichartz ratios are finite, seeded and refinement-stable") {
  auto g = make_grid(1, 16.0, 256, 1.0, 64);
  auto r = strichartz_study_R(0.5, 1, 2, g, 12, 7);
  CHECK(std::isfinite(r.ratio));
  CHECK(r.ratio > 0);
  CHECK(r.relative_change() < 0.1);
  CHECK(strichartz_ratio_R(0.5, 1, 2, g, 12, 7) == r.ratio);
  auto s = strichartz_study_S(0.5, 1, 4.0 / 3, 2, 4, g, 12, 7);
  CHECK(std::isfinite(s.ratio));
  CHECK(s.relative_change() < 0.1);
}

TEST_CASE("semigroup orbit holds R f at every level") {
  auto g = make_grid(1, 2 * oracle::pi, 32, 1.0, 4);
  SemigroupPlan plan(g, 0.5);
  Field f = Field::slice(g);
  for (int j = 0; j < g.N(); ++j) f.values()[j] = std::cos(2 * g.x(j));
  Field orbit = semigroup_orbit(plan, f);
  for (int k = 0; k <= g.M(); ++k)
    for (int j = 0; j < g.N(); ++j)
      CHECK(orbit(k, j) == doctest::Approx(std::exp(-2 * g.t(k)) * f.values()[j]).epsilon(1e-12).scale(1));
}
