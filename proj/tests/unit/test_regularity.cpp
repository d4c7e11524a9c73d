#include <doctest.h>

#include <cmath>

#include "fdlab/regularity.hpp"
#include "oracles.hpp"

using namespace fdlab;

TEST_CASE("rational arithmetic and recovery") {
  Rational a{1, 3}, b{1, 6};
  CHECK((a + b) == Rational{1, 2});
  CHECK((a - b) == Rational{1, 6});
  CHECK((a * b) == Rational{1, 18});
  CHECK((a / b) == Rational{2, 1});
  Rational r;
  CHECK(to_rational(0.75, &r));
  CHECK(r == Rational{3, 4});
  CHECK(to_rational(4.0 / 3, &r));
  CHECK(r == Rational{4, 3});
  CHECK_FALSE(to_rational(std::sqrt(2.0), &r, 1000));
}

TEST_CASE("regime classification on and off the critical line") {
  CHECK(classify(1, 0.5, 2, 2).regime == Regime::Critical);
  CHECK(classify(1, 0.5, 2, 2).exact);
  CHECK(classify(1, 0.5, 4, 4).regime == Regime::Subcritical);
  CHECK(classify(1, 0.25, 2, 2).regime == Regime::Supercritical);
  CHECK(classify(1, 0.5, 1, 2).regime == Regime::Supercritical);
  // 1/3 + 2(0.6)/1.5 = 1/3 + 0.8 < 1.2.
  CHECK(classify(1, 0.6, 3, 1.5).regime == Regime::Subcritical);
  CHECK(classify(2, 0.5, 4, 2).regime == Regime::Critical);
  CHECK(classify(2, 0.5, 4, 4).criticality == doctest::Approx(-0.25));
}

TEST_CASE("Hoelder theory exponents") {
  auto sub = classify(1, 0.5, 4, 4);
  CHECK(holder_theory_exponent(sub, Direction::Space) == doctest::Approx(0.5));
  CHECK(holder_theory_exponent(sub, Direction::Time) == doctest::Approx(0.5));
  auto sub2 = classify(1, 0.75, 4, 4);
  CHECK(holder_theory_exponent(sub2, Direction::Space) == doctest::Approx(0.875));
  CHECK(holder_theory_exponent(sub2, Direction::Time) == doctest::Approx(0.875 / 1.5));
}

TEST_CASE("source families are seeded, nonnegative and supported inside the box") {
  auto g = make_grid(1, 8.0, 128, 1.0, 64);
  for (auto fam : {SourceFamily::SmoothBump, SourceFamily::Cylinder, SourceFamily::CylinderSum}) {
    CHECK(parse_source_family(to_string(fam)) == fam);
    Field a = regularity_source(g, fam, 3), b = regularity_source(g, fam, 3), c = regularity_source(g, fam, 4);
    bool same = true, differ = false, positive = false;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
      same = same && a.values()[i] == b.values()[i];
      differ = differ || a.values()[i] != c.values()[i];
      positive = positive || a.values()[i] > 0;
      CHECK(a.values()[i] >= 0);
    }
    CHECK(same);
    CHECK(differ);
    CHECK(positive);
    for (int j = 0; j < g.N(); ++j) CHECK(a(0, j) == 0.0);
  }
  CHECK_THROWS_AS(parse_source_family("noise"), InvalidArgument);
}

TEST_CASE("exponential integrability constant is finite and refinement-stable") {
  auto crit = classify(1, 0.5, 2, 2);
  auto st = exp_integrability_study(crit, make_grid(1, 8.0, 128, 1.0, 64), 2, SourceFamily::CylinderSum, 11, 2);
  CHECK(st.levels_N == std::vector<int>{128, 256, 512});
  CHECK(st.stable);
  for (const auto& row : st.c_star)
    for (double c : row) {
      CHECK(std::isfinite(c));
      CHECK(c > 0);
    }
  auto sub = classify(1, 0.5, 4, 4);
  SemigroupPlan plan(make_grid(1, 8.0, 128, 1.0, 64), 0.5);
  CHECK_THROWS_AS(exp_integrability_check(sub, plan, regularity_source(plan.grid(), SourceFamily::Cylinder, 1),
                                          ParabolicBall{0.5, {0, 0}, 0, 0.5}),
                  InvalidArgument);
}

TEST_CASE("mean exponential at the selected constant meets the threshold") {
  auto crit = classify(1, 0.5, 2, 2);
  auto g = make_grid(1, 8.0, 256, 1.0, 128);
  SemigroupPlan plan(g, 0.5);
  auto r = exp_integrability_check(crit, plan, regularity_source(g, SourceFamily::Cylinder, 2),
                                   ParabolicBall{0.5, {0, 0}, 0, 0.5});
  CHECK(r.mean_exp <= r.threshold);
  CHECK(r.c_star == doctest::Approx(std::ldexp(1.0, r.c_exponent)));
  CHECK(r.ball_points > 0);
}

TEST_CASE("Hoelder fits meet the subcritical exponent for smooth and rough sources") {
  auto sub = classify(1, 0.5, 4, 4);
  SemigroupPlan plan(make_grid(1, 8.0, 512, 1.0, 256), 0.5);
  for (auto fam : {SourceFamily::SmoothBump, SourceFamily::CylinderSum}) {
    auto st = holder_study(sub, plan, fam, 21, 3);
    CHECK(st.pass);
    CHECK(st.min_space >= 0.85 * 0.5);
    CHECK(st.min_time >= 0.85 * 0.5);
  }
  CHECK_THROWS_AS(holder_study(classify(1, 0.5, 2, 2), plan, SourceFamily::Cylinder, 1, 1), InvalidArgument);
}

TEST_CASE("local modulus of a known potential") {
  // S = |x|^(1/2) near x = 0 gives modulus exponent 1/2 exactly on dyadic offsets.
  auto g = make_grid(1, 8.0, 256, 1.0, 64);
  Field S = Field::space_time(g);
  for (int k = 0; k <= g.M(); ++k)
    for (int j = 0; j < g.N(); ++j) S(k, j) = std::sqrt(std::abs(g.x(j))) + g.t(k);
  auto sub = classify(1, 0.5, 4, 4);
  auto hs = holder_fit_from_potential(sub, S, 32, g.N() / 2, Direction::Space);
  CHECK(hs.fitted_exponent == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hs.pass);
  auto ht = holder_fit_from_potential(sub, S, 32, g.N() / 2, Direction::Time);
  CHECK(ht.fitted_exponent == doctest::Approx(1.0).epsilon(1e-12));
  Field flat = Field::space_time(g, 1.0);
  CHECK(holder_fit_from_potential(sub, flat, 32, 3, Direction::Space).vacuous);
}

TEST_CASE("continuity modulus of the free evolution") {
  auto g = make_grid(1, 32.0, 512, 1.0, 4);
  SemigroupPlan plan(g, 0.5);
  Field f = Field::slice(g);
  for (int j = 0; j < g.N(); ++j) f.values()[j] = std::abs(g.x(j)) < 1 ? 1.0 : 0.0;
  auto c = continuity_check(plan, f, 1.0, {0.1, 0.05, 0.025, 0.0125});
  CHECK(c.decreasing);
  CHECK(c.fitted_exponent >= 0.9);
  CHECK_THROWS_AS(continuity_check(plan, f, 0.0, {0.1, 0.05, 0.025}), InvalidArgument);
}
