#include <doctest.h>

#include <cmath>
#include <random>

#include "fdlab/evolve.hpp"
#include "fdlab/kernel.hpp"
#include "oracles.hpp"

using namespace fdlab;

namespace {

Field random_field(const SpaceTimeGrid& g, unsigned seed, bool slice = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Field f = slice ? Field::slice(g) : Field::space_time(g);
  for (double& v : f.values()) v = u(rng);
  return f;
}

double inner(const Field& a, const Field& b) {
  const auto& g = a.grid();
  double s = 0;
  for (int k = 0; k <= g.M(); ++k) {
    double sk = 0;
    auto x = a.at_time(k), y = b.at_time(k);
    for (std::size_t i = 0; i < x.size(); ++i) sk += x[i] * y[i];
    s += g.time_weight(k) * g.cell_volume() * sk;
  }
  return s;
}

Field spike(const SpaceTimeGrid& g) {
  Field f = Field::slice(g);
  std::size_t c = g.n() == 1 ? g.flat_index(g.N() / 2) : g.flat_index(g.N() / 2, g.N() / 2);
  f.values()[c] = 1.0 / g.cell_volume();
  return f;
}

}  // namespace

TEST_CASE("semigroup identity, mass and spike response") {
  auto g = make_grid(1, 32.0, 512, 1.0, 4);
  SemigroupPlan plan(g, 0.5);
  Field f = random_field(g, 3, true);
  Field same = apply_semigroup(plan, f, 0.0);
  CHECK(std::equal(same.values().begin(), same.values().end(), f.values().begin()));

  Field out = apply_semigroup(plan, f, 0.7);
  CHECK(std::abs(integrate_slice(out) - integrate_slice(f)) <= 1e-10);

  Field k = apply_semigroup(plan, spike(g), 1.0);
  double rel = 0;
  for (int j = 0; j < g.N(); ++j) {
    if (std::abs(g.x(j)) > 8) continue;
    double ref = oracle::periodic_poisson_1d(1.0, g.x(j), g.L());
    rel = std::max(rel, std::abs(k.values()[j] - ref) / ref);
  }
  CHECK(rel <= 1e-8);
  CHECK_THROWS_AS(apply_semigroup(plan, f, -1.0), InvalidArgument);
  Field other = Field::slice(make_grid(1, 16.0, 512, 1.0, 4));
  CHECK_THROWS_AS(apply_semigroup(plan, other, 1.0), GridMismatch);
}

TEST_CASE("semigroup law") {
  auto g = make_grid(2, 8.0, 32, 1.0, 4);
  SemigroupPlan plan(g, 0.3);
  Field f = random_field(g, 5, true);
  Field a = apply_semigroup(plan, apply_semigroup(plan, f, 0.2), 0.35);
  Field b = apply_semigroup(plan, f, 0.55);
  for (std::size_t i = 0; i < a.values().size(); ++i)
    CHECK(std::abs(a.values()[i] - b.values()[i]) <= 1e-14);
}

TEST_CASE("fractional Laplacian semigroup") {
  auto g = make_grid(1, 2 * oracle::pi, 64, 1.0, 4);
  SemigroupPlan plan(g, 0.7);
  Field c = Field::slice(g, 3.0);
  Field killed = apply_fractional_laplacian_semigroup(plan, c, 0.5);
  for (double v : killed.values()) CHECK(std::abs(v) <= 1e-13);
  CHECK_THROWS_AS(apply_fractional_laplacian_semigroup(plan, c, 0.0), InvalidArgument);

  Field e = Field::slice(g);
  const double xi0 = 3.0;
  for (int j = 0; j < g.N(); ++j) e.values()[j] = std::cos(xi0 * g.x(j));
  Field out = apply_fractional_laplacian_semigroup(plan, e, 0.4);
  double lam = std::pow(xi0, 1.4);
  for (int j = 0; j < g.N(); ++j)
    CHECK(out.values()[j] == doctest::Approx(lam * std::exp(-0.4 * lam) * e.values()[j]).epsilon(1e-12).scale(1));
}

TEST_CASE("smoothing decay of the spike") {
  for (int n : {1, 2}) {
    double alpha = 0.5;
    auto g = n == 1 ? make_grid(1, 256.0, 8192, 1.0, 4) : make_grid(2, 64.0, 512, 1.0, 4);
    SemigroupPlan plan(g, alpha);
    std::vector<double> lt, ls;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
      Field out = apply_fractional_laplacian_semigroup(plan, spike(g), t);
      double sup = 0;
      for (double v : out.values()) sup = std::max(sup, std::abs(v));
      lt.push_back(std::log(t));
      ls.push_back(std::log(sup));
    }
    double expected = -(1 + n / (2 * alpha));
    CHECK(std::abs(oracle::slope(lt, ls) - expected) <= 0.1 * std::abs(expected));
  }
}

TEST_CASE("duhamel of zero, of a Fourier mode and of a positive field") {
  auto g = make_grid(1, 2 * oracle::pi, 32, 2.0, 400);
  SemigroupPlan plan(g, 0.6);
  Field z1 = duhamel(plan, Field::space_time(g), g.M());
  Field z2 = duhamel(plan, random_field(g, 1), 0);
  for (double v : z1.values()) CHECK(v == 0.0);
  for (double v : z2.values()) CHECK(v == 0.0);

  Field F = Field::space_time(g);
  const double xi0 = 2.0;
  for (int k = 0; k <= g.M(); ++k)
    for (int j = 0; j < g.N(); ++j) F(k, j) = std::cos(xi0 * g.x(j));
  double lam = std::pow(xi0, 1.2);
  for (int k : {50, 200, 400}) {
    Field s = duhamel(plan, F, k);
    double amp = (1 - std::exp(-g.t(k) * lam)) / lam;
    for (int j = 0; j < g.N(); ++j)
      CHECK(std::abs(s.values()[j] - amp * std::cos(xi0 * g.x(j))) <= lam * lam * g.dt() * g.dt());
  }

  auto g2 = make_grid(1, 16.0, 128, 1.0, 32);
  SemigroupPlan plan2(g2, 0.4);
  Field P = random_field(g2, 9);
  for (double& v : P.values()) v = std::abs(v);
  Field S = duhamel_all(plan2, P);
  double mn = *std::min_element(S.values().begin(), S.values().end());
  CHECK(mn >= -1e-8);
}

TEST_CASE("adjoint duhamel") {
  auto g = make_grid(2, 6.0, 16, 1.0, 12);
  SemigroupPlan plan(g, 0.35);
  Field F = random_field(g, 11), G = random_field(g, 12);
  double lhs = inner(duhamel_all(plan, F), G);
  double rhs = inner(F, adjoint_duhamel_all(plan, G));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + 1));

  Field z = adjoint_duhamel(plan, Field::space_time(g), 3);
  for (double v : z.values()) CHECK(v == 0.0);
  // At t = T the integration range is empty except for the endpoint weight dt/2.
  Field last = adjoint_duhamel(plan, G, g.M());
  auto gm = G.at_time(g.M());
  for (std::size_t i = 0; i < gm.size(); ++i)
    CHECK(last.values()[i] == doctest::Approx(0.5 * g.dt() * gm[i]).epsilon(1e-12));
  // Single-level consistency.
  Field all = duhamel_all(plan, F);
  Field k5 = duhamel(plan, F, 5);
  auto a5 = all.at_time(5);
  for (std::size_t i = 0; i < a5.size(); ++i) CHECK(k5.values()[i] == a5[i]);
}

TEST_CASE("materialised adjoint is the weighted transpose") {
  auto g = make_grid(1, 5.0, 8, 1.0, 4);
  SemigroupPlan plan(g, 0.45);
  const std::size_t n = g.size();
  std::vector<double> A(n * n), B(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    Field e = Field::space_time(g);
    e.values()[c] = 1.0;
    Field a = duhamel_all(plan, e), b = adjoint_duhamel_all(plan, e);
    for (std::size_t r = 0; r < n; ++r) {
      A[r * n + c] = a.values()[r];
      B[r * n + c] = b.values()[r];
    }
  }
  auto w = [&](std::size_t i) { return g.time_weight(static_cast<int>(i / g.slice_size())); };
  double diff = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      diff = std::max(diff, std::abs(B[r * n + c] - A[c * n + r] * w(c) / w(r)));
  CHECK(diff <= 1e-12);
}

TEST_CASE("continuity of R_alpha f in time") {
  auto g = make_grid(1, 32.0, 512, 1.0, 4);
  SemigroupPlan plan(g, 0.5);
  Field f = Field::slice(g);
  for (int j = 0; j < g.N(); ++j) f.values()[j] = std::abs(g.x(j)) < 1 ? 1.0 : 0.0;
  std::vector<double> ld, lm;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    Field a = apply_semigroup(plan, f, 1.0), b = apply_semigroup(plan, f, 1.0 + dt);
    double m = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i)
      m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    ld.push_back(std::log(dt));
    lm.push_back(std::log(m));
  }
  CHECK(oracle::slope(ld, lm) >= 0.9);
}
