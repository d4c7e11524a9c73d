#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fdlab/capacity.hpp"
#include "oracles.hpp"

using namespace fdlab;

namespace {

std::vector<double> weights_of(const SpaceTimeGrid& g, int k_end) {
  std::vector<double> w;
  for (int k = 0; k <= k_end; ++k)
    for (std::size_t i = 0; i < g.slice_size(); ++i) w.push_back(g.time_weight(k) * g.cell_volume());
  return w;
}

std::vector<std::pair<int, int>> rows_of(const CompactSet& K) {
  std::vector<std::pair<int, int>> rows;
  for (std::size_t m = 0; m < K.size(); ++m)
    rows.emplace_back(K.time_index(m), static_cast<int>(K.space_index(m)));
  return rows;
}

}  // namespace

TEST_CASE("compact set construction drops the initial level and deduplicates") {
  auto g = make_grid(1, 4.0, 8, 1.0, 4);
  auto K = CompactSet::from_points(g, {3, 3, 9, 17, 39});
  CHECK(K.size() == 3);
  CHECK(K.dropped_initial() == 1);
  CHECK(K.last_time_index() == 4);
  CHECK(K.time_index(0) == 1);
  CHECK(CompactSet::from_points(g, {9}).subset_of(K));
  CHECK_FALSE(K.subset_of(CompactSet::from_points(g, {9})));
  CHECK_THROWS_AS(CompactSet::from_points(g, {g.size()}), InvalidArgument);
  auto T = K.translated(3);
  CHECK(T.size() == K.size());
  CHECK(T.space_index(0) == (K.space_index(0) + 3) % 8);
}

TEST_CASE("restricted operator matches the dense cosine-sum oracle and its adjoint") {
  auto g = make_grid(1, 4.0, 8, 1.0, 6);
  SemigroupPlan plan(g, 0.5);
  auto K = CompactSet::from_points(g, {8 * 2 + 1, 8 * 4 + 5, 8 * 6 + 0, 8 * 6 + 7});
  RestrictedDuhamel A(plan, K);
  auto M = A.materialize(1'000'000);
  auto D = oracle::duhamel_rows(0.5, 4.0, 8, 1.0, 6, rows_of(K), A.k_end());
  double err = 0;
  for (std::size_t r = 0; r < K.size(); ++r)
    for (std::size_t c = 0; c < A.variable_count(); ++c) err = std::max(err, std::abs(M(r, c) - D[r][c]));
  CHECK(err <= 1e-13);
  // Row sums reproduce S 1 = t.
  for (std::size_t r = 0; r < K.size(); ++r) {
    double s = 0;
    for (std::size_t c = 0; c < A.variable_count(); ++c) s += M(r, c);
    CHECK(s / g.cell_volume() == doctest::Approx(g.t(K.time_index(r)) / g.cell_volume()).epsilon(1e-12));
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> x(A.variable_count()), y(K.size()), Ax(K.size()), Aty(A.variable_count());
  for (auto& v : x) v = u(rng);
  for (auto& v : y) v = u(rng);
  A.forward(x, Ax);
  A.adjoint(y, Aty);
  double lhs = 0;
  for (std::size_t m = 0; m < K.size(); ++m) lhs += Ax[m] * y[m];
  CHECK(std::abs(lhs - A.inner(x, Aty)) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  CHECK_THROWS_AS(A.materialize(10), InvalidArgument);
}

TEST_CASE("empty set has zero capacity and is flagged") {
  auto g = make_grid(1, 4.0, 8, 1.0, 4);
  SemigroupPlan plan(g, 0.5);
  auto K = CompactSet::from_points(g, {1, 2});  // initial level only
  CHECK(K.is_empty());
  auto r = capacity_bracket(K, 2, 2, plan);
  CHECK(r.primal_value == 0.0);
  CHECK(r.dual_value == 0.0);
  CHECK(r.sub_resolution);
  CHECK(primal_capacity(CompactSet::empty(g), 1.5, 3, plan).primal_value == 0.0);
}

TEST_CASE("singleton capacity equals the single-row least-norm closed form") {
  auto g = make_grid(1, 4.0, 8, 2.0, 4);
  SemigroupPlan plan(g, 0.5);
  auto K = CompactSet::from_points(g, {4 * 8 + 3});
  auto D = oracle::duhamel_rows(0.5, 4.0, 8, 2.0, 4, rows_of(K), 4);
  auto w = weights_of(g, 4);
  double aWa = 0, amin = 1e300;
  for (std::size_t c = 0; c < w.size(); ++c) {
    aWa += D[0][c] * D[0][c] / w[c];
    amin = std::min(amin, D[0][c]);
  }
  REQUIRE(amin > -1e-15);  // closed form needs a non-negative row (up to rounding)
  const double expect = 1.0 / aWa;
  auto br = capacity_bracket(K, 2, 2, plan);
  CHECK(std::abs(br.primal_value - expect) <= 1e-6 * expect);
  CHECK(std::abs(br.dual_value - expect) <= 1e-6 * expect);
  CHECK(br.gap <= 1e-6 * expect);
  auto dual = dual_capacity(K, 2, 2, plan);
  CHECK(std::abs(dual.dual_value - expect) <= 1e-6 * expect);
  auto primal = primal_capacity(K, 2, 2, plan);
  CHECK(primal.primal_value >= expect * (1 - 1e-12));
  CHECK(primal.primal_value <= expect * (1 + 1e-3));
}

TEST_CASE("p = q = 2 solvers match an independent dense QP on a small instance") {
  auto g = make_grid(1, 4.0, 8, 1.0, 8);
  SemigroupPlan plan(g, 0.5);
  auto K = CompactSet::from_points(g, {8 * 3 + 2, 8 * 3 + 3, 8 * 5 + 6, 8 * 7 + 0, 8 * 8 + 4, 8 * 8 + 5});
  const int k_end = K.last_time_index();
  auto D = oracle::duhamel_rows(0.5, 4.0, 8, 1.0, 8, rows_of(K), k_end);
  REQUIRE((k_end + 1) * 8 <= 200);
  const double expect = oracle::qp_capacity(D, weights_of(g, k_end));
  auto gram = gram_capacity(K, plan);
  CHECK(std::abs(gram.primal_value - expect) <= 1e-6 * expect);
  CHECK(std::abs(gram.dual_value - expect) <= 1e-6 * expect);
  SolverConfig cfg;
  cfg.rel_gap_tol = 1e-6;
  cfg.max_iterations = 20000;
  auto pd = primal_capacity(K, 2, 2, plan, cfg);
  CHECK(pd.dual_value <= expect * (1 + 1e-9));
  CHECK(pd.primal_value >= expect * (1 - 1e-9));
  CHECK(std::abs(pd.midpoint() - expect) <= 1e-3 * expect);
}

TEST_CASE("bracket honours weak duality for several exponent pairs") {
  auto g = make_grid(1, 8.0, 64, 1.0, 32);
  SemigroupPlan plan(g, 0.5);
  ParabolicBall b{0.6, {0.03, 0}, 0.4, 0.5};
  auto K = CompactSet::from_ball(g, b);
  SolverConfig cfg;
  cfg.max_iterations = 600;
  for (auto [p, q] : std::vector<std::pair<double, double>>{{2, 2}, {1, 2}, {3, 1.5}, {2, 4}}) {
    auto r = capacity_bracket(K, p, q, plan, cfg);
    INFO("p=" << p << " q=" << q);
    CHECK(r.dual_value <= r.primal_value * (1 + 1e-12));
    CHECK(r.relative_gap < 0.05);
    // Certificates are feasible by construction.
    RestrictedDuhamel A(plan, K);
    std::vector<double> AF(K.size());
    A.forward(r.primal.F, AF);
    CHECK(*std::min_element(AF.begin(), AF.end()) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> ATmu(A.variable_count());
    A.adjoint(r.dual.mu, ATmu);
    CHECK(mixed_norm_levels(g, ATmu, A.k_end(), conjugate(p), conjugate(q)) <= 1 + 1e-12);
  }
}

TEST_CASE("capacity is invariant under whole-cell spatial translation") {
  auto g = make_grid(1, 8.0, 64, 1.0, 16);
  SemigroupPlan plan(g, 0.5);
  ParabolicBall b{0.5, {0.03, 0}, 0.3, 0.5};
  auto K = CompactSet::from_ball(g, b);
  auto K8 = K.translated(8);
  SolverConfig cfg;
  cfg.fixed_iterations = true;
  cfg.adaptive = false;
  cfg.max_iterations = 100;
  auto a = capacity_bracket(K, 2, 2, plan, cfg), c = capacity_bracket(K8, 2, 2, plan, cfg);
  CHECK(std::abs(a.primal_value - c.primal_value) <= 1e-10 * a.primal_value);
  CHECK(std::abs(a.dual_value - c.dual_value) <= 1e-10 * a.dual_value);
}

TEST_CASE("prox-based primal solver handles general exponents") {
  auto g = make_grid(1, 8.0, 64, 1.0, 32);
  SemigroupPlan plan(g, 0.5);
  auto K = CompactSet::from_ball(g, ParabolicBall{0.6, {0.03, 0}, 0.3, 0.5});
  SolverConfig cfg;
  cfg.max_iterations = 1500;
  auto p15 = primal_capacity(K, 1.5, 2.5, plan, cfg);
  auto d15 = dual_capacity(K, 1.5, 2.5, plan, cfg);
  CHECK(d15.dual_value <= p15.primal_value * (1 + 1e-12));
  CHECK(p15.dual_value <= d15.primal_value * (1 + 1e-12));
  CHECK(std::abs(p15.midpoint() - d15.midpoint()) <= 0.02 * p15.midpoint());
  CHECK_THROWS_AS(primal_capacity(K, 0.5, 2, plan), InvalidArgument);
  CHECK_THROWS_AS(primal_capacity(K, 2, 1, plan), InvalidArgument);
}

TEST_CASE("certificate value of a feasible field bounds the bracket from above") {
  auto g = make_grid(1, 8.0, 64, 1.0, 32);
  SemigroupPlan plan(g, 0.5);
  auto K = CompactSet::from_ball(g, ParabolicBall{0.6, {0.03, 0}, 0.25, 0.5});
  Field F = ball_mask(g, ParabolicBall{0.45, {0.03, 0}, 0.5, 0.5});
  double mn = 0;
  double v = certificate_value(K, F, 2, 2, plan, &mn);
  CHECK(mn > 0);
  auto r = capacity_bracket(K, 2, 2, plan);
  CHECK(r.dual_value <= v);
  CHECK(r.primal_value <= v * (1 + 1e-9));
}
