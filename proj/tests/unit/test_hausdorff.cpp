#include <doctest.h>

#include <cmath>

#include "fdlab/hausdorff.hpp"

using namespace fdlab;

namespace {

CompactSet ball_set(const SpaceTimeGrid& g, double t0, double x0, double r, double alpha = 0.5) {
  return CompactSet::from_ball(g, ParabolicBall{t0, {x0, 0}, r, alpha});
}

}  // namespace

TEST_CASE("gauge functions") {
  auto p = GaugeFn::power(2);
  CHECK(p(0.5) == doctest::Approx(0.25));
  CHECK(p(0.1) < p(0.2));
  auto l = GaugeFn::log_power(0.5);
  CHECK(l(std::exp(-4.0)) == doctest::Approx(0.5));
  CHECK(l(0.01) < l(0.1));
  CHECK(std::isinf(l(1.0)));
  CHECK(p.describe() == "r^2");
}

TEST_CASE("cover resolution and cover verification") {
  auto g = make_grid(1, 4.0, 128, 1.0, 128);
  CHECK(cover_resolution(g, 0.5) == doctest::Approx(4.0 / 128));
  // dt^(1/(2 alpha)) = dt^2 is below dx here, so dx sets the floor.
  CHECK(cover_resolution(g, 0.25) == doctest::Approx(4.0 / 128));
  CHECK(cover_resolution(make_grid(1, 4.0, 1024, 1.0, 16), 0.5) == doctest::Approx(1.0 / 16));
  auto K = ball_set(g, 0.5, 0.0123, 0.1);
  CHECK(covers(K, {ParabolicBall{0.5, {0.0123, 0}, 0.11, 0.5}}));
  CHECK_FALSE(covers(K, {ParabolicBall{0.5, {0.0123, 0}, 0.05, 0.5}}));
  CHECK(covers(CompactSet::empty(g), {}));
}

TEST_CASE("single ball cover of a ball is at most the gauge of its radius") {
  auto g = make_grid(1, 4.0, 128, 1.0, 128);
  auto K = ball_set(g, 0.5, 0.0123, 0.1);
  auto c = hausdorff_content(K, 0.5, GaugeFn::power(2), 0.5, CoverMethod::SingleBall);
  CHECK(c.verified);
  CHECK(c.balls.size() == 1);
  CHECK(c.value <= 0.01 * (1 + 1e-9));
  auto best = hausdorff_content(K, 0.5, GaugeFn::power(2), 0.5);
  CHECK(best.value <= c.value);
  CHECK(best.verified);
}

TEST_CASE("empty set has zero content and small epsilon is rejected") {
  auto g = make_grid(1, 4.0, 128, 1.0, 128);
  auto c = hausdorff_content(CompactSet::empty(g), 0.5, GaugeFn::power(1), 0.5);
  CHECK(c.value == 0.0);
  CHECK(c.balls.empty());
  auto K = ball_set(g, 0.5, 0.0123, 0.1);
  CHECK_THROWS_AS(hausdorff_content(K, 0.5, GaugeFn::power(1), 0.01), InvalidArgument);
}

TEST_CASE("content grows as epsilon shrinks") {
  auto g = make_grid(1, 4.0, 256, 1.0, 256);
  auto K = ball_set(g, 0.5, 0.0123, 0.2);
  for (auto method : {CoverMethod::DyadicGrid, CoverMethod::Greedy, CoverMethod::Best}) {
    double prev = 0;
    for (double eps : {0.5, 0.25, 0.125, 0.0625}) {
      auto c = hausdorff_content(K, 0.5, GaugeFn::power(1.5), eps, method);
      CHECK(c.verified);
      CHECK(c.value >= prev * (1 - 1e-12));
      for (const auto& b : c.balls) CHECK(b.r < eps);
      prev = c.value;
    }
  }
}

TEST_CASE("dyadic content is monotone under inclusion and subadditive") {
  auto g = make_grid(1, 4.0, 256, 1.0, 256);
  auto gauge = GaugeFn::power(2);
  auto small = ball_set(g, 0.5, 0.0123, 0.1);
  auto large = ball_set(g, 0.5, 0.0123, 0.2);
  REQUIRE(small.subset_of(large));
  double eps = 0.125;
  auto cs = hausdorff_content(small, 0.5, gauge, eps, CoverMethod::DyadicGrid);
  auto cl = hausdorff_content(large, 0.5, gauge, eps, CoverMethod::DyadicGrid);
  CHECK(cs.value <= cl.value * (1 + 1e-12));
  auto left = ball_set(g, 0.5, -0.6, 0.1), right = ball_set(g, 0.7, 0.5, 0.1);
  auto both = left.united(right);
  auto a = hausdorff_content(left, 0.5, gauge, eps, CoverMethod::DyadicGrid);
  auto b = hausdorff_content(right, 0.5, gauge, eps, CoverMethod::DyadicGrid);
  auto u = hausdorff_content(both, 0.5, gauge, eps, CoverMethod::DyadicGrid);
  CHECK(u.value <= (a.value + b.value) * (1 + 1e-12));
}

TEST_CASE("content of a ball in its own dimension is resolution-stable") {
  // d = n + 2 alpha: the content of B_r is comparable to r^d at every resolution.
  double prev = 0;
  for (int N : {128, 256, 512}) {
    auto g = make_grid(1, 4.0, N, 1.0, N);
    auto K = ball_set(g, 0.5, 0.0123, 0.2);
    auto c = hausdorff_content(K, 0.5, GaugeFn::power(2), 0.1, CoverMethod::DyadicGrid);
    CHECK(c.verified);
    if (prev > 0) {
      CHECK(c.value <= 4 * prev);
      CHECK(c.value >= prev / 4);
    }
    prev = c.value;
  }
}
