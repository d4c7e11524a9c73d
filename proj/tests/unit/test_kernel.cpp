#include <doctest.h>

#include <cmath>

#include "fdlab/kernel.hpp"
#include "oracles.hpp"

using namespace fdlab;

TEST_CASE("heat kernel values") {
  CHECK(heat_kernel(1, 0, 1) == doctest::Approx(0.282095).epsilon(1e-6));
  CHECK(heat_kernel(1, 0, 2) == doctest::Approx(0.079577).epsilon(1e-5));
  double fourier = oracle::kernel_1d_quadrature(1.0, 4.0, 0.0);
  CHECK(fourier == doctest::Approx(0.141047).epsilon(1e-5));
  CHECK(heat_kernel(4, 0, 1) == doctest::Approx(fourier).epsilon(1e-9));
  CHECK(heat_kernel(0.7, 1.3, 1) ==
        doctest::Approx(oracle::kernel_1d_quadrature(1.0, 0.7, 1.3)).epsilon(1e-8));
  CHECK_THROWS_AS(heat_kernel(0, 0, 1), InvalidArgument);
}

TEST_CASE("poisson kernel values") {
  CHECK(poisson_kernel(1, 0, 1) == doctest::Approx(1 / oracle::pi).epsilon(1e-12));
  CHECK(poisson_kernel(1, 1, 1) == doctest::Approx(1 / (2 * oracle::pi)).epsilon(1e-12));
  CHECK(poisson_kernel(2, 0, 2) == doctest::Approx(1 / (8 * oracle::pi)).epsilon(1e-12));
  CHECK(poisson_kernel(0.6, 2.2, 1) ==
        doctest::Approx(oracle::kernel_1d_quadrature(0.5, 0.6, 2.2)).epsilon(1e-6));
  CHECK_THROWS_AS(poisson_kernel(-1, 0, 1), InvalidArgument);
}

TEST_CASE("spectral kernel against heat kernel") {
  auto g = make_grid(1, 16.0, 256, 1.0, 2);
  auto k = spectral_kernel(1.0, 0.5, g);
  double err = 0;
  for (int j = 0; j < g.N(); ++j)
    if (std::abs(g.x(j)) <= 4) err = std::max(err, std::abs(k.values.values()[j] - heat_kernel(0.5, g.x(j), 1)));
  CHECK(err <= 1e-6);
  CHECK(integrate_slice(k.values) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral kernel against periodised poisson kernel") {
  auto g = make_grid(1, 32.0, 512, 1.0, 2);
  SpectralKernelOptions waive;
  waive.waive_guard = true;
  CHECK_THROWS_AS(spectral_kernel(0.5, 0.5, g), ResolutionError);
  auto k = spectral_kernel(0.5, 0.5, g, waive);
  double rel = 0;
  for (int j = 0; j < g.N(); ++j) {
    if (std::abs(g.x(j)) > 4) continue;
    double ref = oracle::periodic_poisson_1d(0.5, g.x(j), g.L());
    rel = std::max(rel, std::abs(k.values.values()[j] - ref) / ref);
  }
  CHECK(rel <= 1e-3);
}

TEST_CASE("resolution guard reports attainable time") {
  auto g = make_grid(1, 16.0, 64, 1.0, 2);
  double tmin = min_resolvable_time(0.5, g);
  CHECK(tmin == doctest::Approx(std::log(1e12) / std::pow(oracle::pi * 64 / 16, 1.0)));
  try {
    spectral_kernel(0.5, 0.5 * tmin, g);
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(e.attainable() == doctest::Approx(tmin));
  }
  CHECK_NOTHROW(spectral_kernel(0.5, 1.01 * tmin, g));
}

TEST_CASE("spectral kernel unit mass, positivity, symmetry and self-similarity") {
  for (double alpha : {0.25, 0.5, 0.75, 1.0}) {
    for (int n : {1, 2}) {
      auto g = make_grid(n, n == 1 ? 32.0 : 8.0, n == 1 ? 1024 : 128, 1.0, 2);
      double t = std::max(1.0, 1.05 * min_resolvable_time(alpha, g));
      auto k = spectral_kernel(alpha, t, g);
      CHECK(integrate_slice(k.values) == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(k.min_value() >= -1e-8);
      // Mirror symmetry about x = 0 (index N/2).
      double asym = 0;
      if (n == 1) {
        for (int j = 1; j < g.N(); ++j)
          asym = std::max(asym, std::abs(k.values.values()[j] - k.values.values()[g.N() - j]));
      } else {
        for (int i = 1; i < g.N(); ++i)
          for (int j = 1; j < g.N(); ++j)
            asym = std::max(asym, std::abs(k.values(0, g.flat_index(i, j)) -
                                           k.values(0, g.flat_index(g.N() - i, g.N() - j))));
      }
      CHECK(asym <= 1e-14 * k.values.values()[g.flat_index(g.N() / 2, n == 2 ? g.N() / 2 : 0)] * 100);

      // K_t(x) = t^(-n/(2a)) K_1(t^(-1/(2a)) x) on the rescaled grid.
      double t2 = 2.0 * t;
      double s = std::pow(t2 / t, 1.0 / (2 * alpha));
      auto big = make_grid(n, g.L() * s, g.N(), 1.0, 2);
      auto k2 = spectral_kernel(alpha, t2, big);
      double err = 0, peak = 0;
      for (std::size_t i = 0; i < g.slice_size(); ++i) {
        double lhs = k2.values.values()[i];
        double rhs = std::pow(s, -n) * k.values.values()[i];
        err = std::max(err, std::abs(lhs - rhs));
        peak = std::max(peak, std::abs(rhs));
      }
      CHECK(err <= 1e-10 * peak);
    }
  }
}

TEST_CASE("semigroup multiplier composes") {
  for (double xi : {0.0, 0.3, 2.0, 17.0})
    CHECK(semigroup_multiplier(xi, 0.3, 0.4) * semigroup_multiplier(xi, 0.3, 1.1) ==
          doctest::Approx(semigroup_multiplier(xi, 0.3, 1.5)).epsilon(1e-15));
}

TEST_CASE("envelope report") {
  auto g = make_grid(1, 64.0, 2048, 1.0, 2);
  auto rep = envelope_report(0.5, 1.0, g, 16.0);
  // At x = 0 the ratio is K_1(0) = 1/pi, shifted up slightly by the periodic images.
  double at_origin = oracle::periodic_poisson_1d(1.0, 0.0, g.L());
  CHECK(at_origin == doctest::Approx(1 / oracle::pi).epsilon(1e-3));
  CHECK(rep.c_lower <= at_origin + 1e-9);
  CHECK(rep.c_upper >= at_origin - 1e-9);
  // Ratio of the Poisson kernel to the envelope is (1/pi)(1+|x|)^2/(1+x^2) in [1/pi, 2/pi];
  // periodisation only adds mass.
  CHECK(rep.c_lower >= 1 / oracle::pi * 0.99);
  CHECK(rep.spread() < 2.5);
  CHECK(rep.sigma > 0);
  CHECK(rep.kappa > 0);

  auto r75 = envelope_report(0.75, 1.0, make_grid(1, 32.0, 1024, 1.0, 2), 8.0);
  CHECK(r75.c_lower > 0);
  CHECK(r75.c_upper < 10);
  CHECK_THROWS_AS(envelope_report(1.0, 1.0, g, 4.0), InvalidArgument);
  CHECK_THROWS_AS(envelope_report(0.5, 1.0, g, 20.0), InvalidArgument);
}

TEST_CASE("gradient bound") {
  auto g = make_grid(1, 64.0, 2048, 1.0, 2);
  auto grads = spectral_kernel_gradient(0.5, 1.0, g);
  CHECK(std::abs(grads[0].values()[g.N() / 2]) < 1e-12);
  auto b = gradient_bound_check(0.5, g);
  double exact = oracle::golden_max(
      [](double x) { return 2 / oracle::pi * x * (1 + x) * (1 + x) / std::pow(1 + x * x, 2); }, 0.0, 5.0);
  CHECK(exact == doctest::Approx(0.6366).epsilon(1e-3));
  CHECK(b.value == doctest::Approx(exact).epsilon(5e-3));
  CHECK(b.refined_value == doctest::Approx(b.value).epsilon(5e-3));

  auto b75 = gradient_bound_check(0.75, make_grid(1, 32.0, 512, 1.0, 2));
  CHECK(std::isfinite(b75.value));
  CHECK(b75.value > 0);
  CHECK(b75.refined_value == doctest::Approx(b75.value).epsilon(1e-2));
}
