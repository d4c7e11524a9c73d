#include "fdlab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "fdlab/fft.hpp"

namespace fdlab {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("kernel: alpha must lie in (0,1]");
}

double radius(const Point& p, int n) { return n == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]); }

// Half-spectrum multiplier with the (-1)^(m0+m1) phase that moves the kernel
// centre from index 0 to the grid point x = 0 (index N/2).
std::vector<Complex> centred_multiplier(double alpha, double t, const SpaceTimeGrid& grid) {
  const int N = grid.N();
  const int H = N / 2 + 1;
  auto xi = half_spectrum_magnitudes(grid);
  std::vector<Complex> spec(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    int parity = grid.n() == 1 ? static_cast<int>(i) : static_cast<int>(i / H + i % H);
    double sign = (parity % 2 == 0) ? 1.0 : -1.0;
    spec[i] = sign * semigroup_multiplier(xi[i], alpha, t);
  }
  return spec;
}

// Kernel synthesis in long double. Far tails sit 14+ orders below the peak,
// under the double-precision inverse transform's roundoff.
std::vector<double> synthesize_kernel(double alpha, double t, const SpaceTimeGrid& grid) {
  static std::mutex planner;
  const int N = grid.N();
  const int H = N / 2 + 1;
  const std::size_t real_size = grid.slice_size();
  const std::size_t spec_size = grid.n() == 1 ? H : static_cast<std::size_t>(N) * H;
  const long double k0 = 2.0L * std::numbers::pi_v<long double> / grid.L();
  const long double two_alpha = 2.0L * alpha;
  auto wrap = [N](int i) { return i <= N / 2 ? i : i - N; };

  std::unique_lock<std::mutex> lock(planner);
  long double* real = fftwl_alloc_real(real_size);
  fftwl_complex* spec = fftwl_alloc_complex(spec_size);
  int dims[2] = {N, N};
  fftwl_plan plan = fftwl_plan_dft_c2r(grid.n(), dims, spec, real, FFTW_ESTIMATE);
  lock.unlock();
  if (!plan) throw Error("fftw: long double plan creation failed");

  for (std::size_t i = 0; i < spec_size; ++i) {
    int a = grid.n() == 1 ? static_cast<int>(i) : wrap(static_cast<int>(i / H));
    int b = grid.n() == 1 ? 0 : static_cast<int>(i % H);
    long double xi = k0 * std::sqrt(static_cast<long double>(a) * a + static_cast<long double>(b) * b);
    // (-1)^(a+b) centres the kernel on index N/2.
    long double sign = ((a + b) % 2 == 0) ? 1.0L : -1.0L;
    spec[i][0] = sign * std::exp(-t * std::pow(xi, two_alpha));
    spec[i][1] = 0.0L;
  }
  fftwl_execute(plan);
  long double volume = std::pow(static_cast<long double>(grid.L()), grid.n());
  std::vector<double> out(real_size);
  for (std::size_t i = 0; i < real_size; ++i) out[i] = static_cast<double>(real[i] / volume);

  lock.lock();
  fftwl_destroy_plan(plan);
  fftwl_free(real);
  fftwl_free(spec);
  return out;
}

void check_guard(double alpha, double t, const SpaceTimeGrid& grid,
                 const SpectralKernelOptions& opts) {
  if (opts.waive_guard) return;
  double tail = semigroup_multiplier(grid.max_frequency(), alpha, t);
  if (tail > opts.guard) {
    double tmin = min_resolvable_time(alpha, grid, opts.guard);
    std::ostringstream os;
    os << "spectral kernel not resolved: exp(-t xi_max^(2 alpha)) = " << tail
       << " exceeds " << opts.guard << "; attainable minimum t = " << tmin;
    throw ResolutionError(os.str(), tmin);
  }
}

}  // namespace

double heat_kernel(double t, double r, int n) {
  if (!(t > 0.0)) throw InvalidArgument("heat_kernel: t must be positive");
  return std::pow(4.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-r * r / (4.0 * t));
}

double poisson_kernel(double t, double r, int n) {
  if (!(t > 0.0)) throw InvalidArgument("poisson_kernel: t must be positive");
  return std::pow(std::numbers::pi, -0.5 * (1 + n)) * std::tgamma(0.5 * (n + 1)) * t *
         std::pow(t * t + r * r, -0.5 * (1 + n));
}

double fractional_symbol(double xi_abs, double alpha) { return std::pow(xi_abs, 2.0 * alpha); }

double semigroup_multiplier(double xi_abs, double alpha, double t) {
  return std::exp(-t * fractional_symbol(xi_abs, alpha));
}

double min_resolvable_time(double alpha, const SpaceTimeGrid& grid, double guard) {
  return -std::log(guard) / fractional_symbol(grid.max_frequency(), alpha);
}

double KernelSlice::min_value() const {
  auto v = values.values();
  return *std::min_element(v.begin(), v.end());
}

KernelSlice spectral_kernel(double alpha, double t, const SpaceTimeGrid& grid,
                            const SpectralKernelOptions& opts) {
  check_alpha(alpha);
  if (!(t > 0.0)) throw InvalidArgument("spectral_kernel: t must be positive");
  check_guard(alpha, t, grid, opts);
  Field out = Field::slice(grid);
  auto values = synthesize_kernel(alpha, t, grid);
  std::copy(values.begin(), values.end(), out.values().begin());
  return KernelSlice{grid, alpha, t, opts.eps_neg, std::move(out)};
}

std::vector<Field> spectral_kernel_gradient(double alpha, double t, const SpaceTimeGrid& grid,
                                            const SpectralKernelOptions& opts) {
  check_alpha(alpha);
  if (!(t > 0.0)) throw InvalidArgument("spectral_kernel_gradient: t must be positive");
  check_guard(alpha, t, grid, opts);
  auto base = centred_multiplier(alpha, t, grid);
  auto freq = half_spectrum_frequencies(grid);
  const int N = grid.N();
  const int H = N / 2 + 1;
  SpectralTransform fft(grid);
  std::vector<Field> grads;
  for (int axis = 0; axis < grid.n(); ++axis) {
    std::vector<Complex> spec(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      // The Nyquist mode of a differentiated real signal is dropped.
      int idx = axis == 0 ? (grid.n() == 1 ? static_cast<int>(i) : static_cast<int>(i / H))
                          : static_cast<int>(i % H);
      bool nyquist = idx == N / 2;
      spec[i] = nyquist ? Complex(0.0) : Complex(0.0, freq[i][axis]) * base[i];
    }
    Field g = Field::slice(grid);
    fft.inverse(spec, g.values());
    const double scale = 1.0 / grid.cell_volume();
    for (double& v : g.values()) v *= scale;
    grads.push_back(std::move(g));
  }
  return grads;
}

EnvelopeReport envelope_report(double alpha, double t, const SpaceTimeGrid& grid,
                               double region_radius, const SpectralKernelOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidArgument("envelope_report: alpha must lie strictly inside (0,1)");
  if (!(region_radius > 0.0) || region_radius > grid.L() / 4.0 + 1e-12)
    throw InvalidArgument("envelope_report: region radius must lie in (0, L/4]");
  KernelSlice k = spectral_kernel(alpha, t, grid, opts);
  const int n = grid.n();
  const double s = std::pow(t, 1.0 / (2.0 * alpha));
  EnvelopeReport rep;
  rep.alpha = alpha;
  rep.t = t;
  rep.n = n;
  rep.region_radius = region_radius;
  rep.c_lower = std::numeric_limits<double>::infinity();
  rep.c_upper = 0.0;
  rep.min_value = std::numeric_limits<double>::infinity();
  auto v = k.values.values();
  for (std::size_t i = 0; i < grid.slice_size(); ++i) {
    double r = radius(grid.point(i), n);
    if (r > region_radius) continue;
    rep.min_value = std::min(rep.min_value, v[i]);
    double env = t * std::pow(s + r, -(n + 2.0 * alpha));
    double ratio = v[i] / env;
    rep.c_lower = std::min(rep.c_lower, ratio);
    rep.c_upper = std::max(rep.c_upper, ratio);
  }
  if (rep.min_value < -opts.eps_neg) {
    std::ostringstream os;
    os << "envelope_report: kernel undershoots to " << rep.min_value << " (tolerance "
       << opts.eps_neg << ")";
    throw ResolutionError(os.str(), min_resolvable_time(alpha, grid, opts.guard));
  }
  if (!(rep.c_lower > 0.0)) throw ResolutionError("envelope_report: non-positive kernel ratio", t);

  const double sigmas[] = {2.0, 1.0, 0.5, 0.25, 0.125};
  const double scale = std::pow(t, n / (2.0 * alpha));
  for (double sigma : sigmas) {
    double reach = sigma * s;
    if (reach > region_radius) continue;
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.slice_size(); ++i)
      if (radius(grid.point(i), n) <= reach) inf = std::min(inf, v[i]);
    if (inf > opts.eps_neg && std::isfinite(inf)) {
      rep.sigma = sigma;
      rep.kappa = inf * scale;
      break;
    }
  }
  if (rep.sigma == 0.0) throw ResolutionError("envelope_report: no admissible sigma in region", t);
  return rep;
}

SpaceTimeGrid refine_space(const SpaceTimeGrid& grid) {
  return SpaceTimeGrid(grid.n(), grid.L(), 2 * grid.N(), grid.T(), grid.M());
}

GradientBound gradient_bound_check(double alpha, const SpaceTimeGrid& grid,
                                   const SpectralKernelOptions& opts) {
  auto measure = [&](const SpaceTimeGrid& g) {
    auto grads = spectral_kernel_gradient(alpha, 1.0, g, opts);
    const int n = g.n();
    double best = 0.0;
    for (std::size_t i = 0; i < g.slice_size(); ++i) {
      double r = radius(g.point(i), n);
      if (r > g.L() / 4.0) continue;
      double norm2 = 0.0;
      for (const auto& gr : grads) norm2 += gr.values()[i] * gr.values()[i];
      best = std::max(best, std::sqrt(norm2) * std::pow(1.0 + r, n + 1));
    }
    return best;
  };
  GradientBound b;
  b.value = measure(grid);
  b.refined_value = measure(refine_space(grid));
  b.region_radius = grid.L() / 4.0;
  return b;
}

}  // namespace fdlab
