#pragma once

#include <vector>

#include "fdlab/grid.hpp"

namespace fdlab {

/// Gaussian kernel (4 pi t)^(-n/2) exp(-r^2/(4t)), the alpha = 1 case.
double heat_kernel(double t, double r, int n);

/// pi^(-(1+n)/2) Gamma((n+1)/2) t (t^2+r^2)^(-(1+n)/2), the alpha = 1/2 case.
double poisson_kernel(double t, double r, int n);

/// Fourier symbol |xi|^(2 alpha) and the semigroup multiplier exp(-t |xi|^(2 alpha)).
double fractional_symbol(double xi_abs, double alpha);
double semigroup_multiplier(double xi_abs, double alpha, double t);

struct SpectralKernelOptions {
  bool waive_guard = false;
  double guard = 1e-12;   ///< required bound on exp(-t xi_max^(2 alpha))
  double eps_neg = 1e-8;  ///< tolerated undershoot below zero
};

/// Smallest t passing the resolvability guard on `grid`.
double min_resolvable_time(double alpha, const SpaceTimeGrid& grid, double guard = 1e-12);

struct KernelSlice {
  SpaceTimeGrid grid;
  double alpha;
  double t;
  double eps_neg;
  Field values;  ///< slice field, centred at x = 0
  double min_value() const;
};

/// Samples the (periodised) kernel K_t^(alpha) on the grid by inverse DFT of
/// the multiplier. Throws ResolutionError (with the attainable minimum t) when
/// the guard fails and is not waived.
KernelSlice spectral_kernel(double alpha, double t, const SpaceTimeGrid& grid,
                            const SpectralKernelOptions& opts = {});

/// Spatial gradient of the kernel by spectral differentiation; one slice per axis.
std::vector<Field> spectral_kernel_gradient(double alpha, double t, const SpaceTimeGrid& grid,
                                            const SpectralKernelOptions& opts = {});

struct EnvelopeReport {
  double alpha = 0;
  double t = 0;
  int n = 1;
  double region_radius = 0;
  double c_lower = 0;
  double c_upper = 0;
  double sigma = 0;
  double kappa = 0;
  double min_value = 0;
  double spread() const { return c_upper / c_lower; }
};

/// Two-sided comparison of K_t with t (t^(1/(2 alpha)) + |x|)^(-(n + 2 alpha)) over
/// |x| <= region_radius, plus lower-bound constants (sigma, kappa) with
/// inf_{|x| <= sigma t^(1/(2 alpha))} K_t >= kappa t^(-n/(2 alpha)).
EnvelopeReport envelope_report(double alpha, double t, const SpaceTimeGrid& grid,
                               double region_radius, const SpectralKernelOptions& opts = {});

struct GradientBound {
  double value = 0;          ///< on the given grid
  double refined_value = 0;  ///< with N doubled
  double region_radius = 0;
};

/// sup_{|x| <= L/4} |grad K_1(x)| (1+|x|)^(n+1) on the grid and on its refinement.
GradientBound gradient_bound_check(double alpha, const SpaceTimeGrid& grid,
                                   const SpectralKernelOptions& opts = {});

/// The same grid with N doubled (spatial refinement at fixed L).
SpaceTimeGrid refine_space(const SpaceTimeGrid& grid);

}  // namespace fdlab
