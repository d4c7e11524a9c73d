#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdlab/evolve.hpp"
#include "fdlab/grid.hpp"

namespace fdlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Hoelder conjugate with 1' = inf and inf' = 1.
double conjugate(double p);

struct MixedExponents {
  double p = 2;  ///< spatial exponent in [1, inf]
  double q = 2;  ///< temporal exponent in [1, inf]
  double p_dual() const { return conjugate(p); }
  double q_dual() const { return conjugate(q); }
};

void validate_exponents(double p, double q);

/// (dx^n sum |f|^p)^(1/p), or the grid max for p = inf.
double slice_norm(const SpaceTimeGrid& grid, std::span<const double> slice, double p);

/// L^q_t L^p_x norm of a space-time field: trapezoid in t, rectangle rule in x.
double mixed_norm(const Field& F, double p, double q);

/// Same norm for time levels 0..k_end stored contiguously; later levels are zero.
double mixed_norm_levels(const SpaceTimeGrid& grid, std::span<const double> values, int k_end,
                         double p, double q);

/// Norming element of the L^q_t L^p_x norm: for G != 0 returns J with
/// <J, G> = ||G||_{q,p} and ||J||_{q',p'} = 1 (finite p, q > 1; p = 1 or q = 1
/// picks the sign/indicator selection). Output has the layout of `values`.
std::vector<double> duality_map(const SpaceTimeGrid& grid, std::span<const double> values,
                                int k_end, double p, double q);

struct ScalingFit {
  std::vector<std::pair<double, double>> samples;  ///< (scale, value)
  double fitted_exponent = 0;
  double intercept = 0;
  double r_squared = 0;
};

/// Least-squares slope of log(value) against log(scale). Requires at least three
/// samples with strictly decreasing positive scales and positive values.
ScalingFit fit_power_law(std::vector<std::pair<double, double>> samples);

/// Least-squares line y = a + b x; returns (b, a, r^2).
struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// R_alpha f at every time level of the grid.
Field semigroup_orbit(const SemigroupPlan& plan, const Field& f);

/// Time exponent from 1/q~ = (n/(2 alpha)) (1/p - 1/p~); validates
/// 1 <= p <= p~ < np/(n - min(n, 2 alpha)). `unrestricted` is set when
/// 2 alpha >= n so the upper limit on p~ is void.
double strichartz_q_tilde(int n, double alpha, double p, double p_tilde, bool* unrestricted = nullptr);

/// Residual of (1/q - 1/q~) + (n/(2 alpha))(1/p - 1/p~) - 1.
double strichartz_relation_residual(int n, double alpha, double p, double q, double p_tilde,
                                    double q_tilde);

struct StrichartzResult {
  std::string estimate;  ///< "R" or "S"
  int n = 1;
  double alpha = 0, p = 0, q = 0, p_tilde = 0, q_tilde = 0;
  double ratio = 0;          ///< on the base grid
  double ratio_refined = 0;  ///< with N and M doubled
  std::string best_family;
  int trials = 0;
  int skipped = 0;
  std::uint64_t seed = 0;
  bool range_unrestricted = false;
  double relative_change() const;
};

/// Empirical sup of ||R_alpha f||_{L^q~_t L^p~_x} / ||f||_{L^p} over a seeded
/// family of trial data on `grid`.
double strichartz_ratio_R(double alpha, double p, double p_tilde, const SpaceTimeGrid& grid,
                          int trial_count, std::uint64_t seed, std::string* best_family = nullptr);

/// Empirical sup of ||S_alpha F||_{L^q~_t L^p~_x} / ||F||_{L^q_t L^p_x}.
double strichartz_ratio_S(double alpha, double p, double q, double p_tilde, double q_tilde,
                          const SpaceTimeGrid& grid, int trial_count, std::uint64_t seed,
                          std::string* best_family = nullptr, int* skipped = nullptr);

/// Runs the estimate on `grid` and on the grid with N and M doubled, using the
/// same continuous trial family.
StrichartzResult strichartz_study_R(double alpha, double p, double p_tilde,
                                    const SpaceTimeGrid& grid, int trial_count, std::uint64_t seed);
StrichartzResult strichartz_study_S(double alpha, double p, double q, double p_tilde,
                                    double q_tilde, const SpaceTimeGrid& grid, int trial_count,
                                    std::uint64_t seed);

/// Doubles N and M.
SpaceTimeGrid refine_space_time(const SpaceTimeGrid& grid);

}  // namespace fdlab
