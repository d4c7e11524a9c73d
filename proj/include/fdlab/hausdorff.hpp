#pragma once

#include <string>
#include <vector>

#include "fdlab/capacity.hpp"
#include "fdlab/capacity_studies.hpp"

namespace fdlab {

/// phi(r) = r^d (power) or (ln_+ 1/r)^(-gamma) (log-power, +inf for r >= 1).
struct GaugeFn {
  enum class Kind { Power, LogPower };
  Kind kind = Kind::Power;
  double parameter = 1.0;

  static GaugeFn power(double d);
  static GaugeFn log_power(double gamma);
  double operator()(double r) const;
  std::string describe() const;
};

enum class CoverMethod { SingleBall, DyadicGrid, Greedy, Best };
std::string to_string(CoverMethod m);

struct CoverResult {
  std::string set_label;
  double epsilon = 0;
  double alpha = 0.5;
  std::vector<ParabolicBall> balls;
  double value = 0;         ///< sum of phi(r_j)
  CoverMethod method = CoverMethod::Best;
  bool verified = false;    ///< every grid point of the set lies in some ball
  double volume_bound = 0;  ///< cell-volume estimate for power gauges (0 otherwise); counts each point as a full cell, so not a strict bound
  double scale = 0;         ///< dyadic scale used (0 for single ball / greedy)
};

/// Smallest admissible cover radius on the set's grid: max(dx, dt^(1/(2 alpha))).
double cover_resolution(const SpaceTimeGrid& grid, double alpha);

/// True when every point of `set` lies in at least one ball (strict inequalities).
bool covers(const CompactSet& set, const std::vector<ParabolicBall>& balls);

/// Upper bound on the (phi, epsilon) content of `set` by parabolic balls with
/// radii in [cover_resolution, epsilon). Dyadic tiles are anchored at the grid
/// origin so the dyadic bound is monotone under inclusion and subadditive.
/// Throws InvalidArgument when epsilon does not exceed the grid resolution.
CoverResult hausdorff_content(const CompactSet& set, double alpha, const GaugeFn& gauge, double epsilon,
                              CoverMethod method = CoverMethod::Best);

struct ComparisonRow {
  double shrink = 0;
  double lebesgue = 0;  ///< |A|^((p^q)/q~) |B|^((p^q)/p~)
  double capacity_lo = 0, capacity_hi = 0;
  double content = 0;
};

struct ComparisonReport {
  int n = 1;
  double alpha = 0.25, p = 2, q = 2, p_tilde = 8, q_tilde = 4, delta = 0.5;
  double beta = 0;
  double lebesgue_exponent = 0;  ///< (p^q)(2a/q~ + n/p~), equal to beta
  double lebesgue_slope = 0, capacity_slope = 0, content_slope = 0;
  double tolerance = 0.15;
  std::vector<ComparisonRow> rows;
  bool exponent_identity = false;
  bool pass = false;
};

struct ProductSet {
  double t_center = 1.0;
  double t_half = 0.125;  ///< A = (t_center - t_half, t_center + t_half) at shrink 1
  double x_half = 1.0 / 32;  ///< B = (-x_half, x_half)^n at shrink 1
};

/// Lebesgue term, capacity bracket and power-gauge content for the product sets
/// A_s x B_s with |A_s| = s^(2a)|A|, |B_s| = s^n |B| over the given shrinks.
ComparisonReport comparison_experiment(const ProductSet& base, double p, double q, double alpha, int n,
                                       double p_tilde, double q_tilde, double delta,
                                       const std::vector<double>& shrinks, const BallGridSpec& spec = {},
                                       const SolverConfig& cfg = {});

struct LogGaugeRow {
  double r = 0;
  double capacity_lo = 0, capacity_hi = 0;
  double content = 0;
  double ratio = 0;  ///< capacity midpoint / content
};

struct LogGaugeReport {
  int n = 1;
  double alpha = 0.5, p = 2, q = 2, gamma = 0, epsilon = 0.5;
  std::vector<LogGaugeRow> rows;
  LineFit ratio_fit;          ///< log ratio against log ln(1/r)
  double slope_limit = 0.2;
  double max_ratio = 0;
  bool pass = false;
};

/// Capacity of shrinking balls against the content with gauge (ln_+ 1/r)^(-gamma),
/// gamma = (p^q)(1 - 1/q), in the critical regime.
LogGaugeReport log_gauge_experiment(double p, double q, double alpha, int n, const std::vector<double>& radii,
                                    double epsilon = 0.5, const BallGridSpec& spec = {},
                                    const SolverConfig& cfg = {});

}  // namespace fdlab
