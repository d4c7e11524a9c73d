#pragma once

#include <string>
#include <vector>

#include "fdlab/capacity.hpp"
#include "fdlab/norms.hpp"

namespace fdlab {

/// How a parabolic ball of radius r is resolved on its own grid: a fixed box
/// [-L/2, L/2)^n, a fixed base time t0 and a fixed number of cells per radius.
struct BallGridSpec {
  double L = 8.0;
  double t0 = 1.0;
  double cells_per_radius = 4.0;      ///< r / dx
  double steps_per_time_radius = 4.0; ///< r^(2 alpha) / dt
};

struct ResolvedBall {
  SpaceTimeGrid grid;
  ParabolicBall ball;
};

/// Grid with dx = r / cells_per_radius and dt = r^(2a) / steps_per_time_radius,
/// long enough to hold t0 + extra_time. The centre is nudged off the lattice by
/// fractions of a cell so that no sample sits on the ball boundary.
ResolvedBall resolved_ball(int n, double alpha, double r, const BallGridSpec& spec,
                           double extra_time = 0.0);

/// Indicator of { |t - t0| < (eta r)^(2a), |x - x0| < r }.
Field stretched_ball_indicator(const SpaceTimeGrid& grid, const ParabolicBall& ball, double eta);

struct IndicatorCertificate {
  double eta = 0;
  double value = kInf;          ///< (||1_B|| / min_K S 1_B)^(p^q)
  double min_potential = 0;     ///< min over K of S 1_B
  double scaled_constant = 0;   ///< min_K S 1_B / r^(2a), the constant c
};

/// Upper-bound certificate built from a stretched ball indicator.
IndicatorCertificate indicator_certificate(const CompactSet& K, const ParabolicBall& ball, double eta,
                                           double p, double q, const SemigroupPlan& plan);

inline const std::vector<double> kEtaLadder = {2, 3, 4, 6, 8};

struct ScalingPoint {
  double r = 0;
  int N = 0, M = 0;
  std::size_t set_size = 0;
  double primal = 0, dual = 0, relative_gap = 0;
  double certificate = kInf;  ///< indicator certificate at the frozen eta
  int iterations = 0;
};

struct ScalingStudy {
  int n = 1;
  double alpha = 0.5, p = 2, q = 2;
  double target = 0;      ///< beta = (p^q)(n/p + 2a/q - 2a)
  double tolerance = 0.1; ///< relative tolerance on the fitted exponent
  double eta = 0;         ///< frozen stretch of the indicator certificate
  std::vector<ScalingPoint> points;
  ScalingFit fit;             ///< capacity midpoint against r
  ScalingFit certificate_fit; ///< indicator certificate against r
  bool certificates_dominate = true;  ///< lower bound <= certificate at every r
  bool pass = false;
};

/// Power-law capacity of shrinking balls in the supercritical regime. Throws
/// InvalidArgument unless n/p + 2a/q - 2a > 0 and radii hold >= 3 decreasing values.
ScalingStudy scaling_experiment(double p, double q, double alpha, int n, const std::vector<double>& radii,
                                const BallGridSpec& spec = {}, const SolverConfig& cfg = {});

struct RescalingCheck {
  double r = 0, beta = 0;
  double base = 0, scaled = 0;  ///< bracket midpoints on the two grids
  double predicted_ratio = 0, observed_ratio = 0;
  double deviation = 0;         ///< |observed / predicted - 1|
};

/// Capacity of B_r on the grid (rL, r^(2a)T, N, M) against B_1 on (L, T, N, M).
RescalingCheck exact_rescaling_check(double p, double q, double alpha, const SpaceTimeGrid& base,
                                     const ParabolicBall& ball, double r, const SolverConfig& cfg = {});

/// Potential that is large on B_r(t0, x0): (|t0 - t|^(1/2a) + |x - x0|)^(-2a)
/// on { (2r)^(2a) < t0 - t < (2r)^a, |t - t0|^(1/2a) < |x - x0| < 2 }, zero elsewhere.
Field log_extremal_field(const SpaceTimeGrid& grid, const ParabolicBall& ball);

struct CriticalPoint {
  double r = 0;
  int N = 0, M = 0;
  std::size_t set_size = 0;
  double primal = 0, dual = 0, relative_gap = 0;
  double log_term = 0;        ///< ln(1 / (2r)^a)
  double min_potential = 0;   ///< min over the ball of S F for the extremal F
  double norm_power = 0;      ///< ||F||^q
  double certificate = kInf;  ///< (||F|| / min S F)^(p^q)
};

struct CriticalStudy {
  int n = 1;
  double alpha = 0.5, p = 2, q = 2;
  double target = 0;      ///< (p^q)(1/q - 1)
  double tolerance = 0.2;
  std::vector<CriticalPoint> points;
  LineFit fit;            ///< log capacity against log ln(1/r)
  double lower_spread = 0;  ///< max/min of min S F / log_term
  double upper_spread = 0;  ///< max/min of ||F||^q / log_term
  double spread_limit = 2.0;
  bool pass_fit = false, pass_lower = false, pass_upper = false;
  bool pass = false;
};

/// Logarithmic capacity law in the critical regime n/p + 2a/q = 2a. Throws
/// InvalidArgument off the critical line or when radii span fewer than three
/// dyadic orders.
CriticalStudy critical_experiment(double p, double q, double alpha, int n, const std::vector<double>& radii,
                                  const BallGridSpec& spec = {}, const SolverConfig& cfg = {});

struct AxiomCheck {
  std::string name;
  bool pass = false;
  double lhs = 0, rhs = 0;
  std::string detail;
};

struct AxiomReport {
  double p = 2, q = 2;
  std::vector<AxiomCheck> checks;
  bool pass() const;
};

/// Empty set, monotonicity, subadditivity and translation invariance on balls
/// fitted to the plan's grid. Failures are entries, not exceptions.
AxiomReport axiom_suite(const SemigroupPlan& plan, double p, double q, const SolverConfig& cfg = {});

}  // namespace fdlab
