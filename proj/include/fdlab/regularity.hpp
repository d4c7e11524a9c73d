#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdlab/evolve.hpp"
#include "fdlab/grid.hpp"
#include "fdlab/norms.hpp"

namespace fdlab {

/// Exact rational number with 64-bit numerator and denominator (den > 0).
struct Rational {
  long long num = 0;
  long long den = 1;
  int sign() const { return (num > 0) - (num < 0); }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Rational operator+(Rational a, Rational b);
Rational operator-(Rational a, Rational b);
Rational operator*(Rational a, Rational b);
Rational operator/(Rational a, Rational b);
bool operator==(Rational a, Rational b);

/// Recovers p/q from a double when |x - p/q| <= 1e-12 max(1,|x|) with q <= max_den.
bool to_rational(double x, Rational* out, long long max_den = 1000000);

enum class Regime { Supercritical, Critical, Subcritical };
std::string to_string(Regime r);

struct RegularityRegime {
  int n = 1;
  double alpha = 0, p = 0, q = 0;
  double criticality = 0;  ///< n/p + 2 alpha/q - 2 alpha
  bool exact = false;      ///< classification used rational arithmetic
  Rational criticality_exact;
  Regime regime = Regime::Critical;
};

/// Sign of n/p + 2 alpha/q - 2 alpha, computed exactly when every input is a
/// short rational and with a 1e-12 band otherwise.
RegularityRegime classify(int n, double alpha, double p, double q);

struct ExpIntegrability {
  double c_star = 0;     ///< smallest dyadic C meeting the threshold
  int c_exponent = 0;    ///< log2(c_star)
  double mean_exp = 0;   ///< ball average of exp((S F/(C ||F||))^q') at C = c_star
  double threshold = 10;
  double norm = 0;       ///< ||F||_{L^q_t L^p_x}
  double sup_potential = 0;
  std::size_t ball_points = 0;
};

/// Dyadic search for the smallest C = 2^k such that the average over
/// B_{r0}(t0,x0), r0 = t0^(1/(2 alpha)), of exp((S F / (C ||F||))^(q/(q-1))) is at
/// most `threshold`. `ball.r` is ignored and replaced by r0.
ExpIntegrability exp_integrability_check(const RegularityRegime& regime, const SemigroupPlan& plan,
                                         const Field& F, ParabolicBall ball,
                                         double threshold = 10.0);

enum class Direction { Space, Time };

struct HolderFit {
  Direction direction = Direction::Space;
  double fitted_exponent = 0;
  double theory_exponent = 0;
  double r_squared = 0;
  bool vacuous = false;
  bool pass = false;
  std::vector<std::pair<double, double>> samples;  ///< (offset, local modulus)
};

/// 2 alpha - n/p - 2 alpha/q in space, divided by 2 alpha in time.
double holder_theory_exponent(const RegularityRegime& regime, Direction d);

/// Log-log regression of the local modulus max_{|s| <= h} |S F(base + s) - S F(base)|
/// over dyadic offsets h from 2 dx to L/16 (space) or 2 dt to T/8 (time). Passes when the fitted
/// exponent is at least (1 - tolerance) times the theory value.
HolderFit holder_fit(const RegularityRegime& regime, const SemigroupPlan& plan, const Field& F,
                     int base_k, std::size_t base_index, Direction direction,
                     double tolerance = 0.15);

/// Same, reusing a precomputed potential S F.
HolderFit holder_fit_from_potential(const RegularityRegime& regime, const Field& potential,
                                    int base_k, std::size_t base_index, Direction direction,
                                    double tolerance = 0.15);

struct ContinuityResult {
  double t = 0;
  std::vector<std::pair<double, double>> samples;  ///< (dt, max |R f(t+dt) - R f(t)|)
  double fitted_exponent = 0;
  double bound_exponent = 1;  ///< from |t1^-s - t2^-s| ~ dt at fixed t > 0
  bool decreasing = false;
};

/// Modulus of continuity of t -> R_alpha f(t) at a fixed t > 0 over the
/// listed time increments (largest first).
ContinuityResult continuity_check(const SemigroupPlan& plan, const Field& f, double t,
                                  const std::vector<double>& increments);


/// Seeded non-negative sources for the regularity studies. Geometry is drawn in
/// units of L and T, so refined grids sample the same function.
enum class SourceFamily { SmoothBump, Cylinder, CylinderSum };
std::string to_string(SourceFamily f);
SourceFamily parse_source_family(const std::string& name);
Field regularity_source(const SpaceTimeGrid& grid, SourceFamily family, std::uint64_t seed);

struct ExpIntegrabilityStudy {
  SourceFamily family = SourceFamily::SmoothBump;
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<int> levels_N;                ///< spatial size at each refinement
  std::vector<std::vector<int>> exponents;  ///< [trial][level] log2 C*
  std::vector<std::vector<double>> c_star;
  int max_spread = 0;                       ///< worst max - min over levels
  bool stable = false;                      ///< every trial within one dyadic step
};

/// C* for `trials` seeded sources on `base` and `refinements` successive
/// doublings of N and M. The ball sits at t0 = T/2, x0 = 0.
ExpIntegrabilityStudy exp_integrability_study(const RegularityRegime& regime, const SpaceTimeGrid& base,
                                              int refinements, SourceFamily family, std::uint64_t seed,
                                              int trials, double threshold = 10.0);

struct HolderStudy {
  SourceFamily family = SourceFamily::SmoothBump;
  std::uint64_t seed = 0;
  std::vector<HolderFit> space, time;  ///< one entry per trial
  double min_space = 0, min_time = 0;  ///< smallest non-vacuous fitted exponents
  bool pass = false;
};

/// Space and time fits at the grid point nearest (T/2, 0) for seeded sources.
HolderStudy holder_study(const RegularityRegime& regime, const SemigroupPlan& plan, SourceFamily family,
                         std::uint64_t seed, int trials, double tolerance = 0.15);

}  // namespace fdlab
