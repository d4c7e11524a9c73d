#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdlab/evolve.hpp"
#include "fdlab/grid.hpp"
#include "fdlab/norms.hpp"

namespace fdlab {

/// A finite set of space-time grid points with t > 0.
class CompactSet {
 public:
  static CompactSet empty(const SpaceTimeGrid& grid);
  /// Points where mask != 0. Points on the initial level t = 0 are dropped
  /// (S F vanishes there, so no F could satisfy the constraint).
  static CompactSet from_mask(const Field& mask);
  static CompactSet from_ball(const SpaceTimeGrid& grid, const ParabolicBall& ball);
  /// Flat space-time indices k * slice_size + i.
  static CompactSet from_points(const SpaceTimeGrid& grid, std::vector<std::size_t> points);

  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  const std::vector<std::size_t>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool is_empty() const noexcept { return points_.empty(); }
  std::size_t dropped_initial() const noexcept { return dropped_initial_; }

  int time_index(std::size_t m) const { return static_cast<int>(points_[m] / grid_.slice_size()); }
  std::size_t space_index(std::size_t m) const { return points_[m] % grid_.slice_size(); }
  /// Largest time index in the set (0 when empty).
  int last_time_index() const;

  struct Box {
    int k_min = 0, k_max = 0;
    std::array<int, 2> lo{}, hi{};  ///< per-axis spatial index range (unwrapped)
  };
  Box bounding_box() const;

  /// Periodic shift by whole cells along the spatial axes.
  CompactSet translated(int cells0, int cells1 = 0) const;
  CompactSet united(const CompactSet& other) const;
  bool subset_of(const CompactSet& other) const;
  Field mask() const;

  std::string label;

 private:
  CompactSet(const SpaceTimeGrid& grid, std::vector<std::size_t> points);
  SpaceTimeGrid grid_;
  std::vector<std::size_t> points_;
  std::size_t dropped_initial_ = 0;
};

struct DiscreteMeasure {
  std::vector<std::size_t> points;  ///< flat space-time indices
  std::vector<double> weights;
  double total_mass() const;
};

/// F -> (S_alpha F) restricted to K, acting on fields on time levels 0..k_end
/// (k_end = last time of K). F carries the quadrature inner product, the
/// constraint side the Euclidean one, so adjoint(lambda) = S*(lambda / W) with
/// W = w_k dx^n and <A F, lambda> = <F, adjoint(lambda)>_W.
class RestrictedDuhamel {
 public:
  RestrictedDuhamel(const SemigroupPlan& plan, const CompactSet& set);

  const SemigroupPlan& plan() const noexcept { return *plan_; }
  const CompactSet& set() const noexcept { return *set_; }
  int k_end() const noexcept { return k_end_; }
  std::size_t variable_count() const noexcept { return variables_; }
  std::size_t constraint_count() const noexcept { return set_->size(); }
  /// Quadrature weight of each constraint point.
  const std::vector<double>& weights() const noexcept { return weights_; }

  void forward(std::span<const double> F, std::span<double> out) const;
  void adjoint(std::span<const double> lambda, std::span<double> out) const;
  /// Weighted inner product of two variable vectors.
  double inner(std::span<const double> a, std::span<const double> b) const;

  /// Dense constraint-by-variable matrix; throws InvalidArgument when
  /// rows x columns exceeds `budget`.
  Eigen::MatrixXd materialize(std::size_t budget) const;

  /// Gram matrix A A^dagger (|K| x |K|), one adjoint and one forward per column.
  Eigen::MatrixXd gram() const;

  /// Embeds a variable vector into a full space-time field (zeros after k_end).
  Field to_field(std::span<const double> F) const;

 private:
  const SemigroupPlan* plan_;
  const CompactSet* set_;
  int k_end_;
  std::size_t variables_;
  std::vector<double> weights_;
};

struct SolverConfig {
  int max_iterations = 3000;
  double rel_gap_tol = 1e-3;
  int report_every = 25;
  bool adaptive = true;          ///< residual balancing of the primal-dual steps
  bool fixed_iterations = false; ///< ignore the gap test (for bitwise comparisons)
  std::size_t materialize_budget = 50'000'000;
  std::size_t gram_limit = 3000; ///< largest |K| for the p = q = 2 Gram solver
  double p1_dual_exponent = 64;  ///< smoothing exponent standing in for p' = inf
  std::uint64_t seed = 1;
};

struct SolverReport {
  std::string method;
  int iterations = 0;
  bool converged = false;
  double bound = 0;          ///< raw norm-level bound (before the p^q power)
  double residual = 0;       ///< method-specific feasibility/KKT residual
  std::vector<double> history;  ///< relative gap at each report step
};

struct PrimalCertificate {
  std::vector<double> F;  ///< variables on levels 0..k_end, min_K S F = 1
  double norm = kInf;     ///< ||F||_{L^q_t L^p_x}
};

struct DualCertificate {
  std::vector<double> mu;  ///< weights on K with ||S* mu||_{q',p'} = 1
  double mass = 0;         ///< total mass
};

struct CapacityResult {
  std::string set_label;
  double p = 2, q = 2, alpha = 0.5;
  int n = 1;
  std::size_t set_size = 0;
  double primal_value = 0;  ///< ||F*||^(p^q), an upper bound
  double dual_value = 0;    ///< ||mu*||_1^(p^q), a lower bound
  double gap = 0;
  double relative_gap = 0;
  bool sub_resolution = false;
  bool converged = false;
  std::vector<SolverReport> reports;
  PrimalCertificate primal;
  DualCertificate dual;
  double midpoint() const { return 0.5 * (primal_value + dual_value); }
};

double power_min(double p, double q);  ///< p ^ q (the minimum)

/// Scales F >= 0 to make min_K S F = 1 and returns its norm (inf if S F vanishes somewhere on K).
double primal_bound(const RestrictedDuhamel& A, std::vector<double>& F, double p, double q);
/// Normalises mu >= 0 to ||S* mu||_{q',p'} = 1 and returns its mass.
double dual_bound(const RestrictedDuhamel& A, std::vector<double>& mu, double p, double q);

/// Materialises the restricted operator; see RestrictedDuhamel::materialize.
Eigen::MatrixXd materialize_operator(const SemigroupPlan& plan, const CompactSet& set,
                                     std::size_t budget);

/// Upper bound: primal-dual splitting on min (1/q)||F||^q s.t. F >= 0, S F >= 1 on K.
CapacityResult primal_capacity(const CompactSet& set, double p, double q, const SemigroupPlan& plan,
                               const SolverConfig& cfg = {});
/// Lower bound: accelerated projected descent of ||S* mu||_{q',p'} on the unit simplex.
CapacityResult dual_capacity(const CompactSet& set, double p, double q, const SemigroupPlan& plan,
                             const SolverConfig& cfg = {});
/// p = q = 2 only: exact non-negative QP on the Gram matrix.
CapacityResult gram_capacity(const CompactSet& set, const SemigroupPlan& plan,
                             const SolverConfig& cfg = {});
/// Best bounds of every applicable solver.
CapacityResult capacity_bracket(const CompactSet& set, double p, double q, const SemigroupPlan& plan,
                                const SolverConfig& cfg = {});

/// Certificate value ||F||^(p^q) after scaling an arbitrary F >= 0 (space-time
/// field on the plan's grid) so that min_K S F = 1; +inf if infeasible.
double certificate_value(const CompactSet& set, const Field& F, double p, double q,
                         const SemigroupPlan& plan, double* min_potential = nullptr);

}  // namespace fdlab
