#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fdlab/error.hpp"

namespace fdlab {

/// Spatial point; only the first `n` coordinates are meaningful.
using Point = std::array<double, 2>;

/// Uniform periodic spatial grid on [-L/2, L/2)^n times a uniform time axis
/// t_k = k*dt, k = 0..M.
class SpaceTimeGrid {
 public:
  /// Validating constructor; see make_grid().
  SpaceTimeGrid(int n, double L, int N, double T, int M);

  int n() const noexcept { return n_; }
  double L() const noexcept { return L_; }
  int N() const noexcept { return N_; }
  double T() const noexcept { return T_; }
  int M() const noexcept { return M_; }
  double dx() const noexcept { return L_ / N_; }
  double dt() const noexcept { return T_ / M_; }

  /// Number of spatial samples, N^n.
  std::size_t slice_size() const noexcept { return slice_size_; }
  /// Number of time samples, M+1.
  std::size_t time_count() const noexcept { return static_cast<std::size_t>(M_) + 1; }
  /// Total number of space-time samples.
  std::size_t size() const noexcept { return time_count() * slice_size_; }

  double x(int j) const noexcept { return -0.5 * L_ + j * dx(); }
  double t(int k) const noexcept { return k * dt(); }

  /// Coordinates of the spatial sample with flat (row-major) index `idx`.
  Point point(std::size_t idx) const noexcept;
  /// Per-axis indices of flat spatial index `idx`.
  std::array<int, 2> axis_indices(std::size_t idx) const noexcept;
  std::size_t flat_index(int i0, int i1 = 0) const noexcept;

  /// Composite-trapezoid weight of time sample k.
  double time_weight(int k) const noexcept {
    return (k == 0 || k == M_) ? 0.5 * dt() : dt();
  }
  /// Rectangle-rule weight dx^n of one spatial cell.
  double cell_volume() const noexcept;

  /// Discrete Fourier frequency 2*pi*m/L for m in {-N/2, ..., N/2-1}.
  double frequency(int m) const noexcept;
  /// The N per-axis frequencies, ordered m = -N/2 .. N/2-1.
  std::vector<double> frequencies() const;
  /// Nyquist magnitude pi*N/L.
  double max_frequency() const noexcept;

  bool operator==(const SpaceTimeGrid&) const = default;

 private:
  int n_;
  double L_;
  int N_;
  double T_;
  int M_;
  std::size_t slice_size_;
};

SpaceTimeGrid make_grid(int n, double L, int N, double T, int M);

/// Throws GridMismatch unless the grids are identical.
void require_same_grid(const SpaceTimeGrid& a, const SpaceTimeGrid& b);

enum class FieldKind { SpaceTime, Slice };

/// Real samples on a grid: either every time level or a single spatial slice.
class Field {
 public:
  static Field space_time(const SpaceTimeGrid& grid, double fill = 0.0);
  static Field slice(const SpaceTimeGrid& grid, double fill = 0.0);
  Field(const SpaceTimeGrid& grid, FieldKind kind, std::vector<double> values);

  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  FieldKind kind() const noexcept { return kind_; }
  bool is_slice() const noexcept { return kind_ == FieldKind::Slice; }
  int time_levels() const noexcept { return is_slice() ? 1 : grid_.M() + 1; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Spatial slice k (for a Slice field only k = 0 is valid).
  std::span<double> at_time(int k);
  std::span<const double> at_time(int k) const;

  double& operator()(int k, std::size_t idx) { return values_[k * grid_.slice_size() + idx]; }
  double operator()(int k, std::size_t idx) const { return values_[k * grid_.slice_size() + idx]; }

  /// Extracts time level k as a Slice field.
  Field time_slice(int k) const;

  bool all_finite() const noexcept;

 private:
  SpaceTimeGrid grid_;
  FieldKind kind_;
  std::vector<double> values_;
};

/// B_r^(alpha)(t0,x0) = { |t-t0| < r^(2 alpha), |x-x0| < r }.
struct ParabolicBall {
  double t0 = 0.0;
  Point x0{};
  double r = 1.0;
  double alpha = 0.5;

  double time_radius() const noexcept;
  bool contains(double t, const Point& x, int n) const noexcept;
};

/// Indicator of the ball (intersected with t >= 0) sampled on the grid.
/// Throws InvalidArgument when the ball's bounding box leaves the grid by more
/// than half a cell (which would silently truncate the set).
Field ball_mask(const SpaceTimeGrid& grid, const ParabolicBall& ball);

/// Space-time quadrature (trapezoid in t, rectangle rule in x).
double integrate(const Field& field);
/// Spatial quadrature of time level k.
double integrate_slice(const Field& field, int k = 0);
double integrate_slice(const SpaceTimeGrid& grid, std::span<const double> slice);

}  // namespace fdlab
