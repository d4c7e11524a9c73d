#include "fdlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fdlab {

SpaceTimeGrid::SpaceTimeGrid(int n, double L, int N, double T, int M)
    : n_(n), L_(L), N_(N), T_(T), M_(M), slice_size_(0) {
  if (n != 1 && n != 2) throw InvalidArgument("grid: n must be 1 or 2");
  if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("grid: L must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("grid: T must be positive");
  if (N < 8) throw InvalidArgument("grid: N must be at least 8");
  if (N % 2 != 0) throw InvalidArgument("grid: N must be even");
  if (M < 2) throw InvalidArgument("grid: M must be at least 2");
  slice_size_ = n == 1 ? static_cast<std::size_t>(N)
                       : static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
}

Point SpaceTimeGrid::point(std::size_t idx) const noexcept {
  auto a = axis_indices(idx);
  Point p{x(a[0]), 0.0};
  if (n_ == 2) p[1] = x(a[1]);
  return p;
}

std::array<int, 2> SpaceTimeGrid::axis_indices(std::size_t idx) const noexcept {
  if (n_ == 1) return {static_cast<int>(idx), 0};
  return {static_cast<int>(idx / N_), static_cast<int>(idx % N_)};
}

std::size_t SpaceTimeGrid::flat_index(int i0, int i1) const noexcept {
  if (n_ == 1) return static_cast<std::size_t>(i0);
  return static_cast<std::size_t>(i0) * N_ + static_cast<std::size_t>(i1);
}

double SpaceTimeGrid::cell_volume() const noexcept {
  return n_ == 1 ? dx() : dx() * dx();
}

double SpaceTimeGrid::frequency(int m) const noexcept {
  return 2.0 * std::numbers::pi * m / L_;
}

std::vector<double> SpaceTimeGrid::frequencies() const {
  std::vector<double> f(N_);
  for (int i = 0; i < N_; ++i) f[i] = frequency(i - N_ / 2);
  return f;
}

double SpaceTimeGrid::max_frequency() const noexcept {
  return std::numbers::pi * N_ / L_;
}

SpaceTimeGrid make_grid(int n, double L, int N, double T, int M) {
  return SpaceTimeGrid(n, L, N, T, M);
}

void require_same_grid(const SpaceTimeGrid& a, const SpaceTimeGrid& b) {
  if (!(a == b)) throw GridMismatch("fields live on different grids");
}

Field Field::space_time(const SpaceTimeGrid& grid, double fill) {
  return Field(grid, FieldKind::SpaceTime, std::vector<double>(grid.size(), fill));
}

Field Field::slice(const SpaceTimeGrid& grid, double fill) {
  return Field(grid, FieldKind::Slice, std::vector<double>(grid.slice_size(), fill));
}

Field::Field(const SpaceTimeGrid& grid, FieldKind kind, std::vector<double> values)
    : grid_(grid), kind_(kind), values_(std::move(values)) {
  std::size_t expected = kind == FieldKind::Slice ? grid.slice_size() : grid.size();
  if (values_.size() != expected) {
    std::ostringstream os;
    os << "field: expected " << expected << " values, got " << values_.size();
    throw InvalidArgument(os.str());
  }
}

std::span<double> Field::at_time(int k) {
  if (k < 0 || k >= time_levels()) throw InvalidArgument("field: time index out of range");
  return std::span<double>(values_).subspan(k * grid_.slice_size(), grid_.slice_size());
}

std::span<const double> Field::at_time(int k) const {
  if (k < 0 || k >= time_levels()) throw InvalidArgument("field: time index out of range");
  return std::span<const double>(values_).subspan(k * grid_.slice_size(), grid_.slice_size());
}

Field Field::time_slice(int k) const {
  auto s = at_time(k);
  return Field(grid_, FieldKind::Slice, std::vector<double>(s.begin(), s.end()));
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ParabolicBall::time_radius() const noexcept { return std::pow(r, 2.0 * alpha); }

bool ParabolicBall::contains(double t, const Point& x, int n) const noexcept {
  if (!(std::abs(t - t0) < time_radius())) return false;
  double d2 = 0.0;
  for (int i = 0; i < n; ++i) d2 += (x[i] - x0[i]) * (x[i] - x0[i]);
  return d2 < r * r;
}

Field ball_mask(const SpaceTimeGrid& grid, const ParabolicBall& ball) {
  if (!(ball.r > 0.0)) throw InvalidArgument("ball_mask: radius must be positive");
  if (!(ball.alpha > 0.0 && ball.alpha < 1.0))
    throw InvalidArgument("ball_mask: alpha must lie in (0,1)");
  const double half = 0.5 * grid.dx();
  const double lo = -0.5 * grid.L() - half;
  const double hi = 0.5 * grid.L() - half;
  for (int i = 0; i < grid.n(); ++i) {
    if (ball.x0[i] - ball.r < lo || ball.x0[i] + ball.r > hi)
      throw InvalidArgument("ball_mask: ball leaves the spatial box");
  }
  if (ball.t0 + ball.time_radius() > grid.T() + 0.5 * grid.dt())
    throw InvalidArgument("ball_mask: ball extends past the time horizon");

  Field mask = Field::space_time(grid);
  for (int k = 0; k <= grid.M(); ++k) {
    double t = grid.t(k);
    if (!(std::abs(t - ball.t0) < ball.time_radius())) continue;
    auto s = mask.at_time(k);
    for (std::size_t i = 0; i < grid.slice_size(); ++i)
      if (ball.contains(t, grid.point(i), grid.n())) s[i] = 1.0;
  }
  return mask;
}

double integrate_slice(const SpaceTimeGrid& grid, std::span<const double> slice) {
  double s = 0.0;
  for (double v : slice) s += v;
  return s * grid.cell_volume();
}

double integrate_slice(const Field& field, int k) {
  return integrate_slice(field.grid(), field.at_time(k));
}

double integrate(const Field& field) {
  if (field.is_slice()) throw InvalidArgument("integrate: expected a space-time field");
  const auto& g = field.grid();
  double s = 0.0;
  for (int k = 0; k <= g.M(); ++k) s += g.time_weight(k) * integrate_slice(field, k);
  return s;
}

}  // namespace fdlab
