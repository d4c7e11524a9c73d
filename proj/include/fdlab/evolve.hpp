#pragma once

#include <memory>
#include <span>
#include <vector>

#include "fdlab/fft.hpp"
#include "fdlab/grid.hpp"

namespace fdlab {

/// Precomputed Fourier tables for exp(-t(-Delta)^alpha) on one grid.
class SemigroupPlan {
 public:
  SemigroupPlan(const SpaceTimeGrid& grid, double alpha);

  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  double alpha() const noexcept { return alpha_; }
  /// |xi|^(2 alpha) on the half spectrum.
  std::span<const double> symbol() const noexcept { return symbol_; }
  /// exp(-dt |xi|^(2 alpha)) on the half spectrum.
  std::span<const double> step_multiplier() const noexcept { return step_; }
  std::vector<double> multiplier(double t) const;

  TransformPool::Lease transform() const { return pool_->acquire(); }

 private:
  SpaceTimeGrid grid_;
  double alpha_;
  std::vector<double> symbol_;
  std::vector<double> step_;
  std::shared_ptr<TransformPool> pool_;
};

/// R_alpha f(t) = exp(-t(-Delta)^alpha) f for a slice f; t = 0 returns f unchanged.
Field apply_semigroup(const SemigroupPlan& plan, const Field& f, double t);

/// (-Delta)^alpha exp(-t(-Delta)^alpha) f for t > 0.
Field apply_fractional_laplacian_semigroup(const SemigroupPlan& plan, const Field& f, double t);

/// S_alpha F at time level k (trapezoid rule in s on [0, t_k]).
Field duhamel(const SemigroupPlan& plan, const Field& F, int k);

/// Transpose of the discrete S_alpha under the space-time quadrature inner
/// product, evaluated at time level k. G is taken to vanish after T.
Field adjoint_duhamel(const SemigroupPlan& plan, const Field& G, int k);

/// S_alpha F at every time level.
Field duhamel_all(const SemigroupPlan& plan, const Field& F);
Field adjoint_duhamel_all(const SemigroupPlan& plan, const Field& G);

/// Raw kernels on time levels 0..k_end stored contiguously (slice-major).
/// Time weights are those of the full grid, so the adjoint matches the
/// restriction of the full operator to fields vanishing after k_end.
void duhamel_levels(const SemigroupPlan& plan, std::span<const double> F, int k_end,
                    std::span<double> out);
void adjoint_duhamel_levels(const SemigroupPlan& plan, std::span<const double> G, int k_end,
                            std::span<double> out);

}  // namespace fdlab
