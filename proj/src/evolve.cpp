#include "fdlab/evolve.hpp"

#include <cmath>

#include "fdlab/kernel.hpp"

namespace fdlab {
namespace {

void require_slice(const SemigroupPlan& plan, const Field& f) {
  require_same_grid(plan.grid(), f.grid());
  if (!f.is_slice()) throw InvalidArgument("expected a single time slice");
}

void require_space_time(const SemigroupPlan& plan, const Field& f) {
  require_same_grid(plan.grid(), f.grid());
  if (f.is_slice()) throw InvalidArgument("expected a space-time field");
}

Field apply_multiplier(const SemigroupPlan& plan, const Field& f, const std::vector<double>& m) {
  auto fft = plan.transform();
  std::vector<Complex> spec(fft->spectrum_size());
  fft->forward(f.values(), spec);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= m[i];
  Field out = Field::slice(plan.grid());
  fft->inverse(spec, out.values());
  return out;
}

void check_levels(const SemigroupPlan& plan, std::size_t in, std::size_t out, int k_end) {
  if (k_end < 0 || k_end > plan.grid().M())
    throw InvalidArgument("duhamel: time index out of range");
  std::size_t need = static_cast<std::size_t>(k_end + 1) * plan.grid().slice_size();
  if (in != need || out != need) throw InvalidArgument("duhamel: buffer size mismatch");
}

}  // namespace

SemigroupPlan::SemigroupPlan(const SpaceTimeGrid& grid, double alpha)
    : grid_(grid), alpha_(alpha), pool_(std::make_shared<TransformPool>(grid)) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("plan: alpha must lie in (0,1]");
  auto xi = half_spectrum_magnitudes(grid);
  symbol_.resize(xi.size());
  step_.resize(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    symbol_[i] = fractional_symbol(xi[i], alpha);
    step_[i] = std::exp(-grid.dt() * symbol_[i]);
  }
}

std::vector<double> SemigroupPlan::multiplier(double t) const {
  std::vector<double> m(symbol_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(-t * symbol_[i]);
  return m;
}

Field apply_semigroup(const SemigroupPlan& plan, const Field& f, double t) {
  require_slice(plan, f);
  if (t < 0.0) throw InvalidArgument("apply_semigroup: t must be non-negative");
  if (t == 0.0) return f;
  return apply_multiplier(plan, f, plan.multiplier(t));
}

Field apply_fractional_laplacian_semigroup(const SemigroupPlan& plan, const Field& f, double t) {
  require_slice(plan, f);
  if (!(t > 0.0)) throw InvalidArgument("fractional Laplacian semigroup: t must be positive");
  auto m = plan.multiplier(t);
  auto s = plan.symbol();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] *= s[i];
  return apply_multiplier(plan, f, m);
}

void duhamel_levels(const SemigroupPlan& plan, std::span<const double> F, int k_end,
                    std::span<double> out) {
  check_levels(plan, F.size(), out.size(), k_end);
  const std::size_t S = plan.grid().slice_size();
  const double dt = plan.grid().dt();
  auto E = plan.step_multiplier();
  auto fft = plan.transform();
  const std::size_t H = fft->spectrum_size();
  std::vector<Complex> V(H), Fk(H), Sk(H);
  // V_k = sum_j omega_j E^(k-j) F_j with omega_0 = 1/2; S_k = dt (V_k - F_k/2).
  for (int k = 0; k <= k_end; ++k) {
    fft->forward(F.subspan(k * S, S), Fk);
    if (k == 0) {
      for (std::size_t i = 0; i < H; ++i) V[i] = 0.5 * Fk[i];
      std::fill(out.begin(), out.begin() + S, 0.0);
      continue;
    }
    for (std::size_t i = 0; i < H; ++i) {
      V[i] = E[i] * V[i] + Fk[i];
      Sk[i] = dt * (V[i] - 0.5 * Fk[i]);
    }
    fft->inverse(Sk, out.subspan(k * S, S));
  }
}

void adjoint_duhamel_levels(const SemigroupPlan& plan, std::span<const double> G, int k_end,
                            std::span<double> out) {
  check_levels(plan, G.size(), out.size(), k_end);
  const auto& grid = plan.grid();
  const std::size_t S = grid.slice_size();
  const double dt = grid.dt();
  auto E = plan.step_multiplier();
  auto fft = plan.transform();
  const std::size_t H = fft->spectrum_size();
  std::vector<Complex> P(H, Complex(0.0)), Hk(H), Hnext(H), W(H);
  // H_k = w_k G_k, P_j = E (H_(j+1) + P_(j+1)), W_j = dt (c0_j P_j + c1_j H_j),
  // output_j = W_j / w_j with c0 = (1/2, 1, 1, ...), c1 = (0, 1/2, 1/2, ...).
  for (int j = k_end; j >= 0; --j) {
    if (j < k_end) {
      for (std::size_t i = 0; i < H; ++i) P[i] = E[i] * (Hnext[i] + P[i]);
    }
    fft->forward(G.subspan(j * S, S), Hk);
    const double wj = grid.time_weight(j);
    for (std::size_t i = 0; i < H; ++i) Hk[i] *= wj;
    const double c0 = j == 0 ? 0.5 : 1.0;
    const double c1 = j == 0 ? 0.0 : 0.5;
    for (std::size_t i = 0; i < H; ++i) W[i] = (dt / wj) * (c0 * P[i] + c1 * Hk[i]);
    fft->inverse(W, out.subspan(j * S, S));
    std::swap(Hnext, Hk);
  }
}

Field duhamel_all(const SemigroupPlan& plan, const Field& F) {
  require_space_time(plan, F);
  Field out = Field::space_time(plan.grid());
  duhamel_levels(plan, F.values(), plan.grid().M(), out.values());
  return out;
}

Field adjoint_duhamel_all(const SemigroupPlan& plan, const Field& G) {
  require_space_time(plan, G);
  Field out = Field::space_time(plan.grid());
  adjoint_duhamel_levels(plan, G.values(), plan.grid().M(), out.values());
  return out;
}

Field duhamel(const SemigroupPlan& plan, const Field& F, int k) {
  require_space_time(plan, F);
  if (k < 0 || k > plan.grid().M()) throw InvalidArgument("duhamel: time index out of range");
  const std::size_t S = plan.grid().slice_size();
  const std::size_t len = (k + 1) * S;
  std::vector<double> out(len);
  duhamel_levels(plan, F.values().subspan(0, len), k, out);
  return Field(plan.grid(), FieldKind::Slice, std::vector<double>(out.end() - S, out.end()));
}

Field adjoint_duhamel(const SemigroupPlan& plan, const Field& G, int k) {
  require_space_time(plan, G);
  if (k < 0 || k > plan.grid().M())
    throw InvalidArgument("adjoint_duhamel: time index out of range");
  Field all = adjoint_duhamel_all(plan, G);
  return all.time_slice(k);
}

}  // namespace fdlab
