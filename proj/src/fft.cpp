#include "fdlab/fft.hpp"

#include <cstring>

#include <fftw3.h>

namespace fdlab {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

SpectralTransform::SpectralTransform(const SpaceTimeGrid& grid) {
  const int N = grid.N();
  real_size_ = grid.slice_size();
  spectrum_size_ = grid.n() == 1 ? static_cast<std::size_t>(N / 2 + 1)
                                 : static_cast<std::size_t>(N) * (N / 2 + 1);
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = fftw_alloc_real(real_size_);
  auto* c = fftw_alloc_complex(spectrum_size_);
  cplx_ = c;
  int dims[2] = {N, N};
  plan_fwd_ = fftw_plan_dft_r2c(grid.n(), dims, real_, c, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r(grid.n(), dims, c, real_, FFTW_ESTIMATE);
  if (!plan_fwd_ || !plan_inv_) throw Error("fftw: plan creation failed");
}

SpectralTransform::~SpectralTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_);
  fftw_free(cplx_);
}

void SpectralTransform::forward(std::span<const double> in, std::span<Complex> out) {
  std::memcpy(real_, in.data(), real_size_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(out.data(), cplx_, spectrum_size_ * sizeof(Complex));
}

void SpectralTransform::inverse(std::span<const Complex> in, std::span<double> out) {
  // c2r destroys its input, so always work on the private copy.
  std::memcpy(cplx_, in.data(), spectrum_size_ * sizeof(Complex));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < real_size_; ++i) out[i] = real_[i] * scale;
}

std::vector<std::array<double, 2>> half_spectrum_frequencies(const SpaceTimeGrid& grid) {
  const int N = grid.N();
  const int H = N / 2 + 1;
  auto wrap = [N](int i) { return i < N / 2 ? i : i - N; };
  std::vector<std::array<double, 2>> f;
  if (grid.n() == 1) {
    f.reserve(H);
    for (int i = 0; i < H; ++i) f.push_back({grid.frequency(i), 0.0});
  } else {
    f.reserve(static_cast<std::size_t>(N) * H);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < H; ++j) f.push_back({grid.frequency(wrap(i)), grid.frequency(j)});
  }
  return f;
}

std::vector<double> half_spectrum_magnitudes(const SpaceTimeGrid& grid) {
  auto f = half_spectrum_frequencies(grid);
  std::vector<double> m(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = std::hypot(f[i][0], f[i][1]);
  return m;
}

TransformPool::Lease::~Lease() {
  if (pool_ && t_) {
    std::lock_guard<std::mutex> lock(pool_->mu_);
    pool_->free_.push_back(std::move(t_));
  }
}

TransformPool::Lease TransformPool::acquire() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!free_.empty()) {
      auto t = std::move(free_.back());
      free_.pop_back();
      return Lease(this, std::move(t));
    }
  }
  return Lease(this, std::make_unique<SpectralTransform>(grid_));
}

}  // namespace fdlab
