#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "fdlab/grid.hpp"

namespace fdlab {

using Complex = std::complex<double>;

/// Real-to-half-complex transform of one spatial slice (FFTW r2c/c2r).
/// Unnormalized in both directions; an instance owns scratch buffers and must
/// not be used from two threads at once.
class SpectralTransform {
 public:
  explicit SpectralTransform(const SpaceTimeGrid& grid);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  /// Number of complex coefficients in the half spectrum.
  std::size_t spectrum_size() const noexcept { return spectrum_size_; }

  void forward(std::span<const double> in, std::span<Complex> out);
  /// Inverse transform; the result is scaled by 1/N^n so that
  /// inverse(forward(f)) == f.
  void inverse(std::span<const Complex> in, std::span<double> out);

 private:
  std::size_t real_size_;
  std::size_t spectrum_size_;
  double* real_ = nullptr;
  void* cplx_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

/// |xi| for every coefficient of the half spectrum, in FFTW layout.
std::vector<double> half_spectrum_magnitudes(const SpaceTimeGrid& grid);

/// Per-axis signed frequencies of each half-spectrum coefficient (xi_0, xi_1).
std::vector<std::array<double, 2>> half_spectrum_frequencies(const SpaceTimeGrid& grid);

/// Thread-safe pool of transforms for one grid; leases are returned on scope exit.
class TransformPool {
 public:
  explicit TransformPool(const SpaceTimeGrid& grid) : grid_(grid) {}

  class Lease {
   public:
    Lease(TransformPool* pool, std::unique_ptr<SpectralTransform> t)
        : pool_(pool), t_(std::move(t)) {}
    Lease(Lease&&) = default;
    ~Lease();
    SpectralTransform& operator*() { return *t_; }
    SpectralTransform* operator->() { return t_.get(); }

   private:
    TransformPool* pool_;
    std::unique_ptr<SpectralTransform> t_;
  };

  Lease acquire();

 private:
  SpaceTimeGrid grid_;
  std::mutex mu_;
  std::vector<std::unique_ptr<SpectralTransform>> free_;
};

}  // namespace fdlab
