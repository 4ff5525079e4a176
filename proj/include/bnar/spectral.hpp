#pragma once

// Fourier representation of real, zero-mean, 2*pi-periodic fields.
//
// Coefficients follow the continuum convention
//   u_k = (1/2pi) \int_0^{2pi} u(x) e^{-ikx} dx,   u(x) = sum_k u_k e^{ikx},
// so sin(x) has u_1 = -i/2. Only wavenumbers k = 1..n are stored; u_0 = 0 and
// u_{-k} = conj(u_k) are implied.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bnar/fft.hpp"

namespace bnar {

using cplx = std::complex<double>;

/// Modes k = 1..n, stored at index k - 1.
using ModeVector = std::vector<cplx>;

struct GridConfig {
  int n_modes = 128;  // N; the physical grid has 2N points
  double viscosity = 0.02;

  static constexpr double kDomainLength = 6.283185307179586;

  int n_points() const { return 2 * n_modes; }
  double dx() const { return kDomainLength / n_points(); }
  /// Throws ConfigError unless n_modes >= 2 and viscosity > 0.
  void validate() const;
};

/// State of the full model: modes 1..N with u_N held at zero.
struct SpectralField {
  ModeVector modes;

  SpectralField() = default;
  explicit SpectralField(int n_modes) : modes(static_cast<std::size_t>(n_modes)) {}
  explicit SpectralField(ModeVector m) : modes(std::move(m)) {}

  int n_modes() const { return static_cast<int>(modes.size()); }
  cplx& operator[](int k) { return modes[static_cast<std::size_t>(k - 1)]; }
  const cplx& operator[](int k) const { return modes[static_cast<std::size_t>(k - 1)]; }
};

/// Physical-space samples u(x_i), x_i = i*dx, i = 0..2N-1.
std::vector<double> to_physical(const SpectralField& field, const GridConfig& grid);

/// Inverse of to_physical on fields with u_N = 0. The mean and the Nyquist
/// coefficient are discarded.
SpectralField to_spectral(std::span<const double> samples, const GridConfig& grid);

/// Keeps modes k <= K and zeroes the rest.
SpectralField project_low(const SpectralField& field, int K);

/// Number of physical points used to form the alias-free product of fields
/// whose highest nonzero wavenumber is `max_mode`. Any size > 3*max_mode
/// is exact; 3*(max_mode + 1) is the 3/2 rule on the 2*(max_mode + 1) grid.
inline int dealiased_size(int max_mode) { return 3 * (max_mode + 1); }

/// Dealiased quadratic term of Burgers' equation,
///   B_k = -(ik/2) sum_{|l|<=n, |k-l|<=n} u_l u_{k-l},   k = 1..n,
/// evaluated pseudo-spectrally on dealiased_size(n) points. Owns its FFT
/// workspace, so a single instance must not be shared between threads.
class DealiasedNonlinearity {
 public:
  explicit DealiasedNonlinearity(int n_modes);

  int n_modes() const { return n_modes_; }

  /// `u` and `out` have n_modes entries; they may not alias.
  void apply(std::span<const cplx> u, std::span<cplx> out);

 private:
  int n_modes_;
  RealFft fft_;
};

/// Nonlinearity of the full model: the field's last stored mode (u_N) is
/// treated as zero, matching the truncated system's convention, so the
/// padded grid has 3N points.
SpectralField burgers_nonlinearity(const SpectralField& field, const GridConfig& grid);

/// max_i |u(x_i)| over the 2N-point grid of `grid`.
double sup_abs(const SpectralField& field, const GridConfig& grid);

/// Reusable 2N-point synthesis for repeated physical-space evaluation.
/// Accepts up to N modes; missing trailing modes are zero.
class PhysicalGrid {
 public:
  explicit PhysicalGrid(const GridConfig& grid);

  std::span<const double> sample(std::span<const cplx> modes);
  double sup_abs(std::span<const cplx> modes);

 private:
  int n_modes_;
  RealFft fft_;
};

}  // namespace bnar
