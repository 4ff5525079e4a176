#include "bnar/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bnar/error.hpp"

namespace bnar {

void GridConfig::validate() const {
  if (n_modes < 2) throw ConfigError("grid: n_modes must be >= 2");
  if (!(viscosity > 0.0)) throw ConfigError("grid: viscosity must be > 0");
}

namespace {

void check_field(const SpectralField& field, const GridConfig& grid) {
  if (field.n_modes() != grid.n_modes) {
    throw ConfigError("field has " + std::to_string(field.n_modes()) +
                      " modes, grid expects " + std::to_string(grid.n_modes));
  }
}

}  // namespace

PhysicalGrid::PhysicalGrid(const GridConfig& grid)
    : n_modes_(grid.n_modes), fft_(grid.n_points()) {}

std::span<const double> PhysicalGrid::sample(std::span<const cplx> modes) {
  const auto n = static_cast<std::size_t>(n_modes_);
  if (modes.size() > n) {
    throw ConfigError("grid with N = " + std::to_string(n_modes_) + " cannot sample " +
                      std::to_string(modes.size()) + " modes");
  }
  auto spec = fft_.spectrum();
  std::fill(spec.begin(), spec.end(), cplx{});
  std::copy(modes.begin(), modes.end(), spec.begin() + 1);
  // The +-N pair collapses onto the single real Nyquist bin.
  spec[n] = 2.0 * spec[n].real();
  fft_.inverse();
  return fft_.samples();
}

double PhysicalGrid::sup_abs(std::span<const cplx> modes) {
  double m = 0.0;
  for (double v : sample(modes)) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> to_physical(const SpectralField& field, const GridConfig& grid) {
  check_field(field, grid);
  PhysicalGrid pg(grid);
  auto s = pg.sample(field.modes);
  return {s.begin(), s.end()};
}

SpectralField to_spectral(std::span<const double> samples, const GridConfig& grid) {
  if (samples.size() != static_cast<std::size_t>(grid.n_points())) {
    throw ConfigError("to_spectral: expected " + std::to_string(grid.n_points()) +
                      " samples, got " + std::to_string(samples.size()));
  }
  RealFft fft(grid.n_points());
  std::copy(samples.begin(), samples.end(), fft.samples().begin());
  fft.forward();
  const double scale = 1.0 / grid.n_points();
  SpectralField out(grid.n_modes);
  auto spec = fft.spectrum();
  for (int k = 1; k < grid.n_modes; ++k) out[k] = spec[static_cast<std::size_t>(k)] * scale;
  return out;
}

SpectralField project_low(const SpectralField& field, int K) {
  if (K < 1 || K > field.n_modes()) {
    throw ConfigError("project_low: K = " + std::to_string(K) + " outside [1, " +
                      std::to_string(field.n_modes()) + "]");
  }
  SpectralField out = field;
  std::fill(out.modes.begin() + K, out.modes.end(), cplx{});
  return out;
}

DealiasedNonlinearity::DealiasedNonlinearity(int n_modes)
    : n_modes_(n_modes), fft_(dealiased_size(n_modes)) {
  if (n_modes < 1) throw ConfigError("nonlinearity: need at least one mode");
}

void DealiasedNonlinearity::apply(std::span<const cplx> u, std::span<cplx> out) {
  const auto n = static_cast<std::size_t>(n_modes_);
  if (u.size() != n || out.size() != n) {
    throw ConfigError("nonlinearity: expected " + std::to_string(n) + " modes");
  }
  auto spec = fft_.spectrum();
  spec[0] = 0.0;
  std::copy(u.begin(), u.end(), spec.begin() + 1);
  std::fill(spec.begin() + 1 + static_cast<std::ptrdiff_t>(n), spec.end(), cplx{});
  fft_.inverse();

  auto x = fft_.samples();
  for (double& v : x) v *= v;
  fft_.forward();

  const double inv_m = 1.0 / fft_.size();
  for (std::size_t k = 1; k <= n; ++k) {
    out[k - 1] = cplx(0.0, -0.5 * static_cast<double>(k)) * (spec[k] * inv_m);
  }
}

SpectralField burgers_nonlinearity(const SpectralField& field, const GridConfig& grid) {
  check_field(field, grid);
  const int active = grid.n_modes - 1;
  DealiasedNonlinearity op(active);
  SpectralField out(grid.n_modes);
  op.apply(std::span<const cplx>(field.modes).first(static_cast<std::size_t>(active)),
           std::span<cplx>(out.modes).first(static_cast<std::size_t>(active)));
  return out;
}

double sup_abs(const SpectralField& field, const GridConfig& grid) {
  check_field(field, grid);
  PhysicalGrid pg(grid);
  return pg.sup_abs(field.modes);
}

}  // namespace bnar
