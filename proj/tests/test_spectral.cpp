#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bnar/error.hpp"
#include "bnar/spectral.hpp"
#include "oracles.hpp"

using namespace bnar;

namespace {

GridConfig grid_of(int n) {
  GridConfig g;
  g.n_modes = n;
  return g;
}

}  // namespace

TEST_CASE("to_physical: sin, cos(2x) and zero") {
  const GridConfig g = grid_of(8);
  SpectralField f(8);
  f[1] = cplx(0.0, -0.5);
  auto u = to_physical(f, g);
  REQUIRE(u.size() == 16);
  for (int i = 0; i < 16; ++i) CHECK(u[i] == doctest::Approx(std::sin(i * g.dx())).epsilon(1e-14));

  SpectralField c(8);
  c[2] = 0.5;
  u = to_physical(c, g);
  for (int i = 0; i < 16; ++i) CHECK(u[i] == doctest::Approx(std::cos(2 * i * g.dx())));

  for (double v : to_physical(SpectralField(8), g)) CHECK(v == 0.0);
}

TEST_CASE("to_physical agrees with direct summation") {
  std::mt19937_64 gen(3);
  const GridConfig g = grid_of(12);
  SpectralField f(oracle::random_modes(gen, 12));
  f[12] = 0.0;
  const auto u = to_physical(f, g);
  for (int i = 0; i < g.n_points(); ++i) {
    CHECK(u[i] == doctest::Approx(oracle::evaluate(f.modes, i * g.dx())).epsilon(1e-12));
  }
}

TEST_CASE("to_spectral: sin, constants, round trip") {
  const GridConfig g = grid_of(16);
  std::vector<double> s(32), c(32, 3.7);
  for (int i = 0; i < 32; ++i) s[i] = std::sin(i * g.dx());
  const auto fs = to_spectral(s, g);
  CHECK(std::abs(fs[1] - cplx(0.0, -0.5)) < 1e-15);
  for (int k = 2; k <= 16; ++k) CHECK(std::abs(fs[k]) < 1e-15);
  for (const auto& z : to_spectral(c, g).modes) CHECK(std::abs(z) < 1e-15);

  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    SpectralField f(oracle::random_modes(gen, 16));
    f[16] = 0.0;
    const auto back = to_spectral(to_physical(f, g), g);
    CHECK(oracle::rel_diff(back.modes, f.modes) < 1e-12);
  }
}

TEST_CASE("dimension errors") {
  const GridConfig g = grid_of(8);
  CHECK_THROWS_AS(to_physical(SpectralField(4), g), ConfigError);
  std::vector<double> wrong(10);
  CHECK_THROWS_AS(to_spectral(wrong, g), ConfigError);
  CHECK_THROWS_AS(project_low(SpectralField(8), 0), ConfigError);
  CHECK_THROWS_AS(project_low(SpectralField(8), 9), ConfigError);
}

TEST_CASE("burgers_nonlinearity of sin(x)") {
  const GridConfig g = grid_of(8);
  SpectralField f(8);
  f[1] = cplx(0.0, -0.5);
  const auto b = burgers_nonlinearity(f, g);
  CHECK(std::abs(b[2] - cplx(0.0, 0.25)) < 1e-15);
  for (int k = 1; k <= 8; ++k) {
    if (k != 2) CHECK(std::abs(b[k]) < 1e-15);
  }
  for (const auto& z : burgers_nonlinearity(SpectralField(8), g).modes) CHECK(z == cplx{});
}

TEST_CASE("dealiased product equals direct convolution for every N <= 16") {
  std::mt19937_64 gen(2024);
  double worst = 0.0;
  for (int n = 2; n <= 16; ++n) {
    DealiasedNonlinearity nl(n);
    for (int trial = 0; trial < 100; ++trial) {
      const auto u = oracle::random_modes(gen, n);
      std::vector<cplx> out(u.size());
      nl.apply(u, out);
      worst = std::max(worst, oracle::rel_diff(out, oracle::burgers_convolution(u)));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("full-model nonlinearity ignores u_N and matches the truncated sum") {
  std::mt19937_64 gen(5);
  const GridConfig g = grid_of(16);
  SpectralField f(oracle::random_modes(gen, 16));
  f[16] = 0.0;
  const auto b = burgers_nonlinearity(f, g);
  auto expect = oracle::burgers_convolution(f.modes);
  auto got = b.modes;
  expect.pop_back();
  got.pop_back();
  CHECK(oracle::rel_diff(got, expect) < 1e-12);
  // The output is itself a valid field, so its k = N entry is zero.
  CHECK(b[16] == cplx{});
}

TEST_CASE("quadratic locality: output vanishes above 2K") {
  std::mt19937_64 gen(8);
  const GridConfig g = grid_of(32);
  SpectralField f(32);
  const auto low = oracle::random_modes(gen, 5);
  for (int k = 1; k <= 5; ++k) f[k] = low[static_cast<std::size_t>(k - 1)];
  const auto b = burgers_nonlinearity(f, g);
  for (int k = 11; k <= 32; ++k) CHECK(std::abs(b[k]) < 1e-13);
  CHECK(std::abs(b[10]) > 1e-3);
}

TEST_CASE("project_low") {
  std::mt19937_64 gen(9);
  SpectralField f(oracle::random_modes(gen, 10));
  CHECK(project_low(f, 10).modes == f.modes);
  SpectralField only5(10);
  only5[5] = cplx(1.0, 2.0);
  for (const auto& z : project_low(only5, 2).modes) CHECK(z == cplx{});
  const auto once = project_low(f, 4);
  CHECK(project_low(once, 4).modes == once.modes);
  for (int k = 5; k <= 10; ++k) CHECK(once[k] == cplx{});
}

TEST_CASE("sup_abs and PhysicalGrid") {
  const GridConfig g = grid_of(8);
  SpectralField f(8);
  f[1] = cplx(1.0, -0.5);  // sin + 2 cos, amplitude sqrt(5)
  CHECK(sup_abs(f, g) <= std::sqrt(5.0) + 1e-12);
  CHECK(sup_abs(f, g) > 2.0);
  PhysicalGrid pg(g);
  CHECK(pg.sup_abs(std::span<const cplx>(f.modes).first(2)) == doctest::Approx(sup_abs(f, g)));
}
