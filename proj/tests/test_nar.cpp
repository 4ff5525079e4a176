#include <doctest.h>

#include <cmath>

#include "bnar/error.hpp"
#include "bnar/nar.hpp"
#include "oracles.hpp"

using namespace bnar;

namespace {

/// ut_k for 1 <= k <= 2K by the defining convolution, no FFTs.
std::vector<cplx> reconstruct_oracle(const std::vector<cplx>& u, int j, double nu, double delta) {
  const int K = static_cast<int>(u.size());
  std::vector<cplx> out(u);
  for (int k = K + 1; k <= 2 * K; ++k) {
    cplx s{};
    for (int l = -K; l <= K; ++l) {
      if (std::abs(k - l) <= K) s += oracle::mode(u, k - l) * oracle::mode(u, l);
    }
    out.push_back(cplx(0.0, 0.5 * k) * std::exp(-nu * k * k * j * delta) * s);
  }
  return out;
}

/// Q_{k,j} = sum over l with exactly one of |l|, |k-l| in [1, K] and the
/// other in (K, 2K].
cplx q_oracle(const std::vector<cplx>& ut1, const std::vector<cplx>& utj, int K, int k) {
  cplx s{};
  for (int l = -2 * K; l <= 2 * K; ++l) {
    const int a = std::abs(l), b = std::abs(k - l);
    if (a == 0 || b == 0 || b > 2 * K) continue;
    const bool low_a = a <= K, low_b = b <= K;
    if (low_a == low_b) continue;
    s += oracle::mode(ut1, l) * oracle::mode(utj, k - l);
  }
  return s;
}

NarSpec spec_of(int K, int p) { return NarSpec::make(K, p, 0.01, 0.02); }

LagWindow random_window(std::mt19937_64& gen, int K, int p, double scale = 0.5) {
  LagWindow w;
  for (int j = 0; j < p; ++j) {
    w.u.push_back(oracle::random_modes(gen, K, scale));
    w.f.push_back(oracle::random_modes(gen, K, scale));
  }
  return w;
}

NarModel random_model(std::mt19937_64& gen, const NarSpec& spec, double scale) {
  NarModel m = NarModel::zero(spec);
  for (auto& row : m.theta) row = oracle::random_modes(gen, spec.n_features(), scale);
  return m;
}

}  // namespace

TEST_CASE("columns and names") {
  const auto cols = spec_of(2, 1).columns();
  REQUIRE(cols.size() == 3);
  CHECK(cols[0].name() == "v1");
  CHECK(cols[1].name() == "R1");
  CHECK(cols[2].name() == "w1");
  CHECK(spec_of(4, 3).n_features() == 5);
  auto all = spec_of(4, 2);
  all.mask = TermMask::all(2);
  CHECK(all.n_features() == 8);
  CHECK(all.columns()[4].name() == "f1");
}

TEST_CASE("spec and model validation") {
  CHECK_THROWS_AS(NarSpec::make(0, 1, 0.01, 0.02).validate(), ConfigError);
  CHECK_THROWS_AS(NarSpec::make(2, 0, 0.01, 0.02).validate(), ConfigError);
  CHECK_THROWS_AS(NarSpec::make(2, 1, 0.0, 0.02).validate(), ConfigError);
  auto m = NarModel::zero(spec_of(3, 1));
  CHECK_NOTHROW(m.validate());
  m.theta.pop_back();
  CHECK_THROWS_AS(m.validate(), ConfigError);
  auto n = NarModel::zero(spec_of(3, 1));
  n.sigma_g[0] = -1.0;
  CHECK_THROWS_AS(n.validate(), ConfigError);
}

TEST_CASE("reconstruction: closed forms for K = 2") {
  const auto spec = spec_of(2, 2);
  const cplx a(0.3, -0.2), b(-0.1, 0.4);
  for (int j = 1; j <= 2; ++j) {
    LagWindow w{{{a, b}, {a, b}}, {{0, 0}, {0, 0}}, {}};
    const auto ut = reconstruct_high_modes(w, j, spec);
    REQUIRE(ut.size() == 4);
    CHECK(ut[0] == a);
    CHECK(ut[1] == b);
    const double d = spec.delta, nu = spec.viscosity;
    const cplx u3 = cplx(0, 3) * a * b * std::exp(-9 * nu * j * d);
    const cplx u4 = cplx(0, 2) * b * b * std::exp(-16 * nu * j * d);
    CHECK(std::abs(ut[2] - u3) < 1e-15);
    CHECK(std::abs(ut[3] - u4) < 1e-15);
  }
}

TEST_CASE("reconstruction matches the convolution oracle") {
  std::mt19937_64 gen(1);
  for (int K : {1, 3, 8}) {
    const auto spec = spec_of(K, 2);
    NarOperator op(spec);
    const auto u = oracle::random_modes(gen, K);
    for (int j = 1; j <= 2; ++j) {
      const auto got = op.reconstruct(u, j);
      const auto expect = reconstruct_oracle(u, j, spec.viscosity, spec.delta);
      CHECK(oracle::rel_diff(got, expect) < 1e-13);
    }
  }
}

TEST_CASE("quadratic features match the brute-force sum over S_k") {
  std::mt19937_64 gen(2);
  for (int K : {2, 5, 8}) {
    const int p = 3;
    const auto spec = spec_of(K, p);
    const auto w = random_window(gen, K, p);
    const auto F = phi_features(w, spec);
    const auto cols = spec.columns();
    const auto ut1 = reconstruct_oracle(w.u[0], 1, spec.viscosity, spec.delta);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].family != TermFamily::kQuadratic) continue;
      const int j = cols[c].lag;
      const auto utj = reconstruct_oracle(w.u[j - 1], j, spec.viscosity, spec.delta);
      for (int k = 1; k <= K; ++k) {
        const cplx expect = q_oracle(ut1, utj, K, k);
        CHECK(std::abs(F.row(k)[c] - expect) < 1e-12 * (1.0 + std::abs(expect)));
      }
    }
  }
}

TEST_CASE("state, drift and force features are the lagged values") {
  std::mt19937_64 gen(3);
  auto spec = spec_of(3, 2);
  spec.mask = TermMask::all(2);
  const auto w = random_window(gen, 3, 2);
  const auto F = phi_features(w, spec);
  const auto R2 = r_delta(w.u[1], spec);
  const auto cols = spec.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const int j = cols[c].lag;
    for (int k = 1; k <= 3; ++k) {
      const auto kk = static_cast<std::size_t>(k - 1);
      switch (cols[c].family) {
        case TermFamily::kState: CHECK(F.row(k)[c] == w.u[j - 1][kk]); break;
        case TermFamily::kForce: CHECK(F.row(k)[c] == w.f[j - 1][kk]); break;
        case TermFamily::kDrift:
          if (j == 2) CHECK(F.row(k)[c] == R2[kk]);
          break;
        case TermFamily::kQuadratic: break;
      }
    }
  }
}

TEST_CASE("drift of a lone top mode is pure viscous decay") {
  const auto spec = spec_of(2, 1);
  const std::vector<cplx> u{0.0, cplx(0.4, 0.1)};
  const auto R = r_delta(u, spec);
  CHECK(std::abs(R[0]) < 1e-15);
  const cplx expect = (std::exp(-4 * spec.viscosity * spec.delta) - 1.0) / spec.delta * u[1];
  CHECK(std::abs(R[1] - expect) < 1e-13);
  for (const auto& z : r_delta(std::vector<cplx>(2), spec)) CHECK(z == cplx{});
}

TEST_CASE("zero coefficients reduce to the Galerkin step plus delta f") {
  std::mt19937_64 gen(4);
  const auto spec = spec_of(4, 2);
  const auto w = random_window(gen, 4, 2);
  const auto force = oracle::random_modes(gen, 4);
  const auto model = NarModel::zero(spec);
  const auto next = nar_step(w, force, std::vector<cplx>(4), model);
  std::vector<cplx> expect = w.u[0];
  Etdrk4Stepper st(4, spec.viscosity, spec.delta);
  st.step(expect, std::vector<cplx>(4));
  for (int k = 0; k < 4; ++k) expect[k] += spec.delta * force[k];
  CHECK(oracle::max_abs_diff(next, expect) < 1e-14);
}

TEST_CASE("Phi is linear in the coefficients") {
  std::mt19937_64 gen(5);
  const auto spec = spec_of(5, 2);
  const auto w = random_window(gen, 5, 2);
  NarOperator op(spec);
  const auto F = op.features(w);
  const auto a = random_model(gen, spec, 1.0);
  const auto b = random_model(gen, spec, 1.0);
  auto sum = a;
  for (std::size_t k = 0; k < sum.theta.size(); ++k) {
    for (std::size_t c = 0; c < sum.theta[k].size(); ++c) sum.theta[k][c] += 2.0 * b.theta[k][c];
  }
  const auto pa = op.phi(a, F), pb = op.phi(b, F), ps = op.phi(sum, F);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(ps[k] - (pa[k] + 2.0 * pb[k])) < 1e-12);
  for (const auto& z : op.phi(NarModel::zero(spec), F)) CHECK(z == cplx{});
}

TEST_CASE("step adds Phi and noise as documented") {
  std::mt19937_64 gen(6);
  const auto spec = spec_of(3, 1);
  auto w = random_window(gen, 3, 1);
  const auto model = random_model(gen, spec, 0.3);
  const auto force = oracle::random_modes(gen, 3);
  const auto noise = oracle::random_modes(gen, 3);
  NarOperator op(spec);
  const auto Phi = op.phi(model, op.features(w));
  const auto R = op.r_delta(w.u[0]);
  const auto next = op.step(model, w, force, noise);
  for (std::size_t k = 0; k < 3; ++k) {
    const cplx expect = w.u[0][k] + spec.delta * (R[k] + force[k] + Phi[k]) + noise[k];
    CHECK(std::abs(next[k] - expect) < 1e-13);
  }
}

TEST_CASE("JSON round trip") {
  std::mt19937_64 gen(7);
  auto spec = spec_of(3, 2);
  spec.mask = TermMask::all(2);
  auto m = random_model(gen, spec, 1.0);
  m.sigma_g = {0.1, 0.2, 0.3};
  const auto back = nar_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.spec.K == 3);
  CHECK(back.spec.p == 2);
  CHECK(back.spec.delta == spec.delta);
  CHECK(back.spec.mask.force == spec.mask.force);
  CHECK(back.theta == m.theta);
  CHECK(back.sigma_g == m.sigma_g);
  auto bad = to_json(m);
  bad["theta"].erase(0);
  CHECK_THROWS_AS(nar_model_from_json(bad), ConfigError);
}

TEST_CASE("simulate: reproducible, window shifting, recorded forcing") {
  std::mt19937_64 gen(8);
  const auto spec = spec_of(3, 2);
  auto model = random_model(gen, spec, 0.05);
  model.sigma_g = {1e-4, 1e-4, 1e-4};
  const auto w = random_window(gen, 3, 2, 0.2);
  Rng r1(9), r2(9);
  const auto a = simulate_nar(model, w, 50, NarForcing::white_noise(1.0, 4), r1);
  const auto b = simulate_nar(model, w, 50, NarForcing::white_noise(1.0, 4), r2);
  REQUIRE(a.stable());
  CHECK(a.u == b.u);
  CHECK(a.u.steps() == 51);
  CHECK(std::vector<cplx>(a.u.at(0).begin(), a.u.at(0).end()) == w.u[0]);

  // Manual iteration with recorded forcing and no noise.
  auto quiet = model;
  quiet.sigma_g = {0.0, 0.0, 0.0};
  ModeSeries forces(3, 0);
  for (int i = 0; i < 6; ++i) forces.push_back(oracle::random_modes(gen, 3));
  Rng r3(1);
  const auto rec = simulate_nar(quiet, w, 4, NarForcing::replay(forces, 2), r3);
  LagWindow win = w;
  NarOperator op(spec);
  for (std::size_t s = 1; s <= 4; ++s) {
    const auto f = forces.at(2 + s - 1);
    const auto next = op.step(quiet, win, f, std::vector<cplx>(3));
    CHECK(oracle::max_abs_diff(next, std::vector<cplx>(rec.u.at(s).begin(), rec.u.at(s).end())) < 1e-15);
    win.u.insert(win.u.begin(), next);
    win.u.pop_back();
    win.f.insert(win.f.begin(), std::vector<cplx>(f.begin(), f.end()));
    win.f.pop_back();
    win.drift.clear();
  }
}

TEST_CASE("simulate reports blow-up") {
  const auto spec = spec_of(2, 1);
  auto model = NarModel::zero(spec);
  for (auto& row : model.theta) row[0] = 1e4;  // v1 coefficient: growth 1 + 100 per step
  LagWindow w{{{cplx(1.0, 0.0), cplx(0.0, 1.0)}}, {{0.0, 0.0}}, {}};
  Rng rng(1);
  const auto run = simulate_nar(model, w, 100, NarForcing::none(), rng);
  REQUIRE(run.blow_up_step);
  CHECK(*run.blow_up_step <= 4);
}

TEST_CASE("window_from_data indexing") {
  ModeSeries u(1, 0), f(1, 0);
  for (int n = 0; n <= 5; ++n) u.push_back(std::vector<cplx>{cplx(n, 0)});
  for (int n = 0; n < 5; ++n) f.push_back(std::vector<cplx>{cplx(0, n)});
  const auto w = window_from_data(u, f, 3, 2);
  CHECK(w.u[0][0] == cplx(2, 0));
  CHECK(w.u[1][0] == cplx(1, 0));
  CHECK(w.f[0][0] == cplx(0, 1));
  CHECK(w.f[1][0] == cplx(0, 0));
  const auto start = window_from_data(u, f, 1, 1);
  CHECK(start.f[0][0] == cplx{});
  CHECK_THROWS(window_from_data(u, f, 1, 2));
}

TEST_CASE("warm start window") {
  const auto spec = spec_of(2, 3);
  const std::vector<cplx> u0{cplx(0.5, 0.0), cplx(0.0, 0.2)};
  const auto w = warm_start_window(spec, u0);
  REQUIRE(w.u.size() == 3);
  CHECK(w.u[2] == u0);
  CHECK(oracle::max_abs_diff(w.u[1], nar_step({{u0}, {{0, 0}}, {}}, std::vector<cplx>(2), std::vector<cplx>(2),
                                              NarModel::zero(NarSpec::make(2, 1, spec.delta, spec.viscosity)))) < 1e-15);
}
