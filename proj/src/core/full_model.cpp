#include "bnar/full_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bnar/error.hpp"

namespace bnar {

void IntegratorConfig::validate() const {
  grid.validate();
  force.validate();
  if (!(dt > 0.0)) throw ConfigError("integrator: dt must be > 0");
  if (etd_contour_points < 16) throw ConfigError("integrator: etd_contour_points must be >= 16");
}

Etdrk4Stepper::Etdrk4Stepper(int n_active, double viscosity, double h, int contour_points,
                             bool nonlinear)
    : n_active_(n_active), h_(h), nonlinear_(nonlinear), nonlinearity_(n_active) {
  if (!(h > 0.0)) throw ConfigError("ETDRK4: step size must be > 0");
  if (contour_points < 1) throw ConfigError("ETDRK4: contour needs points");
  const auto n = static_cast<std::size_t>(n_active);
  e_.resize(n);
  e2_.resize(n);
  q_.resize(n);
  f1_.resize(n);
  f2_.resize(n);
  f3_.resize(n);
  for (auto* v : {&force_, &nv_, &na_, &nb_, &nc_, &a_, &b_, &c_}) v->resize(n);

  std::vector<cplx> roots(static_cast<std::size_t>(contour_points));
  for (int j = 0; j < contour_points; ++j) {
    roots[static_cast<std::size_t>(j)] =
        std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / contour_points);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i + 1);
    const double lh = -viscosity * k * k * h;
    e_[i] = std::exp(lh);
    e2_[i] = std::exp(0.5 * lh);
    cplx q{}, a{}, b{}, c{};
    for (const cplx& r : roots) {
      const cplx z = lh + r;
      const cplx ez = std::exp(z);
      const cplx z3 = z * z * z;
      q += (std::exp(0.5 * z) - 1.0) / z;
      a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      b += (2.0 + z + ez * (z - 2.0)) / z3;
      c += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    const double w = h / contour_points;
    q_[i] = w * q.real();
    f1_[i] = w * a.real();
    f2_[i] = w * b.real();
    f3_[i] = w * c.real();
  }
}

void Etdrk4Stepper::rhs(std::span<const cplx> v, std::span<cplx> out) {
  if (nonlinear_) {
    nonlinearity_.apply(v, out);
  } else {
    std::fill(out.begin(), out.end(), cplx{});
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += force_[i];
}

void Etdrk4Stepper::step(std::span<cplx> u, std::span<const cplx> force) {
  const auto n = static_cast<std::size_t>(n_active_);
  if (u.size() < n) throw ConfigError("ETDRK4: state has fewer modes than the stepper");
  std::fill(force_.begin(), force_.end(), cplx{});
  std::copy_n(force.begin(), std::min(n, force.size()), force_.begin());
  auto v = u.first(n);

  rhs(v, nv_);
  for (std::size_t i = 0; i < n; ++i) a_[i] = e2_[i] * v[i] + q_[i] * nv_[i];
  rhs(a_, na_);
  for (std::size_t i = 0; i < n; ++i) b_[i] = e2_[i] * v[i] + q_[i] * na_[i];
  rhs(b_, nb_);
  for (std::size_t i = 0; i < n; ++i) c_[i] = e2_[i] * a_[i] + q_[i] * (2.0 * nb_[i] - nv_[i]);
  rhs(c_, nc_);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = e_[i] * v[i] + nv_[i] * f1_[i] + 2.0 * (na_[i] + nb_[i]) * f2_[i] + nc_[i] * f3_[i];
  }
}

int evolved_modes(const GridConfig& grid, int K_active) {
  if (K_active < 1 || K_active > grid.n_modes) {
    throw ConfigError("K_active = " + std::to_string(K_active) + " outside [1, " +
                      std::to_string(grid.n_modes) + "]");
  }
  return std::min(K_active, grid.n_modes - 1);
}

bool has_blown_up(std::span<const cplx> modes) {
  return std::any_of(modes.begin(), modes.end(), [](const cplx& z) {
    return !std::isfinite(z.real()) || !std::isfinite(z.imag()) ||
           std::abs(z) > kBlowUpThreshold;
  });
}

namespace {

void check_state(const SpectralField& state, const IntegratorConfig& cfg) {
  if (state.n_modes() != cfg.grid.n_modes) {
    throw ConfigError("state has " + std::to_string(state.n_modes()) + " modes, grid has " +
                      std::to_string(cfg.grid.n_modes));
  }
  if (has_blown_up(state.modes)) throw IntegrationError("non-finite or blown-up input state");
}

}  // namespace

SpectralField etdrk4_step(const SpectralField& state, const ForceIncrement& force,
                          const IntegratorConfig& cfg, int K_active) {
  cfg.validate();
  check_state(state, cfg);
  const int n = evolved_modes(cfg.grid, K_active);
  Etdrk4Stepper stepper(n, cfg.grid.viscosity, cfg.dt, cfg.etd_contour_points, cfg.nonlinear);
  SpectralField out = state;
  std::fill(out.modes.begin() + n, out.modes.end(), cplx{});
  stepper.step(out.modes, force.modes);
  return out;
}

Trajectory integrate(const SpectralField& initial, std::int64_t n_steps,
                     const IntegratorConfig& cfg, int K_active,
                     const IntegrateOptions& opts, Rng& rng) {
  cfg.validate();
  check_state(initial, cfg);
  if (n_steps < 0) throw ConfigError("integrate: n_steps must be >= 0");
  if (opts.save_every < 1) throw ConfigError("integrate: save_every must be >= 1");
  if (opts.save_modes < 0 || opts.save_modes > cfg.grid.n_modes) {
    throw ConfigError("integrate: save_modes outside [0, N]");
  }
  const int n = evolved_modes(cfg.grid, K_active);
  const int keep = opts.save_modes == 0 ? cfg.grid.n_modes : opts.save_modes;

  Etdrk4Stepper stepper(n, cfg.grid.viscosity, cfg.dt, cfg.etd_contour_points, cfg.nonlinear);
  PhysicalGrid physical(cfg.grid);
  ForceAccumulator acc(cfg.force.k0);
  const double interval = opts.save_every * cfg.dt;

  SpectralField state = initial;
  std::fill(state.modes.begin() + n, state.modes.end(), cplx{});

  Trajectory traj;
  traj.sup_grid_modes = cfg.grid.n_modes;
  auto save = [&](std::int64_t s) {
    traj.times.push_back(static_cast<double>(s) * cfg.dt);
    traj.states.emplace_back(ModeVector(state.modes.begin(), state.modes.begin() + keep));
    traj.sup_norms.push_back(physical.sup_abs(state.modes));
  };
  save(0);

  for (std::int64_t s = 1; s <= n_steps; ++s) {
    const ForceIncrement inc = sample_increment(cfg.force, rng, cfg.dt, s - 1);
    stepper.step(state.modes, inc.modes);
    if (opts.retain_forces) acc.add(inc);
    if (has_blown_up(std::span<const cplx>(state.modes).first(static_cast<std::size_t>(n)))) {
      traj.blow_up_step = s;
      break;
    }
    if (s % opts.save_every == 0) {
      save(s);
      if (opts.retain_forces) {
        traj.forces.push_back({s - opts.save_every, acc.take(interval), interval});
      }
    }
  }
  return traj;
}

Trajectory integrate(const SpectralField& initial, std::int64_t n_steps,
                     const IntegratorConfig& cfg, int K_active, int save_every) {
  Rng rng(cfg.force.seed);
  IntegrateOptions opts;
  opts.save_every = save_every;
  return integrate(initial, n_steps, cfg, K_active, opts, rng);
}

double mean_cfl(const Trajectory& traj, const GridConfig& grid, double dt_eval) {
  if (traj.states.empty() && traj.sup_norms.empty()) {
    throw DataError("mean_cfl: empty trajectory");
  }
  double total = 0.0;
  std::size_t count = 0;
  if (!traj.sup_norms.empty() && traj.sup_grid_modes == grid.n_modes) {
    for (double s : traj.sup_norms) total += s;
    count = traj.sup_norms.size();
  } else {
    PhysicalGrid physical(grid);
    const auto limit = static_cast<std::size_t>(grid.n_modes);
    for (const auto& st : traj.states) {
      auto modes = std::span<const cplx>(st.modes);
      total += physical.sup_abs(modes.first(std::min(limit, modes.size())));
    }
    count = traj.states.size();
  }
  return total / static_cast<double>(count) * dt_eval / grid.dx();
}

SpectralField reference_initial_condition(const GridConfig& grid) {
  SpectralField u0(grid.n_modes);
  u0[1] = cplx(1.0, -0.5);
  return u0;
}

std::vector<SpectralField> make_initial_ensemble(const IntegratorConfig& cfg,
                                                 double burn_in_time, int n_samples,
                                                 std::uint64_t stream) {
  cfg.validate();
  if (!(burn_in_time > 0.0)) throw ConfigError("ensemble: burn_in_time must be > 0");
  if (n_samples < 1) throw ConfigError("ensemble: n_samples must be >= 1");
  const auto n_steps = std::max<std::int64_t>(1, std::llround(burn_in_time / cfg.dt));
  const std::int64_t first = std::max<std::int64_t>(1, n_steps / 2);
  const auto window = static_cast<std::uint64_t>(n_steps - first + 1);

  Rng rng(split_seed(cfg.force.seed, stream));
  std::vector<std::int64_t> picks(static_cast<std::size_t>(n_samples));
  for (auto& p : picks) p = first + static_cast<std::int64_t>(rng.below(window));
  std::sort(picks.begin(), picks.end());

  const int n = evolved_modes(cfg.grid, cfg.grid.n_modes);
  Etdrk4Stepper stepper(n, cfg.grid.viscosity, cfg.dt, cfg.etd_contour_points, cfg.nonlinear);
  SpectralField state = reference_initial_condition(cfg.grid);

  std::vector<SpectralField> out;
  out.reserve(picks.size());
  std::size_t next = 0;
  for (std::int64_t s = 1; s <= n_steps && next < picks.size(); ++s) {
    const ForceIncrement inc = sample_increment(cfg.force, rng, cfg.dt, s - 1);
    stepper.step(state.modes, inc.modes);
    if (has_blown_up(state.modes)) {
      throw IntegrationError("ensemble burn-in blew up at step " + std::to_string(s));
    }
    while (next < picks.size() && picks[next] == s) {
      out.push_back(state);
      ++next;
    }
  }
  return out;
}

}  // namespace bnar
