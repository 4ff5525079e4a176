#pragma once

// Time integration of the truncated Galerkin system
//   du_k/dt = -nu k^2 u_k + B_k(u) + f_k,   1 <= k <= K_active,
// by ETDRK4 with the stochastic force frozen over each step.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bnar/forcing.hpp"
#include "bnar/random.hpp"
#include "bnar/spectral.hpp"

namespace bnar {

/// Modes larger than this in magnitude count as numerical blow-up.
inline constexpr double kBlowUpThreshold = 1.0e5;

struct IntegratorConfig {
  GridConfig grid;
  ForceConfig force;
  double dt = 0.001;
  int etd_contour_points = 32;
  /// Disables B; only used to check the exponential part in isolation.
  bool nonlinear = true;

  void validate() const;
};

/// ETDRK4 coefficients and workspace for one (mode count, step size) pair.
/// The linear part is integrated exactly; the phi-functions are evaluated by
/// averaging over a circle of unit radius around each nu k^2 h.
class Etdrk4Stepper {
 public:
  Etdrk4Stepper(int n_active, double viscosity, double h, int contour_points = 32,
                bool nonlinear = true);

  int n_active() const { return n_active_; }
  double step_size() const { return h_; }

  /// Advances the first n_active modes of `u` by one step. `force` holds a
  /// constant forcing for modes 1..force.size(); modes past n_active are
  /// ignored.
  void step(std::span<cplx> u, std::span<const cplx> force);

 private:
  void rhs(std::span<const cplx> v, std::span<cplx> out);

  int n_active_;
  double h_;
  bool nonlinear_;
  std::vector<double> e_, e2_, q_, f1_, f2_, f3_;
  DealiasedNonlinearity nonlinearity_;
  ModeVector force_, nv_, na_, nb_, nc_, a_, b_, c_;
};

/// Number of modes actually evolved for a given K_active: the full model
/// (K_active = N) keeps u_N = 0, so min(K_active, N - 1).
int evolved_modes(const GridConfig& grid, int K_active);

/// One ETDRK4 step; modes above K_active come back zero.
SpectralField etdrk4_step(const SpectralField& state, const ForceIncrement& force,
                          const IntegratorConfig& cfg, int K_active);

struct IntegrateOptions {
  int save_every = 1;
  /// Number of leading modes kept in saved states; 0 keeps all N.
  int save_modes = 0;
  /// Store the force averaged over each save interval (dt = save_every*dt).
  bool retain_forces = false;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  /// forces[n] drove states[n] -> states[n+1], when retained.
  std::vector<ForceIncrement> forces;
  /// sup_x |u| of the untruncated state at each saved time, on the
  /// 2N-point grid of `sup_grid_modes`.
  std::vector<double> sup_norms;
  int sup_grid_modes = 0;
  std::optional<std::int64_t> blow_up_step;
};

/// Integrates n_steps fine steps with fresh force increments from `rng`,
/// saving every opts.save_every steps (the initial state is always saved).
/// Stops at the first step where some |u_k| exceeds kBlowUpThreshold or is
/// not finite, and records that step in blow_up_step.
Trajectory integrate(const SpectralField& initial, std::int64_t n_steps,
                     const IntegratorConfig& cfg, int K_active,
                     const IntegrateOptions& opts, Rng& rng);

/// Same, with a generator seeded from cfg.force.seed.
Trajectory integrate(const SpectralField& initial, std::int64_t n_steps,
                     const IntegratorConfig& cfg, int K_active, int save_every);

/// Mean over saved states of sup_x |u| * dt_eval / dx, where sup and dx
/// refer to the 2N-point grid of `grid`. Recorded sup norms are used when
/// they were taken on the same grid; otherwise the stored modes (truncated
/// to grid.n_modes) are synthesized.
double mean_cfl(const Trajectory& traj, const GridConfig& grid, double dt_eval);

/// u0(x) = sin(x) + 2 cos(x), i.e. u_1 = 1 - i/2.
SpectralField reference_initial_condition(const GridConfig& grid);

/// Integrates from reference_initial_condition for burn_in_time and returns
/// n_samples states at step indices drawn uniformly from the second half
/// of that run, in time order. The generator is seeded from
/// split_seed(cfg.force.seed, stream).
std::vector<SpectralField> make_initial_ensemble(const IntegratorConfig& cfg,
                                                 double burn_in_time, int n_samples,
                                                 std::uint64_t stream = 0);

/// True when any mode exceeds kBlowUpThreshold or is not finite.
bool has_blown_up(std::span<const cplx> modes);

}  // namespace bnar
