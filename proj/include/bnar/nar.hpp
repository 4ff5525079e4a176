#pragma once

// Nonlinear autoregressive closure for the first K Fourier modes:
//
//   u^n_k = u^{n-1}_k + delta [R(u^{n-1})_k + f^n_k + Phi^n_k] + g^n_k,
//   Phi^n_k = sum_{j=1}^p  cv_{k,j} u^{n-j}_k + cR_{k,j} R(u^{n-j})_k
//                        + cf_{k,j} f^{n-j}_k + cw_{k,j} Q_{k,j},
//   Q_{k,j} = sum_{l in S_k} ut^{n-1}_l ut^{n-j}_{k-l},
//
// where R is one deterministic ETDRK4 step of the K-mode Galerkin system
// divided by delta, S_k pairs exactly one resolved index (|.| <= K) with one
// index in K < |.| <= 2K, and ut^{n-j} extends u^{n-j} to wavenumbers
// K < k <= 2K by
//   ut_k = (ik/2) e^{-nu k^2 j delta} sum_{|l|<=K, |k-l|<=K} u_{k-l} u_l.
// Negative wavenumbers are conjugates. Coefficients are complex, one per
// (k, active term).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bnar/forcing.hpp"
#include "bnar/full_model.hpp"
#include "bnar/random.hpp"
#include "bnar/series.hpp"

namespace bnar {

enum class TermFamily { kState, kDrift, kForce, kQuadratic };

/// Which (family, lag) terms enter Phi. Each vector has one flag per lag.
struct TermMask {
  std::vector<bool> state, drift, force, quadratic;

  /// State and drift at lag 1 only, no force terms, quadratic at every lag.
  static TermMask defaults(int p);
  /// Every family at every lag.
  static TermMask all(int p);
};

struct FeatureColumn {
  TermFamily family;
  int lag;

  /// "v1", "R2", "f1", "w3", ...
  std::string name() const;
};

struct NarSpec {
  int K = 8;
  int p = 1;
  double delta = 0.005;
  double viscosity = 0.02;
  int etd_contour_points = 32;
  TermMask mask = TermMask::defaults(1);

  static NarSpec make(int K, int p, double delta, double viscosity);

  void validate() const;
  /// Active columns ordered by family (state, drift, force, quadratic), then lag.
  std::vector<FeatureColumn> columns() const;
  int n_features() const { return static_cast<int>(columns().size()); }
};

struct NarModel {
  NarSpec spec;
  /// theta[k-1][c]: coefficient of column c for wavenumber k.
  std::vector<ModeVector> theta;
  /// Variance E|g_k|^2 of the residual noise per wavenumber.
  std::vector<double> sigma_g;

  /// All coefficients and noise zero: the stochastic K-mode Galerkin step.
  static NarModel zero(const NarSpec& spec);
  void validate() const;
};

/// Past values seen at step n: u[j-1] = u^{n-j} and f[j-1] = f^{n-j} for
/// j = 1..p. `drift`, when non-empty, caches R(u^{n-j}) in the same order.
struct LagWindow {
  std::vector<ModeVector> u;
  std::vector<ModeVector> f;
  std::vector<ModeVector> drift;
};

/// Per-wavenumber feature rows, row-major [k-1][column].
struct FeatureMatrix {
  int K = 0;
  int n_columns = 0;
  std::vector<cplx> values;

  std::span<const cplx> row(int k) const {
    return {values.data() + static_cast<std::size_t>((k - 1) * n_columns),
            static_cast<std::size_t>(n_columns)};
  }
};

/// Stateful evaluator for one NarSpec: owns the K-mode ETDRK4 workspace,
/// so an instance must not be shared between threads.
class NarOperator {
 public:
  explicit NarOperator(const NarSpec& spec);

  const NarSpec& spec() const { return spec_; }

  /// R(u) = (ETDRK4_delta(u) - u) / delta for the unforced K-mode system.
  ModeVector r_delta(std::span<const cplx> u);

  /// Values ut_k for k = 1..2K of a state seen at lag j.
  ModeVector reconstruct(std::span<const cplx> u, int j) const;

  /// Active features of Phi for every k. Missing drift entries are computed.
  FeatureMatrix features(const LagWindow& window);

  /// Phi^n_k for every k.
  ModeVector phi(const NarModel& model, const FeatureMatrix& features) const;

  /// One NAR step. `force` is f^n, `noise` is g^n (K entries each).
  ModeVector step(const NarModel& model, LagWindow& window, std::span<const cplx> force,
                  std::span<const cplx> noise);

 private:
  void check_window(const LagWindow& window) const;

  NarSpec spec_;
  Etdrk4Stepper stepper_;
  std::vector<double> damping_;  // e^{-nu k^2 delta} for k = K+1..2K
};

ModeVector r_delta(std::span<const cplx> u, const NarSpec& spec);
ModeVector reconstruct_high_modes(const LagWindow& window, int j, const NarSpec& spec);
FeatureMatrix phi_features(const LagWindow& window, const NarSpec& spec);
ModeVector nar_step(const LagWindow& window, std::span<const cplx> force,
                    std::span<const cplx> noise, const NarModel& model);

/// Forcing used while simulating a NAR model.
struct NarForcing {
  enum class Kind { kNone, kWhiteNoise, kRecorded };
  Kind kind = Kind::kNone;
  /// White noise: f_k = (sigma/2)(dW' - i dW)/delta, dW ~ Normal(0, delta)
  /// for k <= min(k0, K), drawn from the simulation generator.
  double sigma = 0.0;
  int k0 = 0;
  /// Recorded: row offset + n - 1 of `recorded` is used as f^n.
  const ModeSeries* recorded = nullptr;
  std::size_t offset = 0;

  static NarForcing none() { return {}; }
  static NarForcing white_noise(double sigma, int k0);
  static NarForcing replay(const ModeSeries& forces, std::size_t offset);
};

struct NarRun {
  /// Row 0 is the newest window state; rows 1..n are the simulated states.
  ModeSeries u;
  std::optional<std::int64_t> blow_up_step;

  bool stable() const { return !blow_up_step.has_value(); }
};

/// Iterates the model for n_steps. Per step the generator first supplies the
/// force (when white noise), then g^n with independent real and imaginary
/// parts ~ Normal(0, sigma_g_k / 2). Stops at the first state with a mode
/// above kBlowUpThreshold or not finite.
NarRun simulate_nar(const NarModel& model, const LagWindow& initial, std::int64_t n_steps,
                    const NarForcing& forcing, Rng& rng);

/// Window ending at row n - 1 of a data trajectory: u^{n-j} = u row n - j,
/// f^{n-j} = f row n - j - 1 (zero when before the start). Needs p <= n.
LagWindow window_from_data(const ModeSeries& u, const ModeSeries& f, std::size_t n, int p);

/// Window built by p - 1 unforced K-mode Galerkin steps from u0.
LagWindow warm_start_window(const NarSpec& spec, std::span<const cplx> u0);

nlohmann::json to_json(const NarModel& model);
NarModel nar_model_from_json(const nlohmann::json& j);

}  // namespace bnar
