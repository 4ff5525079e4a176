#pragma once

// White-in-time, smooth-in-space stochastic forcing
//   f(x,t) = sigma * sum_{m=1}^{K0} sin(mx) dW_m/dt + cos(mx) dW'_m/dt.
// Under the continuum Fourier convention its m-th coefficient is
//   f_m = (sigma/2) (dW'_m - i dW_m) / dt,
// held constant over each integration step.

#include <cstdint>
#include <span>
#include <vector>

#include "bnar/random.hpp"
#include "bnar/spectral.hpp"

namespace bnar {

struct ForceConfig {
  double sigma = 1.0;
  int k0 = 4;
  std::uint64_t seed = 1;

  /// sigma >= 0 is accepted so the unforced system can be run; k0 >= 1.
  void validate() const;
};

struct ForceIncrement {
  std::int64_t step_index = 0;
  ModeVector modes;  // k = 1..K0
  double dt = 0.0;
};

/// Draws dW_m then dW'_m ~ Normal(0, dt) for m = 1..K0, in that order.
ForceIncrement sample_increment(const ForceConfig& cfg, Rng& rng, double dt,
                                std::int64_t step_index = 0);

/// Time average of `gap` consecutive per-step forces over delta = gap*dt:
/// (sum_j f^{(j)} dt) / delta.
ModeVector aggregate_over_gap(std::span<const ForceIncrement> increments, int gap,
                              double delta);

/// Running version of aggregate_over_gap that avoids storing the fine
/// increments. All increments between two takes must share one dt.
class ForceAccumulator {
 public:
  explicit ForceAccumulator(int n_modes) : sum_(static_cast<std::size_t>(n_modes)) {}

  void add(const ForceIncrement& inc);
  /// Returns the aggregate over everything added since the last take and
  /// resets. Modes beyond the accumulator size are dropped, missing ones are 0.
  ModeVector take(double delta);
  int count() const { return count_; }

 private:
  ModeVector sum_;
  double dt_ = 0.0;
  int count_ = 0;
};

}  // namespace bnar
