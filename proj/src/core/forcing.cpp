#include "bnar/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bnar/error.hpp"

namespace bnar {

void ForceConfig::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("force: sigma must be >= 0");
  if (k0 < 1) throw ConfigError("force: k0 must be >= 1");
}

ForceIncrement sample_increment(const ForceConfig& cfg, Rng& rng, double dt,
                                std::int64_t step_index) {
  if (!(dt > 0.0)) throw ConfigError("sample_increment: dt must be > 0");
  cfg.validate();
  ForceIncrement inc;
  inc.step_index = step_index;
  inc.dt = dt;
  inc.modes.resize(static_cast<std::size_t>(cfg.k0));
  const double sd = std::sqrt(dt);
  const double scale = 0.5 * cfg.sigma / dt;
  for (auto& f : inc.modes) {
    const double dw_sin = sd * rng.normal();
    const double dw_cos = sd * rng.normal();
    f = scale * cplx(dw_cos, -dw_sin);
  }
  return inc;
}

ModeVector aggregate_over_gap(std::span<const ForceIncrement> increments, int gap,
                              double delta) {
  if (gap < 1 || increments.size() != static_cast<std::size_t>(gap)) {
    throw DataError("aggregate_over_gap: expected " + std::to_string(gap) +
                    " increments, got " + std::to_string(increments.size()));
  }
  std::size_t n = 0;
  for (const auto& inc : increments) n = std::max(n, inc.modes.size());
  ForceAccumulator acc(static_cast<int>(n));
  for (const auto& inc : increments) acc.add(inc);
  return acc.take(delta);
}

void ForceAccumulator::add(const ForceIncrement& inc) {
  if (count_ > 0 && inc.dt != dt_) {
    throw DataError("force aggregate: increments drawn with different dt");
  }
  dt_ = inc.dt;
  const std::size_t n = std::min(sum_.size(), inc.modes.size());
  for (std::size_t k = 0; k < n; ++k) sum_[k] += inc.modes[k];
  ++count_;
}

ModeVector ForceAccumulator::take(double delta) {
  if (!(delta > 0.0)) throw ConfigError("force aggregate: delta must be > 0");
  // (sum f dt) / delta with a common dt; exact when delta == dt.
  const double w = dt_ / delta;
  ModeVector out(sum_.size());
  for (std::size_t k = 0; k < sum_.size(); ++k) out[k] = sum_[k] * w;
  std::fill(sum_.begin(), sum_.end(), cplx{});
  count_ = 0;
  return out;
}

}  // namespace bnar
