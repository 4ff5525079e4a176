#pragma once

#include <cstdint>
#include <random>

namespace bnar {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a stream index:
/// mix64(base ^ mix64(stream + 0x9e3779b97f4a7c15)). Used to give every
/// trajectory, ensemble draw and sweep cell its own generator.
std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream);

/// Seedable generator with a fully specified output sequence.
///
/// Bits come from std::mt19937_64, whose sequence is fixed by the standard.
/// Uniforms take the top 53 bits. Gaussians use the Box-Muller transform
/// on two such uniforms, returning the cosine branch first and the sine
/// branch on the next call. Copying an Rng snapshots its full state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace bnar
