#pragma once

// Training / validation data: the first K modes of full-model trajectories
// observed every `gap` fine steps, together with the force averaged over
// each observation interval.
//
// On-disk layout (all integers and floats little-endian):
//   bytes 0..4   magic "BNAR1"
//   bytes 5..12  uint64 length L of the JSON header
//   L bytes      UTF-8 JSON header (DatasetMeta plus array shapes)
//   payload      u as float64 (re, im) pairs in [m][n][k] order, n = 0..N_t,
//                then f in the same order, n = 0..N_t-1

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bnar/full_model.hpp"
#include "bnar/series.hpp"

namespace bnar {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetMeta {
  int K = 0;
  int gap = 1;
  double dt = 0.0;
  double delta = 0.0;  // always gap * dt
  int n_traj = 0;
  int n_steps = 0;
  IntegratorConfig full_model;
  std::uint64_t seed = 0;
  int format_version = kDatasetFormatVersion;

  void validate() const;
};

struct TrajectoryDataset {
  DatasetMeta meta;
  /// u[m] has n_steps + 1 rows; row n is the state at t_n = n * delta.
  std::vector<ModeSeries> u;
  /// f[m] has n_steps rows; row n is the average force over (t_n, t_{n+1}].
  std::vector<ModeSeries> f;

  /// Checks shapes against meta and that every entry is finite.
  void validate() const;
  friend bool operator==(const TrajectoryDataset& a, const TrajectoryDataset& b);
};

/// Runs M full-model trajectories of N_t observation intervals each. Trajectory
/// m draws its initial state from `initial_ensemble` and its forcing from
/// split_seed(full_cfg.force.seed, m), so the dataset is a function of the
/// configuration alone. Work is spread over worker_count() threads.
TrajectoryDataset generate(const IntegratorConfig& full_cfg, int K, int gap, int M, int N_t,
                           std::span<const SpectralField> initial_ensemble);

void save(const TrajectoryDataset& ds, const std::filesystem::path& path);
TrajectoryDataset load(const std::filesystem::path& path);

/// Serialized form, identical to the file contents.
std::vector<std::uint8_t> encode(const TrajectoryDataset& ds);
TrajectoryDataset decode(std::span<const std::uint8_t> bytes);

/// Coarsens the observation stride by `factor`: keeps every factor-th state
/// and averages the forces of each group of `factor` intervals.
TrajectoryDataset downsample(const TrajectoryDataset& ds, int factor);

/// Keeps the first K modes.
TrajectoryDataset truncate_modes(const TrajectoryDataset& ds, int K);

/// The first M trajectories, each cut to its first N_t intervals.
TrajectoryDataset slice(const TrajectoryDataset& ds, int M, int N_t);

/// Trajectories [first, first + count).
TrajectoryDataset select_trajectories(const TrajectoryDataset& ds, int first, int count);

/// Writes trajectory m as CSV: one row per observation time with columns
/// n, t, u<k>_re, u<k>_im for every k, then f<k>_re, f<k>_im (empty on the
/// last row, which has no following interval).
void export_csv(const TrajectoryDataset& ds, int m, const std::filesystem::path& path);

}  // namespace bnar
