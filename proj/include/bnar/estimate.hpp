#pragma once

// Least-squares estimation of NAR coefficients, one independent fit per
// wavenumber. Target rows n = p+1..N_t of every trajectory contribute
//   r^n_k = u^n_k - u^{n-1}_k - delta [R(u^{n-1})_k + f^n_k]  ~  delta Phi^n_k(theta).

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bnar/dataset.hpp"
#include "bnar/nar.hpp"

namespace bnar {

struct RegressionProblem {
  NarSpec spec;
  std::vector<std::string> column_names;
  /// design[k-1]: rows x columns of delta * feature values.
  std::vector<Eigen::MatrixXcd> design;
  std::vector<Eigen::VectorXcd> response;
  std::size_t n_samples = 0;
};

/// Throws DataError when the dataset does not match the NarSpec (K, delta),
/// is too short (N_t <= p), or produces non-finite features.
RegressionProblem build_problem(const TrajectoryDataset& ds, const NarSpec& spec);

struct FitReport {
  NarModel model;
  std::vector<double> rss;
  /// Ratio of extreme singular values of the column-scaled real design.
  std::vector<double> condition;
  std::vector<int> rank;
  /// dropped[k-1][c]: column c was identically zero and left out.
  std::vector<std::vector<bool>> dropped;
  std::size_t n_samples = 0;
  double ridge = 0.0;
};

/// Minimizes |r - X theta|^2 + ridge |theta|^2 per wavenumber through an SVD
/// of the column-scaled, real-stacked design; singular values below
/// 1e-10 * sigma_max are discarded. sigma_g = RSS / n_samples.
FitReport solve(const RegressionProblem& problem, double ridge = 0.0);

FitReport fit(const TrajectoryDataset& ds, const NarSpec& spec, double ridge = 0.0);

struct ConsistencyRow {
  int n_traj = 0;
  int n_steps = 0;
  std::size_t n_samples = 0;
  std::vector<ModeVector> theta;
};

struct ConsistencyTable {
  std::vector<std::string> column_names;
  std::vector<ConsistencyRow> rows;
  /// |theta_last - theta_prev| / |theta_last| over all coefficients.
  double last_relative_change = 0.0;
  /// Largest single-coefficient relative change between the last two sizes.
  double max_relative_change = 0.0;
};

/// Refits on nested slices (first M trajectories, first T intervals each)
/// of `ds`, in the given order, which must be ascending.
ConsistencyTable consistency_study(const TrajectoryDataset& ds, const NarSpec& spec,
                                   const std::vector<std::pair<int, int>>& sizes,
                                   double ridge = 0.0);

/// |a - b| / |b| with both flattened over k and columns.
double relative_rms_difference(const std::vector<ModeVector>& a,
                               const std::vector<ModeVector>& b);

nlohmann::json to_json(const FitReport& report);
/// Columns: n_traj, n_steps, n_samples, k, term, re, im.
void write_consistency_csv(const ConsistencyTable& table, const std::filesystem::path& path);

}  // namespace bnar
