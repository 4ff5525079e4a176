#pragma once

// Experiment orchestration: declarative configuration, the validation
// pipeline for a fitted model, and the five commands behind the CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bnar/dataset.hpp"
#include "bnar/estimate.hpp"
#include "bnar/nar.hpp"
#include "bnar/stats.hpp"

namespace bnar {

inline constexpr const char* kVersion = "1.0.0";

enum class Scale { kQuick, kPaper };

struct ExperimentConfig {
  Scale scale = Scale::kQuick;
  /// Full model; force.seed is the master seed.
  IntegratorConfig full;
  std::vector<double> sigmas{1.0};

  // reduction
  std::vector<int> K{8};
  std::vector<int> gaps{5};
  std::vector<int> lags{1};
  double ridge = 0.0;
  bool all_terms = false;

  // data
  int n_traj = 1;
  double T = 200.0;
  std::uint64_t data_seed = 1;
  double burn_in = 100.0;
  int ensemble_size = 20;

  // validation
  int val_n_traj = 1;
  double val_T = 200.0;
  std::uint64_t val_seed = 2;
  double T_sim = 200.0;
  double tau_max = 3.0;
  bool galerkin_baseline = true;

  // simulate
  double sim_T = 100.0;
  double sim_burn_in = 10.0;
  int save_every = 10;
  int save_modes = 16;

  /// fit.consistency: (M, T) pairs for a nested-refit table, ascending.
  std::vector<std::pair<int, double>> consistency;

  // inputs
  std::filesystem::path dataset, model, reference;

  std::filesystem::path output_dir = "out";

  double sigma() const;
  void validate() const;
};

/// Reads a configuration, filling unset values from the scale preset
/// ("quick" or "paper"). Throws ConfigError on malformed input.
ExperimentConfig parse_experiment(const nlohmann::json& j);
/// Fully resolved configuration, as recorded in manifests.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Number of observation intervals covering T time units at step delta.
int steps_for(double T, double delta);

NarSpec make_spec(const ExperimentConfig& cfg, int K, int gap, int p);

/// Training and reference data for one sigma, observed at stride gcd(gaps)
/// with max(K) modes. Each set has its own burn-in ensemble and seed.
struct StudyData {
  TrajectoryDataset train;
  TrajectoryDataset reference;
};
StudyData make_study_data(const ExperimentConfig& cfg, double sigma);

/// Extracts (K, gap) from a dataset observed at a finer stride.
TrajectoryDataset restrict_dataset(const TrajectoryDataset& ds, int K, int gap);

struct ValidationOptions {
  double T_sim = 200.0;
  double tau_max = 3.0;
  std::uint64_t seed = 2;
  bool galerkin_baseline = true;
};

struct RunStatistics {
  bool stable = true;
  std::optional<double> blow_up_time;
  std::size_t n_samples = 0;
  SpectrumEstimate spectrum;
  std::vector<PdfEstimate> pdfs;
  std::vector<AcfEstimate> acfs;
  std::vector<double> spectrum_error, ks, acf_error;
  /// sup|u| delta / dx on the 2K-point grid.
  double mean_cfl = 0.0;
};

struct ValidationReport {
  int K = 0, gap = 0, p = 0;
  double delta = 0.0;
  RunStatistics truth;
  RunStatistics nar;
  std::optional<RunStatistics> galerkin;
};

/// Simulates `model` for T_sim time units with fresh white-noise forcing
/// (sigma, K0 of the reference data), starting from the first p states of
/// reference trajectory 0, and compares its statistics with the reference.
/// The Galerkin baseline is the same simulation with theta = 0, sigma_g = 0.
ValidationReport validate_model(const NarModel& model, const TrajectoryDataset& reference,
                                const ValidationOptions& opts);

nlohmann::json to_json(const RunStatistics& s);
nlohmann::json to_json(const ValidationReport& r);
/// Writes report.json and spectrum/pdf/acf CSVs for truth, NAR and
/// Galerkin into `dir`.
std::vector<std::filesystem::path> write_validation(const ValidationReport& r,
                                                     const std::filesystem::path& dir);

/// Mean over rows of sup|u| dt_eval / dx on the 2K-point grid of the K
/// stored modes.
double mean_cfl_series(const ModeSeries& u, double dt_eval, double viscosity);

NarModel load_model(const std::filesystem::path& path);
void save_model(const NarModel& model, const std::filesystem::path& path);

/// Each command writes into cfg.output_dir (created if needed), including a
/// manifest.json, and returns a JSON summary.
nlohmann::json cmd_simulate(const ExperimentConfig& cfg);
nlohmann::json cmd_gen_data(const ExperimentConfig& cfg);
nlohmann::json cmd_fit(const ExperimentConfig& cfg);
nlohmann::json cmd_validate(const ExperimentConfig& cfg);
nlohmann::json cmd_sweep(const ExperimentConfig& cfg);

}  // namespace bnar
