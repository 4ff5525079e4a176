#include "bnar/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "bnar/error.hpp"
#include "bnar/json_io.hpp"
#include "bnar/parallel.hpp"

namespace bnar {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEnsembleStream = 0x656e73656d626c65ULL;  // "ensemble"
constexpr std::uint64_t kSimulateStream = 0x73696d756c617465ULL;  // "simulate"
constexpr std::uint64_t kGalerkinStream = 0x67616c65726b696eULL;  // "galerkin"

void check_keys(const json& j, const char* block, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string("'") + block + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in '" + block + "'");
  }
}

template <typename T>
std::vector<T> scalar_or_list(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

json block(const json& j, const char* key) {
  if (!j.contains(key)) return json::object();
  return j.at(key);
}

std::string tag(int K, int gap) { return "K" + std::to_string(K) + "_gap" + std::to_string(gap); }
std::string tag(int K, int gap, int p) { return tag(K, gap) + "_p" + std::to_string(p); }

std::string sigma_tag(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sigma%g", sigma);
  return buf;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what(), DataFault::kCorruptHeader);
  }
}

void prepare_output(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
  const json resolved = to_json(cfg);
  json m{{"tool", "bnar"},
         {"version", kVersion},
         {"command", command},
         {"config_hash", fnv1a_hex(resolved.dump())},
         {"seeds",
          {{"master", cfg.full.force.seed}, {"data", cfg.data_seed}, {"validation", cfg.val_seed}}},
         {"config", resolved},
         {"outputs", outputs}};
  write_json(m, cfg.output_dir / "manifest.json");
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json finite_list(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(finite_or_null(x));
  return a;
}

int gcd_of(const std::vector<int>& v) {
  int g = 0;
  for (int x : v) g = std::gcd(g, x);
  return g;
}

}  // namespace

double ExperimentConfig::sigma() const {
  if (sigmas.size() != 1) throw ConfigError("this command needs a single sigma");
  return sigmas.front();
}

void ExperimentConfig::validate() const {
  full.validate();
  if (sigmas.empty()) throw ConfigError("sigma list is empty");
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigma must be >= 0");
  }
  if (K.empty() || gaps.empty() || lags.empty()) {
    throw ConfigError("reduction: K, gaps and lags must be non-empty");
  }
  for (int k : K) {
    if (k < 1 || k >= full.grid.n_modes) throw ConfigError("reduction: K must lie in [1, N)");
  }
  for (int g : gaps) {
    if (g < 1) throw ConfigError("reduction: gaps must be >= 1");
  }
  for (int p : lags) {
    if (p < 1) throw ConfigError("reduction: lags must be >= 1");
  }
  if (!(ridge >= 0.0)) throw ConfigError("reduction: ridge must be >= 0");
  if (n_traj < 1 || val_n_traj < 1) throw ConfigError("data: n_traj must be >= 1");
  if (!(T > 0.0) || !(val_T > 0.0)) throw ConfigError("data: T must be > 0");
  if (!(burn_in > 0.0) || ensemble_size < 1) {
    throw ConfigError("data: burn_in must be > 0 and ensemble_size >= 1");
  }
  if (!(T_sim > 0.0) || !(tau_max >= 0.0)) throw ConfigError("validation: T_sim must be > 0");
  for (const auto& [M, T_fit] : consistency) {
    if (M < 1 || !(T_fit > 0.0)) throw ConfigError("fit.consistency: sizes must be positive");
  }
  if (!(sim_T >= 0.0) || !(sim_burn_in >= 0.0) || save_every < 1 || save_modes < 1) {
    throw ConfigError("simulate: invalid T, burn_in, save_every or save_modes");
  }
}

ExperimentConfig parse_experiment(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  check_keys(j, "config",
             {"scale", "full_model", "reduction", "data", "validation", "simulate", "inputs",
              "output_dir", "fit"});
  ExperimentConfig c;
  const std::string scale = optional<std::string>(j, "scale", "quick");
  if (scale == "quick") {
    c.scale = Scale::kQuick;
  } else if (scale == "paper") {
    c.scale = Scale::kPaper;
    c.T = 2000.0;
    c.burn_in = 1.0e4;
    c.ensemble_size = 1000;
    c.val_T = 2000.0;
    c.T_sim = 2000.0;
    c.sim_burn_in = 100.0;
  } else {
    throw ConfigError("scale must be 'quick' or 'paper'");
  }

  const json fm = block(j, "full_model");
  check_keys(fm, "full_model",
             {"n_modes", "viscosity", "dt", "k0", "sigma", "seed", "etd_contour_points"});
  c.full.grid.n_modes = optional<int>(fm, "n_modes", 128);
  c.full.grid.viscosity = optional<double>(fm, "viscosity", 0.02);
  c.full.dt = optional<double>(fm, "dt", 0.001);
  c.full.force.k0 = optional<int>(fm, "k0", 4);
  c.full.force.seed = optional<std::uint64_t>(fm, "seed", 1);
  c.full.etd_contour_points = optional<int>(fm, "etd_contour_points", 32);
  c.sigmas = scalar_or_list<double>(fm, "sigma", {1.0});
  if (!c.sigmas.empty()) c.full.force.sigma = c.sigmas.front();

  const json red = block(j, "reduction");
  check_keys(red, "reduction", {"K", "gaps", "lags", "ridge", "terms"});
  c.K = scalar_or_list<int>(red, "K", {8});
  c.gaps = scalar_or_list<int>(red, "gaps", {5});
  c.lags = scalar_or_list<int>(red, "lags", {1});
  c.ridge = optional<double>(red, "ridge", 0.0);
  const std::string terms = optional<std::string>(red, "terms", "default");
  if (terms != "default" && terms != "all") throw ConfigError("reduction.terms must be 'default' or 'all'");
  c.all_terms = terms == "all";

  const std::uint64_t seed = c.full.force.seed;
  const json data = block(j, "data");
  check_keys(data, "data", {"n_traj", "T", "seed", "burn_in", "ensemble_size"});
  c.n_traj = optional<int>(data, "n_traj", c.n_traj);
  c.T = optional<double>(data, "T", c.T);
  c.data_seed = optional<std::uint64_t>(data, "seed", seed);
  c.burn_in = optional<double>(data, "burn_in", c.burn_in);
  c.ensemble_size = optional<int>(data, "ensemble_size", c.ensemble_size);

  const json val = block(j, "validation");
  check_keys(val, "validation", {"n_traj", "T", "seed", "T_sim", "tau_max", "galerkin_baseline"});
  c.val_n_traj = optional<int>(val, "n_traj", c.val_n_traj);
  c.val_T = optional<double>(val, "T", c.val_T);
  c.val_seed = optional<std::uint64_t>(val, "seed", seed + 1);
  c.T_sim = optional<double>(val, "T_sim", c.T_sim);
  c.tau_max = optional<double>(val, "tau_max", c.tau_max);
  c.galerkin_baseline = optional<bool>(val, "galerkin_baseline", c.galerkin_baseline);

  const json sim = block(j, "simulate");
  check_keys(sim, "simulate", {"T", "burn_in", "save_every", "save_modes"});
  c.sim_T = optional<double>(sim, "T", c.sim_T);
  c.sim_burn_in = optional<double>(sim, "burn_in", c.sim_burn_in);
  c.save_every = optional<int>(sim, "save_every", c.save_every);
  c.save_modes = optional<int>(sim, "save_modes", c.save_modes);

  const json in = block(j, "inputs");
  check_keys(in, "inputs", {"dataset", "model", "reference"});
  c.dataset = optional<std::string>(in, "dataset", "");
  c.model = optional<std::string>(in, "model", "");
  c.reference = optional<std::string>(in, "reference", "");

  const json fb = block(j, "fit");
  check_keys(fb, "fit", {"consistency"});
  c.consistency = optional<std::vector<std::pair<int, double>>>(fb, "consistency", {});

  c.output_dir = optional<std::string>(j, "output_dir", "out");
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json sig = c.sigmas.size() == 1 ? json(c.sigmas.front()) : json(c.sigmas);
  return json{
      {"scale", c.scale == Scale::kQuick ? "quick" : "paper"},
      {"full_model",
       {{"n_modes", c.full.grid.n_modes},
        {"viscosity", c.full.grid.viscosity},
        {"dt", c.full.dt},
        {"k0", c.full.force.k0},
        {"sigma", sig},
        {"seed", c.full.force.seed},
        {"etd_contour_points", c.full.etd_contour_points}}},
      {"reduction",
       {{"K", c.K},
        {"gaps", c.gaps},
        {"lags", c.lags},
        {"ridge", c.ridge},
        {"terms", c.all_terms ? "all" : "default"}}},
      {"data",
       {{"n_traj", c.n_traj},
        {"T", c.T},
        {"seed", c.data_seed},
        {"burn_in", c.burn_in},
        {"ensemble_size", c.ensemble_size}}},
      {"validation",
       {{"n_traj", c.val_n_traj},
        {"T", c.val_T},
        {"seed", c.val_seed},
        {"T_sim", c.T_sim},
        {"tau_max", c.tau_max},
        {"galerkin_baseline", c.galerkin_baseline}}},
      {"simulate",
       {{"T", c.sim_T},
        {"burn_in", c.sim_burn_in},
        {"save_every", c.save_every},
        {"save_modes", c.save_modes}}},
      {"inputs",
       {{"dataset", c.dataset.string()},
        {"model", c.model.string()},
        {"reference", c.reference.string()}}},
      {"fit", {{"consistency", c.consistency}}},
      {"output_dir", c.output_dir.string()}};
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int steps_for(double T, double delta) {
  return static_cast<int>(std::llround(T / delta));
}

NarSpec make_spec(const ExperimentConfig& cfg, int K, int gap, int p) {
  NarSpec s = NarSpec::make(K, p, gap * cfg.full.dt, cfg.full.grid.viscosity);
  s.etd_contour_points = cfg.full.etd_contour_points;
  if (cfg.all_terms) s.mask = TermMask::all(p);
  return s;
}

StudyData make_study_data(const ExperimentConfig& cfg, double sigma) {
  const int gap0 = gcd_of(cfg.gaps);
  const int Kmax = *std::max_element(cfg.K.begin(), cfg.K.end());
  auto build = [&](std::uint64_t seed, double T, int M) {
    IntegratorConfig fc = cfg.full;
    fc.force.sigma = sigma;
    fc.force.seed = seed;
    const auto ensemble = make_initial_ensemble(fc, cfg.burn_in, cfg.ensemble_size, kEnsembleStream);
    return generate(fc, Kmax, gap0, M, steps_for(T, gap0 * fc.dt), ensemble);
  };
  StudyData d;
  d.train = build(cfg.data_seed, cfg.T, cfg.n_traj);
  d.reference = build(cfg.val_seed, cfg.val_T, cfg.val_n_traj);
  return d;
}

TrajectoryDataset restrict_dataset(const TrajectoryDataset& ds, int K, int gap) {
  if (gap % ds.meta.gap != 0) {
    throw ConfigError("gap " + std::to_string(gap) + " is not a multiple of the dataset gap " +
                      std::to_string(ds.meta.gap));
  }
  if (K > ds.meta.K) throw ConfigError("dataset holds fewer than K modes");
  TrajectoryDataset out = gap == ds.meta.gap ? ds : downsample(ds, gap / ds.meta.gap);
  if (K < out.meta.K) out = truncate_modes(out, K);
  return out;
}

double mean_cfl_series(const ModeSeries& u, double dt_eval, double viscosity) {
  if (u.steps() == 0) throw DataError("mean_cfl: empty series");
  GridConfig g;
  g.n_modes = std::max(2, u.n_modes());
  g.viscosity = viscosity;
  PhysicalGrid grid(g);
  double total = 0.0;
  for (std::size_t n = 0; n < u.steps(); ++n) total += grid.sup_abs(u.at(n));
  return total / static_cast<double>(u.steps()) * dt_eval / g.dx();
}

namespace {

RunStatistics describe(std::span<const ModeSeries> series, int K, double delta, double tau_max,
                       double viscosity) {
  RunStatistics s;
  s.spectrum = energy_spectrum(series, K);
  s.n_samples = s.spectrum.n_samples;
  for (int k = 1; k <= K; ++k) {
    s.pdfs.push_back(marginal_pdf(series, k));
    s.acfs.push_back(acf(series, k, delta, tau_max));
  }
  double cfl = 0.0;
  std::size_t rows = 0;
  for (const auto& u : series) {
    cfl += mean_cfl_series(u, delta, viscosity) * static_cast<double>(u.steps());
    rows += u.steps();
  }
  s.mean_cfl = cfl / static_cast<double>(rows);
  return s;
}

void compare(RunStatistics& model, const RunStatistics& truth) {
  model.spectrum_error = relative_spectrum_error(model.spectrum, truth.spectrum);
  model.ks.clear();
  model.acf_error.clear();
  for (std::size_t i = 0; i < truth.pdfs.size(); ++i) {
    model.ks.push_back(ks_statistic(model.pdfs[i], truth.pdfs[i]));
    model.acf_error.push_back(acf_relative_error(model.acfs[i], truth.acfs[i]));
  }
}

RunStatistics simulate_and_describe(const NarModel& model, const LagWindow& window,
                                    const ForceConfig& force, const ValidationOptions& opts,
                                    std::uint64_t seed, const RunStatistics& truth) {
  const NarSpec& spec = model.spec;
  Rng rng(seed);
  const NarRun run = simulate_nar(model, window, steps_for(opts.T_sim, spec.delta),
                                  NarForcing::white_noise(force.sigma, force.k0), rng);
  if (!run.stable()) {
    RunStatistics s;
    s.stable = false;
    s.blow_up_time = static_cast<double>(*run.blow_up_step) * spec.delta;
    return s;
  }
  const std::span<const ModeSeries> one(&run.u, 1);
  RunStatistics s = describe(one, spec.K, spec.delta, opts.tau_max, spec.viscosity);
  compare(s, truth);
  return s;
}

}  // namespace

ValidationReport validate_model(const NarModel& model, const TrajectoryDataset& reference,
                                const ValidationOptions& opts) {
  model.validate();
  reference.validate();
  const NarSpec& spec = model.spec;
  if (reference.meta.K < spec.K) {
    throw DataError("validate: reference data holds fewer than K modes",
                    DataFault::kDimensionMismatch);
  }
  if (!(opts.T_sim > 0.0)) throw ConfigError("validate: T_sim must be > 0");
  const TrajectoryDataset ref =
      reference.meta.K > spec.K ? truncate_modes(reference, spec.K) : reference;

  ValidationReport rep;
  rep.K = spec.K;
  rep.p = spec.p;
  rep.delta = spec.delta;
  rep.gap = static_cast<int>(std::llround(spec.delta / ref.meta.dt));
  rep.truth = describe(ref.u, spec.K, ref.meta.delta, opts.tau_max, spec.viscosity);

  const bool same_stride = std::abs(ref.meta.delta - spec.delta) <= 1e-12 * spec.delta;
  LagWindow window;
  if (same_stride && ref.u[0].steps() >= static_cast<std::size_t>(spec.p)) {
    window = window_from_data(ref.u[0], ref.f[0], static_cast<std::size_t>(spec.p), spec.p);
  } else {
    window = warm_start_window(spec, ref.u[0].at(0));
  }
  const ForceConfig& force = ref.meta.full_model.force;
  rep.nar = simulate_and_describe(model, window, force, opts, opts.seed, rep.truth);
  if (opts.galerkin_baseline) {
    rep.galerkin = simulate_and_describe(NarModel::zero(spec), window, force, opts,
                                         split_seed(opts.seed, kGalerkinStream), rep.truth);
  }
  return rep;
}

json to_json(const RunStatistics& s) {
  json j{{"stable", s.stable}, {"blow_up_time", nullable(s.blow_up_time)}};
  if (!s.stable) return j;
  j["n_samples"] = s.n_samples;
  j["energy_spectrum"] = s.spectrum.mean;
  j["mean_cfl"] = s.mean_cfl;
  if (!s.spectrum_error.empty()) {
    j["spectrum_relative_error"] = finite_list(s.spectrum_error);
    j["ks"] = s.ks;
    j["acf_relative_error"] = finite_list(s.acf_error);
    j["max_spectrum_relative_error"] = finite_or_null(max_of(s.spectrum_error));
    j["max_ks"] = max_of(s.ks);
    j["max_acf_relative_error"] = finite_or_null(max_of(s.acf_error));
  }
  return j;
}

json to_json(const ValidationReport& r) {
  json j{{"K", r.K},
         {"gap", r.gap},
         {"p", r.p},
         {"delta", r.delta},
         {"truth", to_json(r.truth)},
         {"nar", to_json(r.nar)}};
  j["galerkin"] = r.galerkin ? to_json(*r.galerkin) : json(nullptr);
  return j;
}

std::vector<fs::path> write_validation(const ValidationReport& r, const fs::path& dir) {
  prepare_output(dir);
  std::vector<fs::path> out;
  auto emit = [&](const RunStatistics& s, const std::string& name) {
    if (!s.stable) return;
    const fs::path spec = dir / (name + "_spectrum.csv");
    const fs::path pdf = dir / (name + "_pdf.csv");
    const fs::path acfp = dir / (name + "_acf.csv");
    write_spectrum_csv(s.spectrum, spec);
    write_pdf_csv(s.pdfs, pdf);
    write_acf_csv(s.acfs, acfp);
    out.insert(out.end(), {spec, pdf, acfp});
  };
  emit(r.truth, "truth");
  emit(r.nar, "nar");
  if (r.galerkin) emit(*r.galerkin, "galerkin");
  write_json(to_json(r), dir / "report.json");
  out.push_back(dir / "report.json");
  return out;
}

NarModel load_model(const fs::path& path) {
  const json j = read_json(path);
  try {
    return nar_model_from_json(j.contains("model") ? j.at("model") : j);
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": " + e.what(), DataFault::kCorruptHeader);
  }
}

void save_model(const NarModel& model, const fs::path& path) {
  write_json(to_json(model), path);
}

json cmd_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  IntegratorConfig fc = cfg.full;
  fc.force.sigma = cfg.sigma();
  const int N = fc.grid.n_modes;
  const int keep = std::min(cfg.save_modes, N);
  Rng rng(split_seed(fc.force.seed, kSimulateStream));

  SpectralField init = reference_initial_condition(fc.grid);
  const int burn_steps = steps_for(cfg.sim_burn_in, fc.dt);
  if (burn_steps > 0) {
    IntegrateOptions bo;
    bo.save_every = burn_steps;
    const Trajectory burn = integrate(init, burn_steps, fc, N, bo, rng);
    if (burn.blow_up_step) throw IntegrationError("simulate: burn-in blew up");
    init = burn.states.back();
  }

  const int intervals = steps_for(cfg.sim_T, fc.dt) / cfg.save_every;
  IntegrateOptions opts;
  opts.save_every = cfg.save_every;
  opts.save_modes = keep;
  opts.retain_forces = true;
  const Trajectory traj =
      integrate(init, static_cast<std::int64_t>(intervals) * cfg.save_every, fc, N, opts, rng);
  if (traj.blow_up_step) {
    throw IntegrationError("simulate: full model blew up at step " +
                           std::to_string(*traj.blow_up_step));
  }

  TrajectoryDataset ds;
  ds.meta.K = keep;
  ds.meta.gap = cfg.save_every;
  ds.meta.dt = fc.dt;
  ds.meta.delta = cfg.save_every * fc.dt;
  ds.meta.n_traj = 1;
  ds.meta.n_steps = intervals;
  ds.meta.full_model = fc;
  ds.meta.seed = fc.force.seed;
  ModeSeries u(keep, 0), f(keep, 0);
  for (const auto& s : traj.states) u.push_back(s.modes);
  ModeVector row(static_cast<std::size_t>(keep));
  for (const auto& inc : traj.forces) {
    std::fill(row.begin(), row.end(), cplx{});
    std::copy_n(inc.modes.begin(), std::min(row.size(), inc.modes.size()), row.begin());
    f.push_back(row);
  }
  ds.u.push_back(std::move(u));
  ds.f.push_back(std::move(f));
  save(ds, cfg.output_dir / "trajectory.bnar");

  const double cfl = mean_cfl(traj, fc.grid, fc.dt);
  json summary{{"command", "simulate"},
               {"sigma", fc.force.sigma},
               {"dt", fc.dt},
               {"n_modes", N},
               {"n_steps", static_cast<std::int64_t>(intervals) * cfg.save_every},
               {"save_every", cfg.save_every},
               {"n_saved", traj.states.size()},
               {"mean_cfl", cfl}};
  write_json(summary, cfg.output_dir / "cfl.json");
  write_manifest(cfg, "simulate", {"trajectory.bnar", "cfl.json"});
  return summary;
}

json cmd_gen_data(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  const StudyData data = make_study_data(cfg, cfg.sigma());
  std::vector<std::string> outputs;
  json sets = json::array();
  for (int K : cfg.K) {
    for (int gap : cfg.gaps) {
      const std::string name = tag(K, gap);
      const TrajectoryDataset train = restrict_dataset(data.train, K, gap);
      const TrajectoryDataset ref = restrict_dataset(data.reference, K, gap);
      save(train, cfg.output_dir / ("data_" + name + ".bnar"));
      save(ref, cfg.output_dir / ("val_" + name + ".bnar"));
      outputs.push_back("data_" + name + ".bnar");
      outputs.push_back("val_" + name + ".bnar");
      sets.push_back({{"K", K},
                      {"gap", gap},
                      {"delta", train.meta.delta},
                      {"train_shape", {train.meta.n_traj, train.meta.n_steps + 1, K}},
                      {"validation_shape", {ref.meta.n_traj, ref.meta.n_steps + 1, K}}});
    }
  }
  json summary{{"command", "gen-data"}, {"sigma", cfg.sigma()}, {"datasets", sets}};
  write_manifest(cfg, "gen-data", outputs);
  return summary;
}

json cmd_fit(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  std::optional<TrajectoryDataset> given;
  if (!cfg.dataset.empty()) given = load(cfg.dataset);

  std::vector<std::string> outputs;
  json fits = json::array();
  for (int K : cfg.K) {
    for (int gap : cfg.gaps) {
      TrajectoryDataset ds = given ? restrict_dataset(*given, K, gap)
                                   : load(cfg.output_dir / ("data_" + tag(K, gap) + ".bnar"));
      if (ds.meta.K != K || ds.meta.gap != gap) {
        throw DataError("fit: dataset does not hold K = " + std::to_string(K) + ", gap = " +
                            std::to_string(gap),
                        DataFault::kDimensionMismatch);
      }
      for (int p : cfg.lags) {
        NarSpec spec = make_spec(cfg, K, gap, p);
        spec.delta = ds.meta.delta;
        spec.viscosity = ds.meta.full_model.grid.viscosity;
        const FitReport rep = fit(ds, spec, cfg.ridge);
        const std::string name = tag(K, gap, p);
        save_model(rep.model, cfg.output_dir / ("model_" + name + ".json"));
        write_json(to_json(rep), cfg.output_dir / ("fit_" + name + ".json"));
        outputs.push_back("model_" + name + ".json");
        outputs.push_back("fit_" + name + ".json");
        if (!cfg.consistency.empty()) {
          std::vector<std::pair<int, int>> sizes;
          for (const auto& [M, T] : cfg.consistency) sizes.emplace_back(M, steps_for(T, ds.meta.delta));
          const ConsistencyTable table = consistency_study(ds, spec, sizes, cfg.ridge);
          write_consistency_csv(table, cfg.output_dir / ("consistency_" + name + ".csv"));
          outputs.push_back("consistency_" + name + ".csv");
        }
        int n_dropped = 0;
        for (const auto& row : rep.dropped) {
          n_dropped += static_cast<int>(std::count(row.begin(), row.end(), true));
        }
        fits.push_back({{"K", K},
                        {"gap", gap},
                        {"p", p},
                        {"n_samples", rep.n_samples},
                        {"sigma_g", rep.model.sigma_g},
                        {"condition", finite_list(rep.condition)},
                        {"dropped_columns", n_dropped}});
      }
    }
  }
  json summary{{"command", "fit"}, {"fits", fits}};
  write_manifest(cfg, "fit", outputs);
  return summary;
}

json cmd_validate(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  ValidationOptions opts;
  opts.T_sim = cfg.T_sim;
  opts.tau_max = cfg.tau_max;
  opts.seed = cfg.val_seed;
  opts.galerkin_baseline = cfg.galerkin_baseline;

  struct Job {
    fs::path model, reference;
  };
  std::vector<Job> jobs;
  if (!cfg.model.empty()) {
    fs::path ref = cfg.reference;
    if (ref.empty()) {
      const NarModel m = load_model(cfg.model);
      const int gap = static_cast<int>(std::llround(m.spec.delta / cfg.full.dt));
      ref = cfg.output_dir / ("val_" + tag(m.spec.K, gap) + ".bnar");
    }
    jobs.push_back({cfg.model, ref});
  } else {
    for (int K : cfg.K) {
      for (int gap : cfg.gaps) {
        for (int p : cfg.lags) {
          jobs.push_back({cfg.output_dir / ("model_" + tag(K, gap, p) + ".json"),
                          cfg.reference.empty() ? cfg.output_dir / ("val_" + tag(K, gap) + ".bnar")
                                                : cfg.reference});
        }
      }
    }
  }

  std::vector<std::string> outputs;
  json reports = json::array();
  for (const auto& job : jobs) {
    const NarModel model = load_model(job.model);
    TrajectoryDataset ref = load(job.reference);
    const int gap = static_cast<int>(std::llround(model.spec.delta / ref.meta.dt));
    if (ref.meta.gap != gap && gap % ref.meta.gap == 0) {
      ref = restrict_dataset(ref, ref.meta.K, gap);
    }
    const ValidationReport rep = validate_model(model, ref, opts);
    const std::string name = "validation_" + tag(rep.K, rep.gap, rep.p);
    for (const auto& p : write_validation(rep, cfg.output_dir / name)) {
      outputs.push_back(fs::relative(p, cfg.output_dir).generic_string());
    }
    json brief{{"K", rep.K},
               {"gap", rep.gap},
               {"p", rep.p},
               {"stable", rep.nar.stable},
               {"blow_up_time", nullable(rep.nar.blow_up_time)}};
    if (rep.nar.stable) {
      brief["max_spectrum_relative_error"] = finite_or_null(max_of(rep.nar.spectrum_error));
      brief["max_ks"] = max_of(rep.nar.ks);
      brief["max_acf_relative_error"] = finite_or_null(max_of(rep.nar.acf_error));
    }
    reports.push_back(brief);
  }
  json summary{{"command", "validate"}, {"reports", reports}};
  write_manifest(cfg, "validate", outputs);
  return summary;
}

json cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  ValidationOptions opts;
  opts.T_sim = cfg.T_sim;
  opts.tau_max = cfg.tau_max;
  opts.seed = cfg.val_seed;
  opts.galerkin_baseline = true;

  struct Row {
    double sigma;
    int K, gap, p;
    double delta;
    ValidationReport report;
  };
  std::vector<Row> rows;
  std::vector<std::string> outputs;
  json full_cfl = json::object();

  for (double sigma : cfg.sigmas) {
    const StudyData data = make_study_data(cfg, sigma);

    IntegratorConfig fc = cfg.full;
    fc.force.sigma = sigma;
    Rng rng(split_seed(cfg.val_seed, kSimulateStream));
    SpectralField init = reference_initial_condition(fc.grid);
    const int burn = steps_for(cfg.sim_burn_in, fc.dt);
    if (burn > 0) {
      IntegrateOptions bo;
      bo.save_every = burn;
      const Trajectory t = integrate(init, burn, fc, fc.grid.n_modes, bo, rng);
      if (t.blow_up_step) throw IntegrationError("sweep: CFL burn-in blew up");
      init = t.states.back();
    }
    IntegrateOptions co;
    co.save_every = cfg.save_every;
    co.save_modes = 1;
    const int cfl_steps = steps_for(cfg.sim_T, fc.dt) / cfg.save_every * cfg.save_every;
    const Trajectory cfl_run = integrate(init, cfl_steps, fc, fc.grid.n_modes, co, rng);
    if (cfl_run.blow_up_step) throw IntegrationError("sweep: full model blew up");
    const double cfl = mean_cfl(cfl_run, fc.grid, fc.dt);
    full_cfl[sigma_tag(sigma)] = cfl;

    struct Combo {
      int K, gap, p;
    };
    std::vector<Combo> combos;
    for (int K : cfg.K) {
      for (int gap : cfg.gaps) {
        for (int p : cfg.lags) combos.push_back({K, gap, p});
      }
    }
    std::vector<Row> local(combos.size());
    parallel_for(combos.size(), [&](std::size_t i) {
      const auto [K, gap, p] = combos[i];
      const TrajectoryDataset train = restrict_dataset(data.train, K, gap);
      const TrajectoryDataset ref = restrict_dataset(data.reference, K, gap);
      NarSpec spec = make_spec(cfg, K, gap, p);
      spec.delta = train.meta.delta;
      const FitReport fit_rep = fit(train, spec, cfg.ridge);
      ValidationReport rep = validate_model(fit_rep.model, ref, opts);
      const fs::path dir = cfg.output_dir / (sigma_tag(sigma) + "_" + tag(K, gap, p));
      write_validation(rep, dir);
      save_model(fit_rep.model, dir / "model.json");
      write_json(to_json(fit_rep), dir / "fit.json");
      local[i] = {sigma, K, gap, p, spec.delta, std::move(rep)};
    });
    for (auto& r : local) {
      const std::string dir = sigma_tag(r.sigma) + "_" + tag(r.K, r.gap, r.p);
      for (const char* f : {"model.json", "fit.json", "report.json"}) outputs.push_back(dir + "/" + f);
      rows.push_back(std::move(r));
    }
  }

  // Summary table.
  const fs::path summary_csv = cfg.output_dir / "summary.csv";
  {
    std::ofstream os(summary_csv);
    if (!os) throw DataError("cannot open " + summary_csv.string() + " for writing");
    os << "sigma,K,gap,p,delta,stable,blow_up_time,max_spectrum_error,max_ks,max_acf_error,"
          "galerkin_stable,galerkin_cfl,galerkin_max_spectrum_error\n";
    os.precision(10);
    auto num = [&](double v) {
      if (std::isfinite(v)) os << v;
    };
    for (const auto& r : rows) {
      const auto& n = r.report.nar;
      const auto& g = *r.report.galerkin;
      os << r.sigma << ',' << r.K << ',' << r.gap << ',' << r.p << ',' << r.delta << ','
         << (n.stable ? 1 : 0) << ',';
      if (n.blow_up_time) num(*n.blow_up_time);
      os << ',';
      if (n.stable) {
        num(max_of(n.spectrum_error));
        os << ',';
        num(max_of(n.ks));
        os << ',';
        num(max_of(n.acf_error));
      } else {
        os << ",,";
      }
      os << ',' << (g.stable ? 1 : 0) << ',';
      if (g.stable) {
        num(g.mean_cfl);
        os << ',';
        num(max_of(g.spectrum_error));
      } else {
        os << ',';
      }
      os << '\n';
    }
  }
  outputs.push_back("summary.csv");

  // Per (sigma, K, p): gap of least spectrum error and gap whose Galerkin
  // CFL is closest to the full model's.
  json best = json::array();
  std::set<std::tuple<double, int, int>> groups;
  for (const auto& r : rows) groups.insert({r.sigma, r.K, r.p});
  for (const auto& [sigma, K, p] : groups) {
    int best_gap = 0, cfl_gap = 0, max_stable_gap = 0;
    double best_err = std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    const double target = full_cfl[sigma_tag(sigma)].get<double>();
    for (const auto& r : rows) {
      if (r.sigma != sigma || r.K != K || r.p != p) continue;
      if (r.report.nar.stable) {
        max_stable_gap = std::max(max_stable_gap, r.gap);
        const double e = max_of(r.report.nar.spectrum_error);
        if (e < best_err) {
          best_err = e;
          best_gap = r.gap;
        }
      }
      if (r.report.galerkin->stable) {
        const double d = std::abs(r.report.galerkin->mean_cfl - target);
        if (d < best_dist) {
          best_dist = d;
          cfl_gap = r.gap;
        }
      }
    }
    best.push_back({{"sigma", sigma},
                    {"K", K},
                    {"p", p},
                    {"min_error_gap", best_gap ? json(best_gap) : json(nullptr)},
                    {"min_max_spectrum_error", finite_or_null(best_err)},
                    {"cfl_matching_gap", cfl_gap ? json(cfl_gap) : json(nullptr)},
                    {"max_stable_gap", max_stable_gap ? json(max_stable_gap) : json(nullptr)}});
  }

  const fs::path cfl_csv = cfg.output_dir / "cfl.csv";
  {
    std::ofstream os(cfl_csv);
    if (!os) throw DataError("cannot open " + cfl_csv.string() + " for writing");
    os << "sigma,K,gap,delta,galerkin_cfl,full_cfl\n";
    os.precision(10);
    std::set<std::tuple<double, int, int>> seen;
    for (const auto& r : rows) {
      if (!seen.insert({r.sigma, r.K, r.gap}).second) continue;
      os << r.sigma << ',' << r.K << ',' << r.gap << ',' << r.delta << ',';
      if (r.report.galerkin->stable) os << r.report.galerkin->mean_cfl;
      os << ',' << full_cfl[sigma_tag(r.sigma)].get<double>() << '\n';
    }
  }
  outputs.push_back("cfl.csv");

  json table = json::array();
  for (const auto& r : rows) {
    json e{{"sigma", r.sigma},
           {"K", r.K},
           {"gap", r.gap},
           {"p", r.p},
           {"delta", r.delta},
           {"stable", r.report.nar.stable},
           {"blow_up_time", nullable(r.report.nar.blow_up_time)},
           {"galerkin_stable", r.report.galerkin->stable}};
    if (r.report.nar.stable) {
      e["max_spectrum_relative_error"] = finite_or_null(max_of(r.report.nar.spectrum_error));
      e["max_ks"] = max_of(r.report.nar.ks);
      e["max_acf_relative_error"] = finite_or_null(max_of(r.report.nar.acf_error));
    }
    if (r.report.galerkin->stable) e["galerkin_cfl"] = r.report.galerkin->mean_cfl;
    table.push_back(e);
  }
  json summary{{"command", "sweep"}, {"full_cfl", full_cfl}, {"rows", table}, {"best", best}};
  write_json(summary, cfg.output_dir / "summary.json");
  outputs.push_back("summary.json");
  write_manifest(cfg, "sweep", outputs);
  return summary;
}

}  // namespace bnar
