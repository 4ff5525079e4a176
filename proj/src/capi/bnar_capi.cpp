#include "bnar/bnar.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "bnar/dataset.hpp"
#include "bnar/error.hpp"
#include "bnar/estimate.hpp"
#include "bnar/experiment.hpp"
#include "bnar/nar.hpp"

struct bnar_dataset {
  bnar::TrajectoryDataset ds;
};

struct bnar_model {
  bnar::NarModel model;
};

namespace {

thread_local std::string last_error;

bnar_status fail(bnar_status s, const std::string& what) {
  last_error = what;
  return s;
}

template <typename Fn>
bnar_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return BNAR_OK;
  } catch (const bnar::Error& e) {
    return fail(static_cast<bnar_status>(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(BNAR_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(BNAR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BNAR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BNAR_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) throw bnar::ConfigError(what);
}

}  // namespace

extern "C" {

const char* bnar_version(void) { return bnar::kVersion; }

const char* bnar_last_error(void) { return last_error.c_str(); }

void bnar_string_free(char* s) { std::free(s); }

bnar_status bnar_run(const char* command, const char* config_json, char** summary_json) {
  return guarded([&] {
    require(command != nullptr, "command is null");
    const auto j = nlohmann::json::parse(config_json ? config_json : "{}");
    const bnar::ExperimentConfig cfg = bnar::parse_experiment(j);
    const std::string cmd = command;
    nlohmann::json summary;
    if (cmd == "simulate") {
      summary = bnar::cmd_simulate(cfg);
    } else if (cmd == "gen-data") {
      summary = bnar::cmd_gen_data(cfg);
    } else if (cmd == "fit") {
      summary = bnar::cmd_fit(cfg);
    } else if (cmd == "validate") {
      summary = bnar::cmd_validate(cfg);
    } else if (cmd == "sweep") {
      summary = bnar::cmd_sweep(cfg);
    } else {
      throw bnar::ConfigError("unknown command '" + cmd + "'");
    }
    if (summary_json != nullptr) *summary_json = dup_string(summary.dump(2));
  });
}

bnar_status bnar_resolve_config(const char* config_json, char** resolved_json) {
  return guarded([&] {
    require(resolved_json != nullptr, "output pointer is null");
    const auto j = nlohmann::json::parse(config_json ? config_json : "{}");
    *resolved_json = dup_string(bnar::to_json(bnar::parse_experiment(j)).dump(2));
  });
}

bnar_status bnar_dataset_load(const char* path, bnar_dataset** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new bnar_dataset{bnar::load(path)};
  });
}

bnar_status bnar_dataset_save(const bnar_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds != nullptr && path != nullptr, "null argument");
    bnar::save(ds->ds, path);
  });
}

void bnar_dataset_free(bnar_dataset* ds) { delete ds; }

bnar_status bnar_dataset_dims(const bnar_dataset* ds, int* K, int* n_traj, int* n_steps,
                              int* gap, double* delta) {
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    const auto& m = ds->ds.meta;
    if (K) *K = m.K;
    if (n_traj) *n_traj = m.n_traj;
    if (n_steps) *n_steps = m.n_steps;
    if (gap) *gap = m.gap;
    if (delta) *delta = m.delta;
  });
}

bnar_status bnar_dataset_state(const bnar_dataset* ds, int m, int n, double* out) {
  return guarded([&] {
    require(ds != nullptr && out != nullptr, "null argument");
    const auto& d = ds->ds;
    require(m >= 0 && m < d.meta.n_traj, "trajectory index out of range");
    require(n >= 0 && n <= d.meta.n_steps, "step index out of range");
    const auto row = d.u[static_cast<std::size_t>(m)].at(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < row.size(); ++k) {
      out[2 * k] = row[k].real();
      out[2 * k + 1] = row[k].imag();
    }
  });
}

bnar_status bnar_dataset_export_csv(const bnar_dataset* ds, int m, const char* path) {
  return guarded([&] {
    require(ds != nullptr && path != nullptr, "null argument");
    bnar::export_csv(ds->ds, m, path);
  });
}

bnar_status bnar_fit(const bnar_dataset* ds, int p, double ridge, bnar_model** out,
                     char** report_json) {
  return guarded([&] {
    require(ds != nullptr && out != nullptr, "null argument");
    const auto& meta = ds->ds.meta;
    bnar::NarSpec spec = bnar::NarSpec::make(meta.K, p, meta.delta, meta.full_model.grid.viscosity);
    spec.etd_contour_points = meta.full_model.etd_contour_points;
    const bnar::FitReport rep = bnar::fit(ds->ds, spec, ridge);
    char* report = report_json ? dup_string(bnar::to_json(rep).dump(2)) : nullptr;
    *out = new bnar_model{rep.model};
    if (report_json) *report_json = report;
  });
}

bnar_status bnar_model_load(const char* path, bnar_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new bnar_model{bnar::load_model(path)};
  });
}

bnar_status bnar_model_save(const bnar_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "null argument");
    bnar::save_model(model->model, path);
  });
}

bnar_status bnar_model_to_json(const bnar_model* model, char** json) {
  return guarded([&] {
    require(model != nullptr && json != nullptr, "null argument");
    *json = dup_string(bnar::to_json(model->model).dump(2));
  });
}

void bnar_model_free(bnar_model* model) { delete model; }

bnar_status bnar_model_simulate(const bnar_model* model, const bnar_dataset* ds, int m,
                                int64_t n_steps, double sigma, int k0, uint64_t seed, double* out,
                                int64_t* blow_up_step) {
  return guarded([&] {
    require(model != nullptr && ds != nullptr && out != nullptr, "null argument");
    require(n_steps >= 0, "n_steps must be >= 0");
    const auto& d = ds->ds;
    const auto& spec = model->model.spec;
    require(m >= 0 && m < d.meta.n_traj, "trajectory index out of range");
    require(d.meta.K >= spec.K, "dataset holds fewer than K modes");
    const bnar::TrajectoryDataset low = d.meta.K > spec.K ? bnar::truncate_modes(d, spec.K) : d;
    const auto mi = static_cast<std::size_t>(m);
    const bnar::LagWindow window =
        bnar::window_from_data(low.u[mi], low.f[mi], static_cast<std::size_t>(spec.p), spec.p);
    bnar::Rng rng(seed);
    const bnar::NarRun run = bnar::simulate_nar(model->model, window, n_steps,
                                                bnar::NarForcing::white_noise(sigma, k0), rng);
    const std::size_t total = static_cast<std::size_t>(n_steps + 1) * 2 * static_cast<std::size_t>(spec.K);
    std::fill(out, out + total, 0.0);
    const auto& raw = run.u.raw();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      out[2 * i] = raw[i].real();
      out[2 * i + 1] = raw[i].imag();
    }
    if (blow_up_step) *blow_up_step = run.blow_up_step.value_or(-1);
  });
}

}  // extern "C"
