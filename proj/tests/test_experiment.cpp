#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bnar/error.hpp"
#include "bnar/experiment.hpp"

using namespace bnar;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny(const fs::path& out) {
  return json{{"full_model", {{"n_modes", 32}, {"dt", 0.002}, {"sigma", 1.0}, {"seed", 3}}},
              {"reduction", {{"K", 2}, {"gaps", {5}}, {"lags", 1}}},
              {"data", {{"T", 10.0}, {"burn_in", 2.0}, {"ensemble_size", 3}, {"n_traj", 2}}},
              {"validation", {{"T", 10.0}, {"T_sim", 10.0}, {"tau_max", 1.0}}},
              {"simulate", {{"T", 1.0}, {"burn_in", 0.5}, {"save_every", 5}, {"save_modes", 8}}},
              {"output_dir", out.string()}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bnar_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void expect_config_error(json j) { CHECK_THROWS_AS(parse_experiment(j), ConfigError); }

}  // namespace

TEST_CASE("defaults and presets") {
  const auto q = parse_experiment(json::object());
  CHECK(q.full.grid.n_modes == 128);
  CHECK(q.full.grid.viscosity == 0.02);
  CHECK(q.full.dt == 0.001);
  CHECK(q.full.force.k0 == 4);
  CHECK(q.K == std::vector<int>{8});
  CHECK(q.val_seed == q.data_seed + 1);
  const auto p = parse_experiment(json{{"scale", "paper"}});
  CHECK(p.T == 2000.0);
  CHECK(p.burn_in == 1.0e4);
  CHECK(p.ensemble_size == 1000);
  const auto lists = parse_experiment(json{{"full_model", {{"sigma", {1.0, 0.2}}}},
                                           {"reduction", {{"gaps", {5, 10}}, {"lags", {1, 2}}}}});
  CHECK(lists.sigmas == std::vector<double>{1.0, 0.2});
  CHECK(lists.gaps == std::vector<int>{5, 10});
  CHECK_THROWS_AS(lists.sigma(), ConfigError);
}

TEST_CASE("malformed configurations") {
  expect_config_error(json::array());
  expect_config_error(json{{"bogus", 1}});
  expect_config_error(json{{"scale", "huge"}});
  expect_config_error(json{{"full_model", {{"dt", -1.0}}}});
  expect_config_error(json{{"full_model", {{"dt", "fast"}}}});
  expect_config_error(json{{"full_model", {{"sigma", -0.5}}}});
  expect_config_error(json{{"full_model", {{"typo", 1}}}});
  expect_config_error(json{{"reduction", {{"gaps", json::array()}}}});
  expect_config_error(json{{"reduction", {{"K", 0}}}});
  expect_config_error(json{{"reduction", {{"K", 128}}}});
  expect_config_error(json{{"reduction", {{"lags", {0}}}}});
  expect_config_error(json{{"reduction", {{"terms", "some"}}}});
  expect_config_error(json{{"data", {{"T", 0.0}}}});
  expect_config_error(json{{"fit", {{"consistency", {{0, 10.0}}}}}});
}

TEST_CASE("resolved configuration round trips") {
  const auto c = parse_experiment(tiny("x"));
  const json once = to_json(c);
  CHECK(to_json(parse_experiment(once)) == once);
}

TEST_CASE("helpers") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(steps_for(10.0, 0.005) == 2000);
  CHECK(steps_for(3.0, 0.01) == 300);
  const auto cfg = parse_experiment(tiny("x"));
  const auto spec = make_spec(cfg, 2, 5, 3);
  CHECK(spec.K == 2);
  CHECK(spec.p == 3);
  CHECK(spec.delta == doctest::Approx(0.01));
}

TEST_CASE("mean_cfl_series of a single sine mode") {
  ModeSeries u(2, 0);
  u.push_back(ModeVector{cplx(0.0, -0.5), 0.0});
  const double dx = 2.0 * 3.141592653589793 / 4.0;
  CHECK(mean_cfl_series(u, 0.1, 0.02) == doctest::Approx(0.1 / dx).epsilon(1e-12));
}

TEST_CASE("gen-data, fit, validate pipeline") {
  const auto dir = scratch("pipeline");
  const auto cfg = parse_experiment(tiny(dir));
  const auto g = cmd_gen_data(cfg);
  CHECK(fs::exists(dir / "data_K2_gap5.bnar"));
  CHECK(fs::exists(dir / "val_K2_gap5.bnar"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(g["datasets"][0]["train_shape"] == json{2, 1001, 2});

  const auto f = cmd_fit(cfg);
  CHECK(fs::exists(dir / "model_K2_gap5_p1.json"));
  CHECK(fs::exists(dir / "fit_K2_gap5_p1.json"));
  CHECK(f["fits"][0]["n_samples"] == 2 * (1000 - 1));

  const auto v = cmd_validate(cfg);
  const auto report_dir = dir / "validation_K2_gap5_p1";
  CHECK(fs::exists(report_dir / "report.json"));
  CHECK(v["reports"][0]["stable"] == true);
  const auto report = json::parse(slurp(report_dir / "report.json"));
  CHECK(report["nar"]["energy_spectrum"].size() == 2);
  CHECK(report.contains("galerkin"));

  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["command"] == "validate");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);

  // Fresh rerun reproduces the artifacts byte for byte.
  const std::string model = slurp(dir / "model_K2_gap5_p1.json");
  const std::string rep = slurp(report_dir / "report.json");
  const std::string data = slurp(dir / "data_K2_gap5.bnar");
  fs::remove_all(dir);
  cmd_gen_data(cfg);
  cmd_fit(cfg);
  cmd_validate(cfg);
  CHECK(slurp(dir / "data_K2_gap5.bnar") == data);
  CHECK(slurp(dir / "model_K2_gap5_p1.json") == model);
  CHECK(slurp(report_dir / "report.json") == rep);
  fs::remove_all(dir);
}

TEST_CASE("fit with an explicit dataset and consistency table") {
  const auto dir = scratch("consistency");
  auto j = tiny(dir);
  j["fit"] = {{"consistency", {{1, 5.0}, {2, 10.0}}}};
  const auto cfg = parse_experiment(j);
  cmd_gen_data(cfg);
  auto j2 = j;
  j2["inputs"] = {{"dataset", (dir / "data_K2_gap5.bnar").string()}};
  j2["output_dir"] = (dir / "fit2").string();
  cmd_fit(parse_experiment(j2));
  CHECK(fs::exists(dir / "fit2" / "consistency_K2_gap5_p1.csv"));
  CHECK(fs::exists(dir / "fit2" / "model_K2_gap5_p1.json"));

  auto bad = j;
  bad["inputs"] = {{"dataset", (dir / "missing.bnar").string()}};
  CHECK_THROWS_AS(cmd_fit(parse_experiment(bad)), DataError);
  fs::remove_all(dir);
}

TEST_CASE("simulate writes a trajectory and a CFL report") {
  const auto dir = scratch("simulate");
  const auto s = cmd_simulate(parse_experiment(tiny(dir)));
  CHECK(fs::exists(dir / "trajectory.bnar"));
  CHECK(fs::exists(dir / "cfl.json"));
  CHECK(s["n_saved"] == 101);
  CHECK(s["mean_cfl"].get<double>() > 0.0);
  const auto ds = load(dir / "trajectory.bnar");
  CHECK(ds.meta.K == 8);
  CHECK(ds.meta.n_steps == 100);

  auto zero = tiny(dir / "zero");
  zero["simulate"]["T"] = 0.0;
  const auto z = cmd_simulate(parse_experiment(zero));
  CHECK(z["n_saved"] == 1);
  fs::remove_all(dir);
}

TEST_CASE("sweep over two sigmas and gaps") {
  const auto dir = scratch("sweep");
  auto j = tiny(dir);
  j["full_model"]["sigma"] = {1.0, 0.2};
  j["reduction"]["gaps"] = {5, 10};
  const auto s = cmd_sweep(parse_experiment(j));
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "cfl.csv"));
  CHECK(fs::exists(dir / "sigma1_K2_gap10_p1" / "report.json"));
  std::ifstream is(dir / "summary.csv");
  std::string line;
  int rows = -1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 4);
  CHECK(s.contains("best"));
  fs::remove_all(dir);
}
