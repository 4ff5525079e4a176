// bnar: command-line front end over the C API.
//
//   bnar <simulate|gen-data|fit|validate|sweep> [--config FILE] [overrides]
//
// Flags override fields of the JSON configuration; --set a.b=value reaches
// any field. Exit status: 0 success, 2 config error, 3 data error,
// 4 numerical blow-up.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bnar/bnar.h"

using nlohmann::json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out, scale, dataset, model, reference;
  std::vector<double> sigma;
  std::vector<int> K, gaps, lags;
  std::optional<std::uint64_t> seed;
  std::optional<double> T, T_sim;
  std::vector<std::string> set;
};

void add_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON configuration file");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("--scale", o.scale, "preset: quick or paper")
      ->check(CLI::IsMember({"quick", "paper"}));
  cmd->add_option("--sigma", o.sigma, "force scale(s)")->delimiter(',');
  cmd->add_option("--K", o.K, "resolved mode count(s)")->delimiter(',');
  cmd->add_option("--gap", o.gaps, "observation gap(s) in fine steps")->delimiter(',');
  cmd->add_option("--p", o.lags, "NAR lag(s)")->delimiter(',');
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--T", o.T, "training data length (time units)");
  cmd->add_option("--T-sim", o.T_sim, "reduced-model simulation length (time units)");
  cmd->add_option("--dataset", o.dataset, "input dataset (.bnar)");
  cmd->add_option("--model", o.model, "input model (.json)");
  cmd->add_option("--reference", o.reference, "reference dataset (.bnar)");
  cmd->add_option("--set", o.set, "override key.path=value (value parsed as JSON if possible)");
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

template <typename T>
json scalar_or_array(const std::vector<T>& v) {
  return v.size() == 1 ? json(v.front()) : json(v);
}

json build_config(const Overrides& o) {
  json cfg = json::object();
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw std::runtime_error("cannot open config file " + o.config_path);
    cfg = json::parse(is);
  }
  if (o.out) cfg["output_dir"] = *o.out;
  if (o.scale) cfg["scale"] = *o.scale;
  if (!o.sigma.empty()) cfg["full_model"]["sigma"] = scalar_or_array(o.sigma);
  if (o.seed) cfg["full_model"]["seed"] = *o.seed;
  if (!o.K.empty()) cfg["reduction"]["K"] = scalar_or_array(o.K);
  if (!o.gaps.empty()) cfg["reduction"]["gaps"] = scalar_or_array(o.gaps);
  if (!o.lags.empty()) cfg["reduction"]["lags"] = scalar_or_array(o.lags);
  if (o.T) cfg["data"]["T"] = *o.T;
  if (o.T_sim) cfg["validation"]["T_sim"] = *o.T_sim;
  if (o.dataset) cfg["inputs"]["dataset"] = *o.dataset;
  if (o.model) cfg["inputs"]["model"] = *o.model;
  if (o.reference) cfg["inputs"]["reference"] = *o.reference;
  for (const auto& item : o.set) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::runtime_error("--set expects key.path=value, got '" + item + "'");
    }
    json* node = &cfg;
    std::string path = item.substr(0, eq);
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (dot == std::string::npos) {
        (*node)[key] = parse_value(item.substr(eq + 1));
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Burgers closure models: simulate, generate data, fit, validate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bnar_version());

  Overrides o;
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "run the full model and report its mean CFL number"},
      {"gen-data", "generate training and validation datasets"},
      {"fit", "fit NAR models by least squares"},
      {"validate", "simulate fitted models and compare statistics with reference data"},
      {"sweep", "fit and validate over (sigma, K, gap, p) with a CFL comparison"}};
  for (const auto& [name, help] : commands) add_options(app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string config;
  try {
    config = build_config(o).dump();
  } catch (const std::exception& e) {
    std::cerr << "bnar: " << e.what() << '\n';
    return 2;
  }

  if (print_config) {
    char* resolved = nullptr;
    const bnar_status s = bnar_resolve_config(config.c_str(), &resolved);
    if (s != BNAR_OK) {
      std::cerr << "bnar: " << bnar_last_error() << '\n';
      return s;
    }
    std::cout << resolved << '\n';
    bnar_string_free(resolved);
    return 0;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  char* summary = nullptr;
  const bnar_status s = bnar_run(command.c_str(), config.c_str(), &summary);
  if (s != BNAR_OK) {
    std::cerr << "bnar " << command << ": " << bnar_last_error() << '\n';
    return s;
  }
  std::cout << summary << '\n';
  bnar_string_free(summary);
  return 0;
}
