#include "bnar/json_io.hpp"

#include "bnar/error.hpp"

namespace bnar {

using nlohmann::json;

void to_json(json& j, const GridConfig& g) {
  j = json{{"n_modes", g.n_modes}, {"viscosity", g.viscosity}};
}

void from_json(const json& j, GridConfig& g) {
  g.n_modes = optional<int>(j, "n_modes", g.n_modes);
  g.viscosity = optional<double>(j, "viscosity", g.viscosity);
}

void to_json(json& j, const ForceConfig& f) {
  j = json{{"sigma", f.sigma}, {"k0", f.k0}, {"seed", f.seed}};
}

void from_json(const json& j, ForceConfig& f) {
  f.sigma = optional<double>(j, "sigma", f.sigma);
  f.k0 = optional<int>(j, "k0", f.k0);
  f.seed = optional<std::uint64_t>(j, "seed", f.seed);
}

void to_json(json& j, const IntegratorConfig& c) {
  j = json{{"n_modes", c.grid.n_modes},
           {"viscosity", c.grid.viscosity},
           {"dt", c.dt},
           {"sigma", c.force.sigma},
           {"k0", c.force.k0},
           {"seed", c.force.seed},
           {"etd_contour_points", c.etd_contour_points}};
}

void from_json(const json& j, IntegratorConfig& c) {
  from_json(j, c.grid);
  from_json(j, c.force);
  c.dt = optional<double>(j, "dt", c.dt);
  c.etd_contour_points = optional<int>(j, "etd_contour_points", c.etd_contour_points);
}

json complex_array(std::span<const cplx> v) {
  json arr = json::array();
  for (const auto& z : v) arr.push_back(json::array({z.real(), z.imag()}));
  return arr;
}

ModeVector parse_complex_array(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of [re, im] pairs");
  ModeVector out;
  out.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ConfigError("expected an [re, im] pair");
    }
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

}  // namespace bnar
