#include "bnar/nar.hpp"

#include <cmath>
#include <cstdlib>

#include "bnar/error.hpp"
#include "bnar/json_io.hpp"

namespace bnar {

using nlohmann::json;

TermMask TermMask::defaults(int p) {
  TermMask m;
  const auto n = static_cast<std::size_t>(std::max(p, 0));
  m.state.assign(n, false);
  m.drift.assign(n, false);
  m.force.assign(n, false);
  m.quadratic.assign(n, true);
  if (n > 0) m.state[0] = m.drift[0] = true;
  return m;
}

TermMask TermMask::all(int p) {
  TermMask m;
  const auto n = static_cast<std::size_t>(std::max(p, 0));
  m.state.assign(n, true);
  m.drift.assign(n, true);
  m.force.assign(n, true);
  m.quadratic.assign(n, true);
  return m;
}

std::string FeatureColumn::name() const {
  const char* prefix = "v";
  switch (family) {
    case TermFamily::kState: prefix = "v"; break;
    case TermFamily::kDrift: prefix = "R"; break;
    case TermFamily::kForce: prefix = "f"; break;
    case TermFamily::kQuadratic: prefix = "w"; break;
  }
  return prefix + std::to_string(lag);
}

NarSpec NarSpec::make(int K, int p, double delta, double viscosity) {
  NarSpec s;
  s.K = K;
  s.p = p;
  s.delta = delta;
  s.viscosity = viscosity;
  s.mask = TermMask::defaults(p);
  return s;
}

void NarSpec::validate() const {
  if (K < 1) throw ConfigError("NAR: K must be >= 1");
  if (p < 1) throw ConfigError("NAR: lag p must be >= 1");
  if (!(delta > 0.0)) throw ConfigError("NAR: delta must be > 0");
  if (!(viscosity > 0.0)) throw ConfigError("NAR: viscosity must be > 0");
  if (etd_contour_points < 16) throw ConfigError("NAR: etd_contour_points must be >= 16");
  const auto n = static_cast<std::size_t>(p);
  if (mask.state.size() != n || mask.drift.size() != n || mask.force.size() != n ||
      mask.quadratic.size() != n) {
    throw ConfigError("NAR: term mask must have one flag per lag");
  }
}

std::vector<FeatureColumn> NarSpec::columns() const {
  std::vector<FeatureColumn> cols;
  auto add = [&](const std::vector<bool>& flags, TermFamily fam) {
    for (std::size_t j = 0; j < flags.size(); ++j) {
      if (flags[j]) cols.push_back({fam, static_cast<int>(j + 1)});
    }
  };
  add(mask.state, TermFamily::kState);
  add(mask.drift, TermFamily::kDrift);
  add(mask.force, TermFamily::kForce);
  add(mask.quadratic, TermFamily::kQuadratic);
  return cols;
}

NarModel NarModel::zero(const NarSpec& spec) {
  spec.validate();
  NarModel m;
  m.spec = spec;
  m.theta.assign(static_cast<std::size_t>(spec.K),
                 ModeVector(static_cast<std::size_t>(spec.n_features())));
  m.sigma_g.assign(static_cast<std::size_t>(spec.K), 0.0);
  return m;
}

void NarModel::validate() const {
  spec.validate();
  const auto K = static_cast<std::size_t>(spec.K);
  const auto c = static_cast<std::size_t>(spec.n_features());
  if (theta.size() != K || sigma_g.size() != K) {
    throw ConfigError("NAR model: theta / sigma_g must have K entries");
  }
  for (const auto& row : theta) {
    if (row.size() != c) throw ConfigError("NAR model: coefficient layout does not match mask");
    for (const auto& z : row) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw ConfigError("NAR model: non-finite coefficient");
      }
    }
  }
  for (double s : sigma_g) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("NAR model: sigma_g must be >= 0");
  }
}

NarOperator::NarOperator(const NarSpec& spec)
    : spec_((spec.validate(), spec)),
      stepper_(spec.K, spec.viscosity, spec.delta, spec.etd_contour_points) {
  damping_.resize(static_cast<std::size_t>(spec.K));
  for (int i = 0; i < spec.K; ++i) {
    const double k = spec.K + 1 + i;
    damping_[static_cast<std::size_t>(i)] = std::exp(-spec.viscosity * k * k * spec.delta);
  }
}

ModeVector NarOperator::r_delta(std::span<const cplx> u) {
  const auto K = static_cast<std::size_t>(spec_.K);
  if (u.size() != K) throw ConfigError("r_delta: expected K modes");
  if (has_blown_up(u)) throw IntegrationError("r_delta: non-finite input");
  ModeVector next(u.begin(), u.end());
  stepper_.step(next, {});
  const double inv = 1.0 / spec_.delta;
  for (std::size_t i = 0; i < K; ++i) next[i] = (next[i] - u[i]) * inv;
  return next;
}

ModeVector NarOperator::reconstruct(std::span<const cplx> u, int j) const {
  const int K = spec_.K;
  if (u.size() != static_cast<std::size_t>(K)) throw ConfigError("reconstruct: expected K modes");
  if (j < 1 || j > spec_.p) throw ConfigError("reconstruct: lag outside [1, p]");
  auto at = [&](int l) -> cplx {
    if (l == 0) return {};
    return l > 0 ? u[static_cast<std::size_t>(l - 1)] : std::conj(u[static_cast<std::size_t>(-l - 1)]);
  };
  ModeVector out(static_cast<std::size_t>(2 * K));
  std::copy(u.begin(), u.end(), out.begin());
  for (int k = K + 1; k <= 2 * K; ++k) {
    cplx sum{};
    // |l| <= K and |k - l| <= K leave l in [k - K, K].
    for (int l = k - K; l <= K; ++l) sum += at(k - l) * at(l);
    const double decay = std::pow(damping_[static_cast<std::size_t>(k - K - 1)], j);
    out[static_cast<std::size_t>(k - 1)] = cplx(0.0, 0.5 * k) * decay * sum;
  }
  return out;
}

void NarOperator::check_window(const LagWindow& w) const {
  const auto p = static_cast<std::size_t>(spec_.p);
  const auto K = static_cast<std::size_t>(spec_.K);
  if (w.u.size() != p || w.f.size() != p) throw ConfigError("NAR window must hold p entries");
  if (!w.drift.empty() && w.drift.size() != p) throw ConfigError("NAR window drift cache size");
  for (std::size_t j = 0; j < p; ++j) {
    if (w.u[j].size() != K || w.f[j].size() != K) {
      throw ConfigError("NAR window entries must have K modes");
    }
  }
}

FeatureMatrix NarOperator::features(const LagWindow& w) {
  check_window(w);
  const int K = spec_.K;
  const auto cols = spec_.columns();
  FeatureMatrix fm;
  fm.K = K;
  fm.n_columns = static_cast<int>(cols.size());
  fm.values.assign(static_cast<std::size_t>(K) * cols.size(), cplx{});

  const auto p = static_cast<std::size_t>(spec_.p);
  std::vector<ModeVector> drift(p), tilde(p);
  auto drift_at = [&](int lag) -> const ModeVector& {
    auto& d = drift[static_cast<std::size_t>(lag - 1)];
    if (d.empty()) {
      d = w.drift.empty() ? r_delta(w.u[static_cast<std::size_t>(lag - 1)])
                          : w.drift[static_cast<std::size_t>(lag - 1)];
    }
    return d;
  };
  auto tilde_at = [&](int lag) -> const ModeVector& {
    auto& t = tilde[static_cast<std::size_t>(lag - 1)];
    if (t.empty()) t = reconstruct(w.u[static_cast<std::size_t>(lag - 1)], lag);
    return t;
  };
  auto tval = [](const ModeVector& t, int l) -> cplx {
    if (l == 0) return {};
    return l > 0 ? t[static_cast<std::size_t>(l - 1)] : std::conj(t[static_cast<std::size_t>(-l - 1)]);
  };

  for (std::size_t c = 0; c < cols.size(); ++c) {
    const int lag = cols[c].lag;
    for (int k = 1; k <= K; ++k) {
      cplx v{};
      const auto ki = static_cast<std::size_t>(k - 1);
      switch (cols[c].family) {
        case TermFamily::kState:
          v = w.u[static_cast<std::size_t>(lag - 1)][ki];
          break;
        case TermFamily::kDrift:
          v = drift_at(lag)[ki];
          break;
        case TermFamily::kForce:
          v = w.f[static_cast<std::size_t>(lag - 1)][ki];
          break;
        case TermFamily::kQuadratic: {
          const ModeVector& first = tilde_at(1);
          const ModeVector& lagged = tilde_at(lag);
          for (int l = -2 * K; l <= 2 * K; ++l) {
            const int m = k - l;
            const int al = std::abs(l), am = std::abs(m);
            const bool high_first = am <= K && al > K && al <= 2 * K;
            const bool high_second = al <= K && am > K && am <= 2 * K;
            if (high_first || high_second) v += tval(first, l) * tval(lagged, m);
          }
          break;
        }
      }
      fm.values[ki * cols.size() + c] = v;
    }
  }
  return fm;
}

ModeVector NarOperator::phi(const NarModel& model, const FeatureMatrix& fm) const {
  ModeVector out(static_cast<std::size_t>(fm.K));
  for (int k = 1; k <= fm.K; ++k) {
    const auto row = fm.row(k);
    const auto& th = model.theta[static_cast<std::size_t>(k - 1)];
    cplx s{};
    for (std::size_t c = 0; c < row.size(); ++c) s += th[c] * row[c];
    out[static_cast<std::size_t>(k - 1)] = s;
  }
  return out;
}

ModeVector NarOperator::step(const NarModel& model, LagWindow& w, std::span<const cplx> force,
                             std::span<const cplx> noise) {
  const auto K = static_cast<std::size_t>(spec_.K);
  if (force.size() != K || noise.size() != K) throw ConfigError("nar_step: expected K modes");
  check_window(w);
  if (w.drift.empty()) {
    w.drift.resize(w.u.size());
    for (std::size_t j = 0; j < w.u.size(); ++j) w.drift[j] = r_delta(w.u[j]);
  }
  const FeatureMatrix fm = features(w);
  const ModeVector ph = phi(model, fm);
  const auto& last = w.u[0];
  const auto& r = w.drift[0];
  ModeVector next(K);
  for (std::size_t i = 0; i < K; ++i) {
    next[i] = last[i] + spec_.delta * (r[i] + force[i] + ph[i]) + noise[i];
  }
  return next;
}

ModeVector r_delta(std::span<const cplx> u, const NarSpec& spec) {
  NarOperator op(spec);
  return op.r_delta(u);
}

ModeVector reconstruct_high_modes(const LagWindow& window, int j, const NarSpec& spec) {
  if (j < 1 || j > spec.p || window.u.size() < static_cast<std::size_t>(j)) {
    throw ConfigError("reconstruct_high_modes: lag outside [1, p]");
  }
  NarOperator op(spec);
  return op.reconstruct(window.u[static_cast<std::size_t>(j - 1)], j);
}

FeatureMatrix phi_features(const LagWindow& window, const NarSpec& spec) {
  NarOperator op(spec);
  return op.features(window);
}

ModeVector nar_step(const LagWindow& window, std::span<const cplx> force,
                    std::span<const cplx> noise, const NarModel& model) {
  model.validate();
  NarOperator op(model.spec);
  LagWindow w = window;
  return op.step(model, w, force, noise);
}

NarForcing NarForcing::white_noise(double sigma, int k0) {
  NarForcing f;
  f.kind = Kind::kWhiteNoise;
  f.sigma = sigma;
  f.k0 = k0;
  return f;
}

NarForcing NarForcing::replay(const ModeSeries& forces, std::size_t offset) {
  NarForcing f;
  f.kind = Kind::kRecorded;
  f.recorded = &forces;
  f.offset = offset;
  return f;
}

NarRun simulate_nar(const NarModel& model, const LagWindow& initial, std::int64_t n_steps,
                    const NarForcing& forcing, Rng& rng) {
  model.validate();
  if (n_steps < 0) throw ConfigError("simulate_nar: n_steps must be >= 0");
  const auto K = static_cast<std::size_t>(model.spec.K);
  const auto p = static_cast<std::size_t>(model.spec.p);
  if (forcing.kind == NarForcing::Kind::kRecorded) {
    if (forcing.recorded == nullptr || forcing.recorded->n_modes() != model.spec.K) {
      throw ConfigError("simulate_nar: recorded forces must have K modes");
    }
    if (forcing.offset + static_cast<std::size_t>(n_steps) > forcing.recorded->steps()) {
      throw ConfigError("simulate_nar: recorded forces shorter than the run");
    }
  }
  ForceConfig white{forcing.sigma, std::max(forcing.k0, 1), 0};

  NarOperator op(model.spec);
  LagWindow w = initial;
  NarRun run;
  run.u = ModeSeries(model.spec.K, 0);
  run.u.reserve(static_cast<std::size_t>(n_steps) + 1);
  if (w.u.size() != p) throw ConfigError("simulate_nar: window must hold p states");
  run.u.push_back(w.u[0]);

  std::vector<double> noise_sd(K);
  for (std::size_t i = 0; i < K; ++i) noise_sd[i] = std::sqrt(0.5 * model.sigma_g[i]);
  ModeVector force(K), noise(K);

  for (std::int64_t s = 1; s <= n_steps; ++s) {
    std::fill(force.begin(), force.end(), cplx{});
    switch (forcing.kind) {
      case NarForcing::Kind::kNone:
        break;
      case NarForcing::Kind::kWhiteNoise: {
        const auto inc = sample_increment(white, rng, model.spec.delta);
        std::copy_n(inc.modes.begin(), std::min(K, inc.modes.size()), force.begin());
        break;
      }
      case NarForcing::Kind::kRecorded: {
        const auto row = forcing.recorded->at(forcing.offset + static_cast<std::size_t>(s - 1));
        std::copy(row.begin(), row.end(), force.begin());
        break;
      }
    }
    for (std::size_t i = 0; i < K; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      noise[i] = noise_sd[i] * cplx(re, im);
    }

    ModeVector next = op.step(model, w, force, noise);
    if (has_blown_up(next)) {
      run.blow_up_step = s;
      break;
    }
    run.u.push_back(next);

    // Shift the window: newest first.
    ModeVector next_drift = op.r_delta(next);
    w.u.pop_back();
    w.u.insert(w.u.begin(), std::move(next));
    w.f.pop_back();
    w.f.insert(w.f.begin(), force);
    w.drift.pop_back();
    w.drift.insert(w.drift.begin(), std::move(next_drift));
  }
  return run;
}

LagWindow window_from_data(const ModeSeries& u, const ModeSeries& f, std::size_t n, int p) {
  if (p < 1 || n < static_cast<std::size_t>(p) || n > u.steps()) {
    throw ConfigError("window_from_data: need p <= n <= number of states");
  }
  LagWindow w;
  for (int j = 1; j <= p; ++j) {
    const std::size_t row = n - static_cast<std::size_t>(j);
    const auto ur = u.at(row);
    w.u.emplace_back(ur.begin(), ur.end());
    if (row >= 1 && row - 1 < f.steps()) {
      const auto fr = f.at(row - 1);
      w.f.emplace_back(fr.begin(), fr.end());
    } else {
      w.f.emplace_back(static_cast<std::size_t>(u.n_modes()));
    }
  }
  return w;
}

LagWindow warm_start_window(const NarSpec& spec, std::span<const cplx> u0) {
  spec.validate();
  if (u0.size() != static_cast<std::size_t>(spec.K)) throw ConfigError("warm start: expected K modes");
  Etdrk4Stepper stepper(spec.K, spec.viscosity, spec.delta, spec.etd_contour_points);
  LagWindow w;
  ModeVector state(u0.begin(), u0.end());
  w.u.push_back(state);
  for (int j = 1; j < spec.p; ++j) {
    stepper.step(state, {});
    w.u.insert(w.u.begin(), state);
  }
  w.f.assign(static_cast<std::size_t>(spec.p), ModeVector(static_cast<std::size_t>(spec.K)));
  return w;
}

namespace {

json bools(const std::vector<bool>& v) {
  json a = json::array();
  for (bool b : v) a.push_back(b);
  return a;
}

std::vector<bool> parse_bools(const json& j, const char* key) {
  const auto raw = required<std::vector<bool>>(j, key);
  return raw;
}

}  // namespace

json to_json(const NarModel& model) {
  const auto& s = model.spec;
  json cols = json::array();
  for (const auto& c : s.columns()) cols.push_back(c.name());
  json theta = json::array();
  for (const auto& row : model.theta) theta.push_back(complex_array(row));
  return json{{"K", s.K},
              {"p", s.p},
              {"delta", s.delta},
              {"viscosity", s.viscosity},
              {"etd_contour_points", s.etd_contour_points},
              {"mask",
               {{"v", bools(s.mask.state)},
                {"R", bools(s.mask.drift)},
                {"f", bools(s.mask.force)},
                {"w", bools(s.mask.quadratic)}}},
              {"columns", cols},
              {"theta", theta},
              {"sigma_g", model.sigma_g}};
}

NarModel nar_model_from_json(const json& j) {
  NarModel m;
  m.spec.K = required<int>(j, "K");
  m.spec.p = required<int>(j, "p");
  m.spec.delta = required<double>(j, "delta");
  m.spec.viscosity = required<double>(j, "viscosity");
  m.spec.etd_contour_points = optional<int>(j, "etd_contour_points", 32);
  if (j.contains("mask")) {
    const auto& mk = j.at("mask");
    m.spec.mask.state = parse_bools(mk, "v");
    m.spec.mask.drift = parse_bools(mk, "R");
    m.spec.mask.force = parse_bools(mk, "f");
    m.spec.mask.quadratic = parse_bools(mk, "w");
  } else {
    m.spec.mask = TermMask::defaults(m.spec.p);
  }
  m.spec.validate();
  if (!j.contains("theta") || !j.at("theta").is_array()) throw ConfigError("missing field 'theta'");
  for (const auto& row : j.at("theta")) m.theta.push_back(parse_complex_array(row));
  m.sigma_g = required<std::vector<double>>(j, "sigma_g");
  m.validate();
  return m;
}

}  // namespace bnar
