#include "bnar/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <string>

#include "bnar/error.hpp"
#include "bnar/json_io.hpp"
#include "bnar/parallel.hpp"

namespace bnar {

using nlohmann::json;

namespace {

constexpr char kMagic[5] = {'B', 'N', 'A', 'R', '1'};
constexpr std::size_t kPreamble = sizeof(kMagic) + 8;

std::string dims(const DatasetMeta& m) {
  return "M=" + std::to_string(m.n_traj) + " N_t=" + std::to_string(m.n_steps) +
         " K=" + std::to_string(m.K);
}

}  // namespace

void DatasetMeta::validate() const {
  if (K < 1) throw DataError("dataset: K must be >= 1", DataFault::kDimensionMismatch);
  if (gap < 1) throw DataError("dataset: gap must be >= 1", DataFault::kDimensionMismatch);
  if (n_traj < 1 || n_steps < 0) {
    throw DataError("dataset: need M >= 1 and N_t >= 0 (" + dims(*this) + ")",
                    DataFault::kDimensionMismatch);
  }
  if (!(dt > 0.0) || delta != gap * dt) {
    throw DataError("dataset: delta must equal gap * dt", DataFault::kDimensionMismatch);
  }
}

void TrajectoryDataset::validate() const {
  meta.validate();
  const auto M = static_cast<std::size_t>(meta.n_traj);
  const auto Nt = static_cast<std::size_t>(meta.n_steps);
  if (u.size() != M || f.size() != M) {
    throw DataError("dataset: trajectory count does not match " + dims(meta),
                    DataFault::kDimensionMismatch);
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (u[m].n_modes() != meta.K || u[m].steps() != Nt + 1 || f[m].n_modes() != meta.K ||
        f[m].steps() != Nt) {
      throw DataError("dataset: trajectory " + std::to_string(m) + " does not match " +
                          dims(meta),
                      DataFault::kDimensionMismatch);
    }
    for (const auto* s : {&u[m], &f[m]}) {
      for (const auto& z : s->raw()) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
          throw DataError("dataset: non-finite entry in trajectory " + std::to_string(m),
                          DataFault::kNonFinite);
        }
      }
    }
  }
}

bool operator==(const TrajectoryDataset& a, const TrajectoryDataset& b) {
  // Bitwise comparison of the payload; meta compared through its encoding.
  return encode(a) == encode(b);
}

TrajectoryDataset generate(const IntegratorConfig& full_cfg, int K, int gap, int M, int N_t,
                           std::span<const SpectralField> initial_ensemble) {
  full_cfg.validate();
  if (K < 1 || K > full_cfg.grid.n_modes) throw ConfigError("generate: K outside [1, N]");
  if (gap < 1) throw ConfigError("generate: gap must be >= 1");
  if (M < 1 || N_t < 0) throw ConfigError("generate: need M >= 1 and N_t >= 0");
  if (initial_ensemble.empty()) throw ConfigError("generate: empty initial ensemble");

  TrajectoryDataset ds;
  ds.meta.K = K;
  ds.meta.gap = gap;
  ds.meta.dt = full_cfg.dt;
  ds.meta.delta = gap * full_cfg.dt;
  ds.meta.n_traj = M;
  ds.meta.n_steps = N_t;
  ds.meta.full_model = full_cfg;
  ds.meta.seed = full_cfg.force.seed;
  ds.u.resize(static_cast<std::size_t>(M));
  ds.f.resize(static_cast<std::size_t>(M));

  parallel_for(static_cast<std::size_t>(M), [&](std::size_t m) {
    Rng rng(split_seed(full_cfg.force.seed, m));
    const auto& init = initial_ensemble[rng.below(initial_ensemble.size())];
    IntegrateOptions opts;
    opts.save_every = gap;
    opts.save_modes = K;
    opts.retain_forces = true;
    const Trajectory traj =
        integrate(init, static_cast<std::int64_t>(N_t) * gap, full_cfg, full_cfg.grid.n_modes,
                  opts, rng);
    if (traj.blow_up_step) {
      throw IntegrationError("generate: trajectory " + std::to_string(m) +
                             " blew up at fine step " + std::to_string(*traj.blow_up_step));
    }
    ModeSeries u(K, 0), f(K, 0);
    u.reserve(traj.states.size());
    f.reserve(traj.forces.size());
    for (const auto& s : traj.states) u.push_back(s.modes);
    ModeVector row(static_cast<std::size_t>(K));
    for (const auto& inc : traj.forces) {
      std::fill(row.begin(), row.end(), cplx{});
      std::copy_n(inc.modes.begin(), std::min(row.size(), inc.modes.size()), row.begin());
      f.push_back(row);
    }
    ds.u[m] = std::move(u);
    ds.f[m] = std::move(f);
  });
  return ds;
}

namespace {

json meta_to_json(const DatasetMeta& m) {
  return json{{"format_version", m.format_version},
              {"K", m.K},
              {"gap", m.gap},
              {"dt", m.dt},
              {"delta", m.delta},
              {"n_traj", m.n_traj},
              {"n_steps", m.n_steps},
              {"seed", m.seed},
              {"full_model", m.full_model},
              {"u_shape", {m.n_traj, m.n_steps + 1, m.K}},
              {"f_shape", {m.n_traj, m.n_steps, m.K}},
              {"layout", "float64 little-endian (re, im), [m][n][k]; u then f"}};
}

DatasetMeta meta_from_json(const json& j) {
  DatasetMeta m;
  try {
    m.format_version = j.at("format_version").get<int>();
  } catch (const json::exception& e) {
    throw DataError(std::string("dataset header: ") + e.what(), DataFault::kCorruptHeader);
  }
  if (m.format_version != kDatasetFormatVersion) {
    throw DataError("dataset: unsupported format version " + std::to_string(m.format_version),
                    DataFault::kUnsupportedVersion);
  }
  try {
    m.K = j.at("K").get<int>();
    m.gap = j.at("gap").get<int>();
    m.dt = j.at("dt").get<double>();
    m.delta = j.at("delta").get<double>();
    m.n_traj = j.at("n_traj").get<int>();
    m.n_steps = j.at("n_steps").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.full_model = j.at("full_model").get<IntegratorConfig>();
  } catch (const json::exception& e) {
    throw DataError(std::string("dataset header: ") + e.what(), DataFault::kCorruptHeader);
  } catch (const ConfigError& e) {
    throw DataError(std::string("dataset header: ") + e.what(), DataFault::kCorruptHeader);
  }
  m.validate();
  return m;
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_series(std::vector<std::uint8_t>& out, const ModeSeries& s) {
  for (const auto& z : s.raw()) {
    put_u64(out, std::bit_cast<std::uint64_t>(z.real()));
    put_u64(out, std::bit_cast<std::uint64_t>(z.imag()));
  }
}

const std::uint8_t* get_series(const std::uint8_t* p, ModeSeries& s) {
  for (auto& z : s.raw()) {
    z = {std::bit_cast<double>(get_u64(p)), std::bit_cast<double>(get_u64(p + 8))};
    p += 16;
  }
  return p;
}

}  // namespace

std::vector<std::uint8_t> encode(const TrajectoryDataset& ds) {
  ds.validate();
  const std::string header = meta_to_json(ds.meta).dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof(kMagic));
  put_u64(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  std::size_t values = 0;
  for (std::size_t m = 0; m < ds.u.size(); ++m) values += ds.u[m].raw().size() + ds.f[m].raw().size();
  out.reserve(out.size() + 16 * values);
  for (const auto& s : ds.u) put_series(out, s);
  for (const auto& s : ds.f) put_series(out, s);
  return out;
}

TrajectoryDataset decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreamble || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("dataset: missing BNAR1 magic", DataFault::kCorruptHeader);
  }
  const std::uint64_t header_len = get_u64(bytes.data() + sizeof(kMagic));
  if (header_len > bytes.size() - kPreamble) {
    throw DataError("dataset: header length exceeds file size", DataFault::kCorruptHeader);
  }
  const auto* h = reinterpret_cast<const char*>(bytes.data() + kPreamble);
  const json header = json::parse(h, h + header_len, nullptr, false);
  if (header.is_discarded() || !header.is_object()) {
    throw DataError("dataset: header is not a JSON object", DataFault::kCorruptHeader);
  }

  TrajectoryDataset ds;
  ds.meta = meta_from_json(header);
  const auto M = static_cast<std::size_t>(ds.meta.n_traj);
  const auto Nt = static_cast<std::size_t>(ds.meta.n_steps);
  const auto K = static_cast<std::size_t>(ds.meta.K);
  const std::size_t expected = 16 * M * K * (2 * Nt + 1);
  const std::size_t available = bytes.size() - kPreamble - header_len;
  if (available < expected) {
    throw DataError("dataset: truncated payload (" + std::to_string(available) + " of " +
                        std::to_string(expected) + " bytes)",
                    DataFault::kTruncatedPayload);
  }
  if (available > expected) {
    throw DataError("dataset: payload longer than header dimensions",
                    DataFault::kDimensionMismatch);
  }
  const std::uint8_t* p = bytes.data() + kPreamble + header_len;
  for (std::size_t m = 0; m < M; ++m) {
    ds.u.emplace_back(ds.meta.K, Nt + 1);
    p = get_series(p, ds.u.back());
  }
  for (std::size_t m = 0; m < M; ++m) {
    ds.f.emplace_back(ds.meta.K, Nt);
    p = get_series(p, ds.f.back());
  }
  ds.validate();
  return ds;
}

void save(const TrajectoryDataset& ds, const std::filesystem::path& path) {
  const auto bytes = encode(ds);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

TrajectoryDataset load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return decode(bytes);
}

TrajectoryDataset downsample(const TrajectoryDataset& ds, int factor) {
  if (factor < 1) throw ConfigError("downsample: factor must be >= 1");
  TrajectoryDataset out;
  out.meta = ds.meta;
  out.meta.gap = ds.meta.gap * factor;
  out.meta.delta = out.meta.gap * out.meta.dt;
  out.meta.n_steps = ds.meta.n_steps / factor;
  const auto Nt = static_cast<std::size_t>(out.meta.n_steps);
  const double w = 1.0 / factor;
  for (std::size_t m = 0; m < ds.u.size(); ++m) {
    ModeSeries u(ds.meta.K, 0), f(ds.meta.K, 0);
    ModeVector avg(static_cast<std::size_t>(ds.meta.K));
    for (std::size_t n = 0; n <= Nt; ++n) u.push_back(ds.u[m].at(n * static_cast<std::size_t>(factor)));
    for (std::size_t n = 0; n < Nt; ++n) {
      std::fill(avg.begin(), avg.end(), cplx{});
      for (int j = 0; j < factor; ++j) {
        const auto row = ds.f[m].at(n * static_cast<std::size_t>(factor) + static_cast<std::size_t>(j));
        for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += row[k];
      }
      for (auto& z : avg) z *= w;
      f.push_back(avg);
    }
    out.u.push_back(std::move(u));
    out.f.push_back(std::move(f));
  }
  return out;
}

TrajectoryDataset truncate_modes(const TrajectoryDataset& ds, int K) {
  if (K < 1 || K > ds.meta.K) throw ConfigError("truncate_modes: K outside [1, dataset K]");
  TrajectoryDataset out;
  out.meta = ds.meta;
  out.meta.K = K;
  const auto k = static_cast<std::size_t>(K);
  for (std::size_t m = 0; m < ds.u.size(); ++m) {
    ModeSeries u(K, 0), f(K, 0);
    for (std::size_t n = 0; n < ds.u[m].steps(); ++n) u.push_back(ds.u[m].at(n).first(k));
    for (std::size_t n = 0; n < ds.f[m].steps(); ++n) f.push_back(ds.f[m].at(n).first(k));
    out.u.push_back(std::move(u));
    out.f.push_back(std::move(f));
  }
  return out;
}

TrajectoryDataset slice(const TrajectoryDataset& ds, int M, int N_t) {
  if (M < 1 || M > ds.meta.n_traj || N_t < 0 || N_t > ds.meta.n_steps) {
    throw ConfigError("slice: (" + std::to_string(M) + ", " + std::to_string(N_t) +
                      ") outside dataset " + dims(ds.meta));
  }
  TrajectoryDataset out;
  out.meta = ds.meta;
  out.meta.n_traj = M;
  out.meta.n_steps = N_t;
  const auto Nt = static_cast<std::size_t>(N_t);
  for (std::size_t m = 0; m < static_cast<std::size_t>(M); ++m) {
    ModeSeries u(ds.meta.K, 0), f(ds.meta.K, 0);
    for (std::size_t n = 0; n <= Nt; ++n) u.push_back(ds.u[m].at(n));
    for (std::size_t n = 0; n < Nt; ++n) f.push_back(ds.f[m].at(n));
    out.u.push_back(std::move(u));
    out.f.push_back(std::move(f));
  }
  return out;
}

TrajectoryDataset select_trajectories(const TrajectoryDataset& ds, int first, int count) {
  if (first < 0 || count < 1 || first + count > ds.meta.n_traj) {
    throw ConfigError("select_trajectories: range outside dataset");
  }
  TrajectoryDataset out;
  out.meta = ds.meta;
  out.meta.n_traj = count;
  out.u.assign(ds.u.begin() + first, ds.u.begin() + first + count);
  out.f.assign(ds.f.begin() + first, ds.f.begin() + first + count);
  return out;
}

void export_csv(const TrajectoryDataset& ds, int m, const std::filesystem::path& path) {
  if (m < 0 || m >= ds.meta.n_traj) throw ConfigError("export_csv: trajectory index out of range");
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "n,t";
  for (int k = 1; k <= ds.meta.K; ++k) os << ",u" << k << "_re,u" << k << "_im";
  for (int k = 1; k <= ds.meta.K; ++k) os << ",f" << k << "_re,f" << k << "_im";
  os << '\n' << std::setprecision(17);
  const auto& u = ds.u[static_cast<std::size_t>(m)];
  const auto& f = ds.f[static_cast<std::size_t>(m)];
  for (std::size_t n = 0; n < u.steps(); ++n) {
    os << n << ',' << static_cast<double>(n) * ds.meta.delta;
    for (const auto& z : u.at(n)) os << ',' << z.real() << ',' << z.imag();
    if (n < f.steps()) {
      for (const auto& z : f.at(n)) os << ',' << z.real() << ',' << z.imag();
    } else {
      for (int k = 0; k < ds.meta.K; ++k) os << ",,";
    }
    os << '\n';
  }
}

}  // namespace bnar
