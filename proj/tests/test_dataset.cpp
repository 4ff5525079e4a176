#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bnar/dataset.hpp"
#include "bnar/error.hpp"
#include "oracles.hpp"

using namespace bnar;

namespace {

IntegratorConfig config(int n) {
  IntegratorConfig cfg;
  cfg.grid.n_modes = n;
  cfg.force = {1.0, 4, 21};
  cfg.dt = 0.002;
  return cfg;
}

const std::vector<SpectralField>& ensemble16() {
  static const auto e = make_initial_ensemble(config(16), 1.0, 4);
  return e;
}

TrajectoryDataset small(int K, int gap, int M, int N_t) {
  return generate(config(16), K, gap, M, N_t, ensemble16());
}

DataFault fault_of(std::span<const std::uint8_t> bytes) {
  try {
    decode(bytes);
  } catch (const DataError& e) {
    return e.fault();
  }
  FAIL("decode accepted malformed bytes");
  return DataFault::kGeneric;
}

std::uint64_t header_length(const std::vector<std::uint8_t>& b) {
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(b[5 + i]) << (8 * i);
  return len;
}

std::vector<std::uint8_t> with_header(const std::vector<std::uint8_t>& b,
                                      const nlohmann::json& header) {
  const auto old_len = header_length(b);
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(b.begin(), b.begin() + 5);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(text.size() >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), b.begin() + 13 + static_cast<std::ptrdiff_t>(old_len), b.end());
  return out;
}

nlohmann::json header_of(const std::vector<std::uint8_t>& b) {
  const auto len = header_length(b);
  return nlohmann::json::parse(std::string(b.begin() + 13, b.begin() + 13 + static_cast<std::ptrdiff_t>(len)));
}

}  // namespace

TEST_CASE("shapes and metadata") {
  const auto ds = small(4, 5, 3, 7);
  CHECK(ds.meta.K == 4);
  CHECK(ds.meta.gap == 5);
  CHECK(ds.meta.delta == doctest::Approx(0.01));
  REQUIRE(ds.u.size() == 3);
  REQUIRE(ds.f.size() == 3);
  for (int m = 0; m < 3; ++m) {
    CHECK(ds.u[m].steps() == 8);
    CHECK(ds.f[m].steps() == 7);
    CHECK(ds.u[m].n_modes() == 4);
  }
  CHECK_NOTHROW(ds.validate());
  CHECK_THROWS_AS(small(17, 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(small(4, 0, 1, 1), ConfigError);
}

TEST_CASE("encode/decode and save/load round trip exactly") {
  const auto ds = small(6, 3, 2, 5);
  CHECK(decode(encode(ds)) == ds);
  const auto path = std::filesystem::temp_directory_path() / "bnar_test_roundtrip.bnar";
  save(ds, path);
  CHECK(load(path) == ds);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load("/nonexistent/dir/x.bnar"), DataError);
}

TEST_CASE("malformed files are rejected with the right fault") {
  const auto bytes = encode(small(3, 2, 2, 4));

  auto truncated = bytes;
  truncated.resize(truncated.size() - 8);
  CHECK(fault_of(truncated) == DataFault::kTruncatedPayload);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(fault_of(bad_magic) == DataFault::kCorruptHeader);

  auto bad_json = bytes;
  bad_json[13] = '#';
  CHECK(fault_of(bad_json) == DataFault::kCorruptHeader);

  auto h = header_of(bytes);
  h["format_version"] = kDatasetFormatVersion + 1;
  CHECK(fault_of(with_header(bytes, h)) == DataFault::kUnsupportedVersion);

  auto longer = bytes;
  longer.push_back(0);
  CHECK(fault_of(longer) == DataFault::kDimensionMismatch);

  auto nan_payload = bytes;
  const double nan = NAN;
  std::memcpy(nan_payload.data() + nan_payload.size() - 8, &nan, 8);
  CHECK(fault_of(nan_payload) == DataFault::kNonFinite);

  std::vector<std::uint8_t> tiny{'B', 'N'};
  CHECK(fault_of(tiny) == DataFault::kCorruptHeader);
}

TEST_CASE("gap = 1 with all modes replays exactly through one ETDRK4 step") {
  const auto cfg = config(16);
  const auto ds = generate(cfg, 16, 1, 2, 10, ensemble16());
  Etdrk4Stepper stepper(15, cfg.grid.viscosity, cfg.dt, cfg.etd_contour_points);
  for (int m = 0; m < 2; ++m) {
    for (std::size_t n = 0; n < 10; ++n) {
      std::vector<cplx> u(ds.u[m].at(n).begin(), ds.u[m].at(n).end());
      stepper.step(u, ds.f[m].at(n));
      const auto next = ds.u[m].at(n + 1);
      CHECK(std::vector<cplx>(next.begin(), next.end()) == u);
    }
  }
}

TEST_CASE("generating at gap 2 equals downsampling gap 1") {
  const auto fine = small(5, 1, 2, 12);
  const auto coarse = small(5, 2, 2, 6);
  const auto down = downsample(fine, 2);
  CHECK(down.meta.gap == 2);
  CHECK(down.meta.n_steps == 6);
  for (int m = 0; m < 2; ++m) {
    CHECK(down.u[m] == coarse.u[m]);
    CHECK(oracle::max_abs_diff(down.f[m].raw(), coarse.f[m].raw()) < 1e-12);
  }
}

TEST_CASE("forcing row n drives the interval (t_n, t_n+1]") {
  // The increment u_{n+1} - u_n responds to f[n] with slope about delta and
  // is uncorrelated with f[n+1].
  const auto ds = small(4, 5, 4, 400);
  const double delta = ds.meta.delta;
  double same = 0.0, next = 0.0, ff = 0.0;
  for (int m = 0; m < 4; ++m) {
    for (std::size_t n = 0; n + 1 < 400; ++n) {
      for (int k = 1; k <= 4; ++k) {
        const double du = (ds.u[m](n + 1, k) - ds.u[m](n, k)).real();
        same += du * ds.f[m](n, k).real();
        next += du * ds.f[m](n + 1, k).real();
        ff += std::norm(ds.f[m](n, k).real());
      }
    }
  }
  CHECK(same / ff == doctest::Approx(delta).epsilon(0.15));
  CHECK(std::abs(next / ff) < 0.15 * delta);
}

TEST_CASE("generation is deterministic in the configuration") {
  const auto a = small(4, 2, 3, 5);
  const auto b = small(4, 2, 3, 5);
  CHECK(encode(a) == encode(b));
  auto cfg = config(16);
  cfg.force.seed = 22;
  const auto c = generate(cfg, 4, 2, 3, 5, ensemble16());
  CHECK(!(c == a));
}

TEST_CASE("truncate, slice, select") {
  const auto ds = small(6, 2, 3, 8);
  const auto t = truncate_modes(ds, 2);
  CHECK(t.meta.K == 2);
  CHECK(t.u[1](3, 2) == ds.u[1](3, 2));
  CHECK_THROWS_AS(truncate_modes(ds, 7), ConfigError);

  const auto s = slice(ds, 2, 4);
  CHECK(s.meta.n_traj == 2);
  CHECK(s.meta.n_steps == 4);
  CHECK(s.u[1].steps() == 5);
  CHECK(s.f[1](3, 6) == ds.f[1](3, 6));
  CHECK_THROWS_AS(slice(ds, 4, 1), ConfigError);

  const auto sel = select_trajectories(ds, 1, 2);
  CHECK(sel.u[0] == ds.u[1]);
  CHECK_THROWS_AS(select_trajectories(ds, 2, 2), ConfigError);
}

TEST_CASE("zero-interval dataset round trips") {
  const auto ds = small(3, 1, 1, 0);
  CHECK(ds.u[0].steps() == 1);
  CHECK(ds.f[0].steps() == 0);
  CHECK(decode(encode(ds)) == ds);
}

TEST_CASE("export_csv writes a header and one row per time") {
  const auto ds = small(2, 1, 1, 3);
  const auto path = std::filesystem::temp_directory_path() / "bnar_test_export.csv";
  export_csv(ds, 0, path);
  std::ifstream is(path);
  std::string line;
  int rows = 0;
  std::getline(is, line);
  CHECK(line.rfind("n,t,", 0) == 0);
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(export_csv(ds, 1, path), ConfigError);
}
