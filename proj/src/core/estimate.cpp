#include "bnar/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "bnar/error.hpp"
#include "bnar/json_io.hpp"
#include "bnar/parallel.hpp"

namespace bnar {

using nlohmann::json;

namespace {

bool finite(const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

RegressionProblem build_problem(const TrajectoryDataset& ds, const NarSpec& spec) {
  spec.validate();
  ds.validate();
  const auto& meta = ds.meta;
  if (meta.K != spec.K) {
    throw DataError("fit: dataset has K = " + std::to_string(meta.K) + ", model expects " +
                        std::to_string(spec.K),
                    DataFault::kDimensionMismatch);
  }
  if (std::abs(meta.delta - spec.delta) > 1e-12 * spec.delta) {
    throw DataError("fit: dataset delta does not match model delta", DataFault::kDimensionMismatch);
  }
  if (meta.n_steps <= spec.p) {
    throw DataError("fit: need more than p observation intervals per trajectory",
                    DataFault::kDimensionMismatch);
  }

  const int K = spec.K;
  const int p = spec.p;
  const auto cols = spec.columns();
  const auto n_cols = static_cast<Eigen::Index>(cols.size());
  const std::size_t per_traj = static_cast<std::size_t>(meta.n_steps - p);
  const std::size_t rows = per_traj * static_cast<std::size_t>(meta.n_traj);

  RegressionProblem prob;
  prob.spec = spec;
  for (const auto& c : cols) prob.column_names.push_back(c.name());
  prob.n_samples = rows;
  prob.design.assign(static_cast<std::size_t>(K),
                     Eigen::MatrixXcd(static_cast<Eigen::Index>(rows), n_cols));
  prob.response.assign(static_cast<std::size_t>(K),
                       Eigen::VectorXcd(static_cast<Eigen::Index>(rows)));

  const double delta = spec.delta;
  parallel_for(static_cast<std::size_t>(meta.n_traj), [&](std::size_t m) {
    NarOperator op(spec);
    const ModeSeries& u = ds.u[m];
    const ModeSeries& f = ds.f[m];
    const std::size_t n_states = u.steps();
    // Rows 0 and N_t never enter a drift term.
    std::vector<ModeVector> drift(n_states);
    for (std::size_t n = 1; n + 1 < n_states; ++n) drift[n] = op.r_delta(u.at(n));

    for (std::size_t n = static_cast<std::size_t>(p) + 1; n < n_states; ++n) {
      LagWindow w = window_from_data(u, f, n, p);
      for (int j = 1; j <= p; ++j) w.drift.push_back(drift[n - static_cast<std::size_t>(j)]);
      const FeatureMatrix fm = op.features(w);
      const auto row = static_cast<Eigen::Index>(m * per_traj + (n - static_cast<std::size_t>(p) - 1));
      const auto target = u.at(n);
      const auto prev = u.at(n - 1);
      const auto force = f.at(n - 1);
      const auto& r = drift[n - 1];
      for (int k = 1; k <= K; ++k) {
        const auto ki = static_cast<std::size_t>(k - 1);
        const cplx resp = target[ki] - prev[ki] - delta * (r[ki] + force[ki]);
        if (!finite(resp)) {
          throw DataError("fit: non-finite response in trajectory " + std::to_string(m),
                          DataFault::kNonFinite);
        }
        prob.response[ki](row) = resp;
        const auto feats = fm.row(k);
        for (Eigen::Index c = 0; c < n_cols; ++c) {
          const cplx v = delta * feats[static_cast<std::size_t>(c)];
          if (!finite(v)) {
            throw DataError("fit: non-finite feature in trajectory " + std::to_string(m),
                            DataFault::kNonFinite);
          }
          prob.design[ki](row, c) = v;
        }
      }
    }
  });
  return prob;
}

FitReport solve(const RegressionProblem& prob, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ConfigError("fit: ridge must be >= 0");
  const int K = prob.spec.K;
  if (prob.design.size() != static_cast<std::size_t>(K) ||
      prob.response.size() != static_cast<std::size_t>(K)) {
    throw DataError("fit: regression problem has wrong number of wavenumbers",
                    DataFault::kDimensionMismatch);
  }
  if (prob.n_samples == 0) throw DataError("fit: no samples", DataFault::kDimensionMismatch);

  FitReport rep;
  rep.model = NarModel::zero(prob.spec);
  rep.n_samples = prob.n_samples;
  rep.ridge = ridge;
  rep.rss.assign(static_cast<std::size_t>(K), 0.0);
  rep.condition.assign(static_cast<std::size_t>(K), 0.0);
  rep.rank.assign(static_cast<std::size_t>(K), 0);
  rep.dropped.assign(static_cast<std::size_t>(K), {});

  parallel_for(static_cast<std::size_t>(K), [&](std::size_t ki) {
    const Eigen::MatrixXcd& X = prob.design[ki];
    const Eigen::VectorXcd& r = prob.response[ki];
    const Eigen::Index R = X.rows();
    const Eigen::Index C = X.cols();

    std::vector<Eigen::Index> kept;
    std::vector<bool> dropped(static_cast<std::size_t>(C), false);
    for (Eigen::Index c = 0; c < C; ++c) {
      if (X.col(c).squaredNorm() == 0.0) {
        dropped[static_cast<std::size_t>(c)] = true;
      } else {
        kept.push_back(c);
      }
    }
    const auto Ck = static_cast<Eigen::Index>(kept.size());
    Eigen::VectorXcd theta = Eigen::VectorXcd::Zero(C);

    if (Ck > 0) {
      // Real form: [Re X, -Im X; Im X, Re X] [Re t; Im t] = [Re r; Im r],
      // with sqrt(ridge) I appended for the penalty.
      const Eigen::Index extra = ridge > 0.0 ? 2 * Ck : 0;
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * R + extra, 2 * Ck);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * R + extra);
      for (Eigen::Index j = 0; j < Ck; ++j) {
        const auto col = X.col(kept[static_cast<std::size_t>(j)]);
        A.block(0, j, R, 1) = col.real();
        A.block(R, j, R, 1) = col.imag();
        A.block(0, Ck + j, R, 1) = -col.imag();
        A.block(R, Ck + j, R, 1) = col.real();
      }
      b.head(R) = r.real();
      b.segment(R, R) = r.imag();
      if (extra > 0) {
        A.bottomRows(extra).diagonal().setConstant(std::sqrt(ridge));
      }

      Eigen::VectorXd scale = A.colwise().norm().transpose();
      for (Eigen::Index j = 0; j < scale.size(); ++j) {
        if (scale(j) == 0.0) scale(j) = 1.0;
      }
      A = A * scale.cwiseInverse().asDiagonal();

      Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::VectorXd& s = svd.singularValues();
      const double smax = s.size() > 0 ? s(0) : 0.0;
      const double cutoff = 1e-10 * smax;
      Eigen::VectorXd utb = svd.matrixU().transpose() * b;
      int rank = 0;
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (s(j) > cutoff) {
          utb(j) /= s(j);
          ++rank;
        } else {
          utb(j) = 0.0;
        }
      }
      const Eigen::VectorXd x = (svd.matrixV() * utb).cwiseQuotient(scale);
      for (Eigen::Index j = 0; j < Ck; ++j) {
        theta(kept[static_cast<std::size_t>(j)]) = cplx(x(j), x(Ck + j));
      }
      const double smin = s.size() > 0 ? s(s.size() - 1) : 0.0;
      rep.condition[ki] = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
      rep.rank[ki] = rank;
    }

    const Eigen::VectorXcd res = r - X * theta;
    const double rss = res.squaredNorm();
    rep.rss[ki] = rss;
    rep.model.sigma_g[ki] = rss / static_cast<double>(R);
    rep.dropped[ki] = std::move(dropped);
    auto& out = rep.model.theta[ki];
    for (Eigen::Index c = 0; c < C; ++c) out[static_cast<std::size_t>(c)] = theta(c);
  });
  return rep;
}

FitReport fit(const TrajectoryDataset& ds, const NarSpec& spec, double ridge) {
  return solve(build_problem(ds, spec), ridge);
}

double relative_rms_difference(const std::vector<ModeVector>& a,
                               const std::vector<ModeVector>& b) {
  if (a.size() != b.size()) throw DataError("coefficient tables differ in shape");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) throw DataError("coefficient tables differ in shape");
    for (std::size_t c = 0; c < a[k].size(); ++c) {
      num += std::norm(a[k][c] - b[k][c]);
      den += std::norm(b[k][c]);
    }
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

ConsistencyTable consistency_study(const TrajectoryDataset& ds, const NarSpec& spec,
                                   const std::vector<std::pair<int, int>>& sizes,
                                   double ridge) {
  if (sizes.empty()) throw ConfigError("consistency study: no sizes given");
  ConsistencyTable table;
  for (const auto& c : spec.columns()) table.column_names.push_back(c.name());
  std::size_t last_samples = 0;
  for (const auto& [M, T] : sizes) {
    const TrajectoryDataset part = slice(ds, M, T);
    const FitReport rep = fit(part, spec, ridge);
    if (rep.n_samples < last_samples) {
      throw ConfigError("consistency study: sizes must be ascending");
    }
    last_samples = rep.n_samples;
    table.rows.push_back({M, T, rep.n_samples, rep.model.theta});
  }
  if (table.rows.size() >= 2) {
    const auto& last = table.rows.back().theta;
    const auto& prev = table.rows[table.rows.size() - 2].theta;
    table.last_relative_change = relative_rms_difference(prev, last);
    for (std::size_t k = 0; k < last.size(); ++k) {
      for (std::size_t c = 0; c < last[k].size(); ++c) {
        const double scale = std::abs(last[k][c]);
        const double d = std::abs(last[k][c] - prev[k][c]);
        const double rel = scale > 0.0 ? d / scale : (d > 0.0 ? 1.0 : 0.0);
        table.max_relative_change = std::max(table.max_relative_change, rel);
      }
    }
  }
  return table;
}

json to_json(const FitReport& rep) {
  json dropped = json::array();
  for (std::size_t k = 0; k < rep.dropped.size(); ++k) {
    json names = json::array();
    const auto cols = rep.model.spec.columns();
    for (std::size_t c = 0; c < rep.dropped[k].size(); ++c) {
      if (rep.dropped[k][c]) names.push_back(cols[c].name());
    }
    dropped.push_back(names);
  }
  json cond = json::array();
  for (double c : rep.condition) {
    if (std::isfinite(c)) {
      cond.push_back(c);
    } else {
      cond.push_back(nullptr);
    }
  }
  return json{{"model", to_json(rep.model)},
              {"n_samples", rep.n_samples},
              {"ridge", rep.ridge},
              {"rss", rep.rss},
              {"condition", cond},
              {"rank", rep.rank},
              {"dropped_columns", dropped}};
}

void write_consistency_csv(const ConsistencyTable& table, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "n_traj,n_steps,n_samples,k,term,re,im\n" << std::setprecision(17);
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.theta.size(); ++k) {
      for (std::size_t c = 0; c < row.theta[k].size(); ++c) {
        os << row.n_traj << ',' << row.n_steps << ',' << row.n_samples << ',' << k + 1 << ','
           << table.column_names[c] << ',' << row.theta[k][c].real() << ','
           << row.theta[k][c].imag() << '\n';
      }
    }
  }
  if (!os) throw DataError("write failed: " + path.string());
}

}  // namespace bnar
