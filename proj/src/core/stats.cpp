#include "bnar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "bnar/error.hpp"

namespace bnar {

namespace {

void check_mode(std::span<const ModeSeries> data, int k) {
  for (const auto& s : data) {
    if (k < 1 || k > s.n_modes()) throw ConfigError("statistics: wavenumber out of range");
  }
}

std::vector<double> real_parts(std::span<const ModeSeries> data, int k, std::size_t skip) {
  std::vector<double> out;
  for (const auto& s : data) {
    for (std::size_t n = skip; n < s.steps(); ++n) out.push_back(s(n, k).real());
  }
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  return os;
}

}  // namespace

SpectrumEstimate energy_spectrum(std::span<const ModeSeries> data, int K, std::size_t skip) {
  if (K < 1) throw ConfigError("energy spectrum: K must be >= 1");
  check_mode(data, K);
  SpectrumEstimate est;
  const auto Ku = static_cast<std::size_t>(K);
  std::vector<double> sum(Ku, 0.0), sum2(Ku, 0.0);
  for (const auto& s : data) {
    for (std::size_t n = skip; n < s.steps(); ++n) {
      const auto row = s.at(n);
      for (std::size_t i = 0; i < Ku; ++i) {
        const double e = std::norm(row[i]);
        sum[i] += e;
        sum2[i] += e * e;
      }
      ++est.n_samples;
    }
  }
  if (est.n_samples == 0) throw DataError("energy spectrum: no samples");
  const double n = static_cast<double>(est.n_samples);
  est.mean.resize(Ku);
  est.std_error.resize(Ku);
  for (std::size_t i = 0; i < Ku; ++i) {
    est.mean[i] = sum[i] / n;
    const double var = est.n_samples > 1
                           ? std::max(0.0, (sum2[i] - n * est.mean[i] * est.mean[i]) / (n - 1.0))
                           : 0.0;
    est.std_error[i] = std::sqrt(var / n);
  }
  return est;
}

std::vector<double> relative_spectrum_error(const SpectrumEstimate& model,
                                            const SpectrumEstimate& truth) {
  const std::size_t K = std::min(model.mean.size(), truth.mean.size());
  std::vector<double> err(K);
  for (std::size_t i = 0; i < K; ++i) {
    err[i] = std::abs(model.mean[i] - truth.mean[i]) / truth.mean[i];
  }
  return err;
}

PdfEstimate marginal_pdf(std::span<const ModeSeries> data, int k, std::size_t skip) {
  check_mode(data, k);
  PdfEstimate pdf;
  pdf.k = k;
  pdf.sorted = real_parts(data, k, skip);
  if (pdf.sorted.empty()) throw DataError("density: no samples");
  std::sort(pdf.sorted.begin(), pdf.sorted.end());
  const auto& x = pdf.sorted;
  const double lo = x.front(), hi = x.back();
  const double n = static_cast<double>(x.size());

  int bins = 50;
  const double iqr = quantile(x, 0.75) - quantile(x, 0.25);
  if (iqr > 0.0 && hi > lo) {
    const double width = 2.0 * iqr / std::cbrt(n);
    const double fd = std::ceil((hi - lo) / width);
    if (fd > bins) bins = static_cast<int>(std::min(fd, 10000.0));
  }
  double left = lo, right = hi;
  if (!(right > left)) {
    left -= 0.5;
    right += 0.5;
  }
  const double width = (right - left) / bins;
  pdf.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) pdf.edges[static_cast<std::size_t>(b)] = left + b * width;
  pdf.edges.back() = right;

  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : x) {
    auto b = static_cast<long>(std::floor((v - left) / width));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  pdf.masses.resize(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    pdf.masses[b] = static_cast<double>(counts[b]) / n;
  }
  return pdf;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("K-S statistic: empty sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_statistic(const PdfEstimate& a, const PdfEstimate& b) {
  return ks_statistic(a.sorted, b.sorted);
}

AcfEstimate acf(std::span<const ModeSeries> data, int k, double delta, double tau_max,
                std::size_t skip) {
  if (!(delta > 0.0)) throw ConfigError("ACF: delta must be > 0");
  if (!(tau_max >= 0.0)) throw ConfigError("ACF: tau_max must be >= 0");
  check_mode(data, k);
  const auto n_lags = static_cast<std::size_t>(std::floor(tau_max / delta + 1e-9)) + 1;
  AcfEstimate est;
  est.k = k;
  est.delta = delta;
  std::vector<double> sum(n_lags, 0.0);
  std::vector<std::size_t> count(n_lags, 0);
  for (const auto& s : data) {
    if (s.steps() <= skip) continue;
    std::vector<double> x(s.steps() - skip);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = s(n + skip, k).real();
    for (std::size_t L = 0; L < n_lags && L < x.size(); ++L) {
      double acc = 0.0;
      for (std::size_t n = 0; n + L < x.size(); ++n) acc += x[n + L] * x[n];
      sum[L] += acc;
      count[L] += x.size() - L;
    }
  }
  if (count[0] == 0) throw DataError("ACF: no samples");
  for (std::size_t L = 0; L < n_lags && count[L] > 0; ++L) {
    est.lags.push_back(static_cast<double>(L) * delta);
    est.values.push_back(sum[L] / static_cast<double>(count[L]));
  }
  return est;
}

double acf_relative_error(const AcfEstimate& a, const AcfEstimate& b) {
  if (a.lags.empty() || b.lags.empty()) throw DataError("ACF error: empty curve");
  const double tau_end = std::min(a.lags.back(), b.lags.back());
  auto a_at = [&](double tau) {
    auto it = std::lower_bound(a.lags.begin(), a.lags.end(), tau - 1e-12);
    if (it == a.lags.end()) return a.values.back();
    const auto i = static_cast<std::size_t>(it - a.lags.begin());
    if (std::abs(a.lags[i] - tau) <= 1e-12 || i == 0) return a.values[i];
    const double t = (tau - a.lags[i - 1]) / (a.lags[i] - a.lags[i - 1]);
    return a.values[i - 1] + t * (a.values[i] - a.values[i - 1]);
  };
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < b.lags.size() && b.lags[i] <= tau_end + 1e-12; ++i) {
    const double d2 = std::pow(a_at(b.lags[i]) - b.values[i], 2);
    const double b2 = b.values[i] * b.values[i];
    double w = 0.0;
    if (i > 0) w += 0.5 * (b.lags[i] - b.lags[i - 1]);
    if (i + 1 < b.lags.size() && b.lags[i + 1] <= tau_end + 1e-12) {
      w += 0.5 * (b.lags[i + 1] - b.lags[i]);
    }
    num += w * d2;
    den += w * b2;
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

void write_spectrum_csv(const SpectrumEstimate& s, const std::filesystem::path& path) {
  auto os = open_csv(path);
  os << "k,value,stderr\n";
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    os << i + 1 << ',' << s.mean[i] << ',' << s.std_error[i] << '\n';
  }
}

void write_acf_csv(std::span<const AcfEstimate> curves, const std::filesystem::path& path) {
  auto os = open_csv(path);
  os << "k,tau,value\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.lags.size(); ++i) {
      os << c.k << ',' << c.lags[i] << ',' << c.values[i] << '\n';
    }
  }
}

void write_pdf_csv(std::span<const PdfEstimate> pdfs, const std::filesystem::path& path) {
  auto os = open_csv(path);
  os << "k,left,right,mass\n";
  for (const auto& p : pdfs) {
    for (std::size_t b = 0; b < p.masses.size(); ++b) {
      os << p.k << ',' << p.edges[b] << ',' << p.edges[b + 1] << ',' << p.masses[b] << '\n';
    }
  }
}

}  // namespace bnar
