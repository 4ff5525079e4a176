#pragma once

// Validation statistics of resolved-mode time series: energy spectrum,
// marginal densities of Re u_k with Kolmogorov-Smirnov distance, and
// uncentered autocorrelations of Re u_k with their L2 relative error.

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "bnar/series.hpp"

namespace bnar {

struct SpectrumEstimate {
  std::vector<double> mean;    // E|u_k|^2, index k-1
  std::vector<double> std_error;  // sample standard deviation / sqrt(n)
  std::size_t n_samples = 0;
};

/// Pools rows [skip, end) of every series. Uses the first K modes.
SpectrumEstimate energy_spectrum(std::span<const ModeSeries> data, int K, std::size_t skip = 0);

/// |model - truth| / truth per wavenumber.
std::vector<double> relative_spectrum_error(const SpectrumEstimate& model,
                                            const SpectrumEstimate& truth);

struct PdfEstimate {
  int k = 0;
  std::vector<double> edges;   // bins + 1 entries
  std::vector<double> masses;  // sums to 1
  std::vector<double> sorted;  // all samples, ascending; the empirical CDF
};

/// Histogram of Re u_k: Freedman-Diaconis bin width, at least 50 bins.
PdfEstimate marginal_pdf(std::span<const ModeSeries> data, int k, std::size_t skip = 0);

/// sup_x |F_a(x) - F_b(x)| over the empirical CDFs.
double ks_statistic(std::span<const double> sorted_a, std::span<const double> sorted_b);
double ks_statistic(const PdfEstimate& a, const PdfEstimate& b);

struct AcfEstimate {
  int k = 0;
  double delta = 0.0;
  std::vector<double> lags;
  std::vector<double> values;  // E[Re u_k(t + tau) Re u_k(t)]
};

/// Uncentered ACF at lags 0, delta, ..., up to tau_max, averaged over every
/// pair available in every series.
AcfEstimate acf(std::span<const ModeSeries> data, int k, double delta, double tau_max = 3.0,
                std::size_t skip = 0);

/// |a - b|_{L2} / |b|_{L2} by the trapezoid rule on b's lag grid, over the
/// common lag range; a is linearly interpolated when the grids differ.
double acf_relative_error(const AcfEstimate& a, const AcfEstimate& b);

/// CSV writers. Header rows: "k,value,stderr"; "k,tau,value";
/// "k,left,right,mass".
void write_spectrum_csv(const SpectrumEstimate& s, const std::filesystem::path& path);
void write_acf_csv(std::span<const AcfEstimate> curves, const std::filesystem::path& path);
void write_pdf_csv(std::span<const PdfEstimate> pdfs, const std::filesystem::path& path);

}  // namespace bnar
