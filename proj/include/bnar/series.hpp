#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bnar/spectral.hpp"

namespace bnar {

/// A time series of K-mode vectors, stored row-major as [step][k-1].
class ModeSeries {
 public:
  ModeSeries() = default;
  ModeSeries(int n_modes, std::size_t n_steps)
      : n_modes_(n_modes), data_(static_cast<std::size_t>(n_modes) * n_steps) {}

  int n_modes() const { return n_modes_; }
  std::size_t steps() const { return n_modes_ == 0 ? 0 : data_.size() / stride(); }

  std::span<cplx> at(std::size_t n) { return {data_.data() + n * stride(), stride()}; }
  std::span<const cplx> at(std::size_t n) const {
    return {data_.data() + n * stride(), stride()};
  }
  /// Wavenumber k is 1-based.
  cplx& operator()(std::size_t n, int k) { return data_[n * stride() + static_cast<std::size_t>(k - 1)]; }
  const cplx& operator()(std::size_t n, int k) const {
    return data_[n * stride() + static_cast<std::size_t>(k - 1)];
  }

  void push_back(std::span<const cplx> row) { data_.insert(data_.end(), row.begin(), row.end()); }
  void reserve(std::size_t n_steps) { data_.reserve(n_steps * stride()); }

  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }

  friend bool operator==(const ModeSeries&, const ModeSeries&) = default;

 private:
  std::size_t stride() const { return static_cast<std::size_t>(n_modes_); }

  int n_modes_ = 0;
  std::vector<cplx> data_;
};

}  // namespace bnar
