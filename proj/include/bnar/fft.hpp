#pragma once

#include <complex>
#include <span>

namespace bnar {

/// Real-to-complex DFT of fixed length backed by FFTW.
///
/// Transforms are unnormalized: forward computes X_k = sum_j x_j e^{-2 pi i jk/M},
/// inverse computes x_j = sum_k X_k e^{+2 pi i jk/M} over the full Hermitian
/// spectrum. Plans are made with FFTW_ESTIMATE so results do not depend on
/// run-time measurements. The inverse overwrites the spectrum buffer.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();

  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return size_; }

  std::span<double> samples() { return {real_, static_cast<std::size_t>(size_)}; }
  std::span<std::complex<double>> spectrum() {
    return {spec_, static_cast<std::size_t>(size_ / 2 + 1)};
  }

  void forward();  // samples() -> spectrum()
  void inverse();  // spectrum() -> samples()

 private:
  void release() noexcept;

  int size_ = 0;
  double* real_ = nullptr;
  std::complex<double>* spec_ = nullptr;
  void* plan_forward_ = nullptr;
  void* plan_inverse_ = nullptr;
};

}  // namespace bnar
