#include "bnar/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>
#include <utility>

#include "bnar/error.hpp"

namespace bnar {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int size) : size_(size) {
  if (size < 2) throw ConfigError("FFT size must be at least 2");
  const auto n_spec = static_cast<std::size_t>(size / 2 + 1);
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(size)));
  spec_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n_spec));
  if (real_ == nullptr || spec_ == nullptr) {
    release();
    throw std::bad_alloc();
  }
  auto* spec = reinterpret_cast<fftw_complex*>(spec_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_forward_ = fftw_plan_dft_r2c_1d(size, real_, spec, FFTW_ESTIMATE);
  plan_inverse_ = fftw_plan_dft_c2r_1d(size, spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : size_(std::exchange(other.size_, 0)),
      real_(std::exchange(other.real_, nullptr)),
      spec_(std::exchange(other.spec_, nullptr)),
      plan_forward_(std::exchange(other.plan_forward_, nullptr)),
      plan_inverse_(std::exchange(other.plan_inverse_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    size_ = std::exchange(other.size_, 0);
    real_ = std::exchange(other.real_, nullptr);
    spec_ = std::exchange(other.spec_, nullptr);
    plan_forward_ = std::exchange(other.plan_forward_, nullptr);
    plan_inverse_ = std::exchange(other.plan_inverse_, nullptr);
  }
  return *this;
}

void RealFft::release() noexcept {
  if (plan_forward_ != nullptr || plan_inverse_ != nullptr) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_forward_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    if (plan_inverse_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
  }
  plan_forward_ = plan_inverse_ = nullptr;
  fftw_free(real_);
  fftw_free(spec_);
  real_ = nullptr;
  spec_ = nullptr;
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(plan_forward_)); }

void RealFft::inverse() { fftw_execute(static_cast<fftw_plan>(plan_inverse_)); }

}  // namespace bnar
