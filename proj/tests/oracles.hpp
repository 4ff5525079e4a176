#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the FFT-based code paths.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

/// u_l for l in [-n, n] from the stored k >= 1 half.
inline cplx mode(const std::vector<cplx>& u, int l) {
  const int n = static_cast<int>(u.size());
  if (l == 0 || l > n || l < -n) return {};
  return l > 0 ? u[static_cast<std::size_t>(l - 1)] : std::conj(u[static_cast<std::size_t>(-l - 1)]);
}

/// -(ik/2) sum_{|l|<=n, |k-l|<=n} u_l u_{k-l} for k = 1..n.
inline std::vector<cplx> burgers_convolution(const std::vector<cplx>& u) {
  const int n = static_cast<int>(u.size());
  std::vector<cplx> out(u.size());
  for (int k = 1; k <= n; ++k) {
    cplx s{};
    for (int l = -n; l <= n; ++l) s += mode(u, l) * mode(u, k - l);
    out[static_cast<std::size_t>(k - 1)] = cplx(0.0, -0.5 * k) * s;
  }
  return out;
}

/// u(x) = sum_{|k|<=n} u_k e^{ikx} by direct summation.
inline double evaluate(const std::vector<cplx>& u, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += 2.0 * (u[i] * std::exp(cplx(0.0, static_cast<double>(i + 1) * x))).real();
  }
  return s;
}

inline std::vector<cplx> random_modes(std::mt19937_64& gen, int n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<cplx> u(static_cast<std::size_t>(n));
  for (auto& z : u) z = cplx(nd(gen), nd(gen));
  return u;
}

inline double rel_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
