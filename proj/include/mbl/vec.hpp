#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mbl::vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double norm2_sq(std::span<const double> a) { return dot(a, a); }

inline double norm2(std::span<const double> a) { return std::sqrt(norm2_sq(a)); }

inline double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::fabs(v);
  return s;
}

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t j = 0; j < x.size(); ++j) y[j] += alpha * x[j];
}

inline std::vector<double> scaled(std::span<const double> a, double s) {
  std::vector<double> r(a.begin(), a.end());
  for (double& v : r) v *= s;
  return r;
}

inline std::vector<double> sub(std::span<const double> a, std::span<const double> b) {
  std::vector<double> r(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) r[j] = a[j] - b[j];
  return r;
}

inline std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> r(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) r[j] = a[j] + b[j];
  return r;
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

// Unit ell_2 direction; the zero vector stays zero.
inline std::vector<double> unit2(std::span<const double> a) {
  const double n = norm2(a);
  if (n == 0.0) return std::vector<double>(a.size(), 0.0);
  return scaled(a, 1.0 / n);
}

}  // namespace mbl::vec
