#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "fpforge/random.hpp"
#include "fpforge/spectral.hpp"

namespace fpforge::test {

inline ImageF random_image(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed, bool integer = false) {
  SplitMix64 rng(seed);
  ImageF image(Shape{w, h, c});
  for (double& v : image.values()) {
    v = rng.uniform() * 255.0;
    if (integer) v = std::floor(v);
  }
  return image;
}

inline ImageF constant_image(std::size_t w, std::size_t h, std::size_t c, double value) {
  return ImageF(Shape{w, h, c}, value);
}

// Orthonormal DCT-II straight from the definition.
inline Spectrum naive_dct2(const ImageF& image) {
  const auto& s = image.shape();
  Spectrum out(s);
  const double pi = std::numbers::pi;
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t k = 0; k < s.height; ++k)
      for (std::size_t l = 0; l < s.width; ++l) {
        double sum = 0.0;
        for (std::size_t y = 0; y < s.height; ++y)
          for (std::size_t x = 0; x < s.width; ++x)
            sum += image.at(c, y, x) * std::cos(pi * (2.0 * y + 1.0) * k / (2.0 * s.height)) *
                   std::cos(pi * (2.0 * x + 1.0) * l / (2.0 * s.width));
        const double ak = k == 0 ? std::sqrt(1.0 / s.height) : std::sqrt(2.0 / s.height);
        const double al = l == 0 ? std::sqrt(1.0 / s.width) : std::sqrt(2.0 / s.width);
        out.at(c, k, l) = ak * al * sum;
      }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double energy(std::span<const double> v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

// Dense Gaussian elimination with partial pivoting; A is row-major n x n.
inline std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t k = i + 1; k < n; ++k) sum -= a[i * n + k] * x[k];
    x[i] = sum / a[i * n + i];
  }
  return x;
}

}  // namespace fpforge::test
