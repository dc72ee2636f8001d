#include "fpforge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace fpforge {

std::string Shape::str() const {
  return std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(channels);
}

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError(std::string(what) + " contains a non-finite value at index " + std::to_string(i));
    }
  }
}

const std::vector<double>& dct_basis(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<const std::vector<double>>> cache;

  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    auto basis = std::make_unique<std::vector<double>>(n * n);
    const double dc = std::sqrt(1.0 / static_cast<double>(n));
    const double ac = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double angle = std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) /
                             (2.0 * static_cast<double>(n));
        (*basis)[k * n + i] = (k == 0 ? dc : ac) * std::cos(angle);
      }
    }
    slot = std::move(basis);
  }
  return *slot;
}

namespace {

// out = B_h * in * B_w^T for one plane (forward), rows first.
void forward_plane(std::span<const double> in, std::span<double> out, std::size_t width, std::size_t height) {
  const auto& bw = dct_basis(width);
  const auto& bh = dct_basis(height);
  std::vector<double> rows(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const double* src = in.data() + y * width;
    for (std::size_t k = 0; k < width; ++k) {
      const double* basis = bw.data() + k * width;
      double acc = 0.0;
      for (std::size_t x = 0; x < width; ++x) acc += src[x] * basis[x];
      rows[y * width + k] = acc;
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t u = 0; u < height; ++u) {
    double* dst = out.data() + u * width;
    for (std::size_t y = 0; y < height; ++y) {
      const double weight = bh[u * height + y];
      const double* src = rows.data() + y * width;
      for (std::size_t k = 0; k < width; ++k) dst[k] += weight * src[k];
    }
  }
}

// out = B_h^T * in * B_w, the transpose path of forward_plane.
void inverse_plane(std::span<const double> in, std::span<double> out, std::size_t width, std::size_t height) {
  const auto& bw = dct_basis(width);
  const auto& bh = dct_basis(height);
  std::vector<double> cols(width * height, 0.0);
  for (std::size_t u = 0; u < height; ++u) {
    const double* src = in.data() + u * width;
    for (std::size_t y = 0; y < height; ++y) {
      const double weight = bh[u * height + y];
      double* dst = cols.data() + y * width;
      for (std::size_t l = 0; l < width; ++l) dst[l] += weight * src[l];
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    double* dst = out.data() + y * width;
    const double* src = cols.data() + y * width;
    for (std::size_t l = 0; l < width; ++l) {
      const double weight = src[l];
      const double* basis = bw.data() + l * width;
      for (std::size_t x = 0; x < width; ++x) dst[x] += weight * basis[x];
    }
  }
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles from the exact angle rather than repeated multiplication.
        const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
        const auto even = data[start + k];
        const auto odd = data[start + k + len / 2] * w;
        data[start + k] = even + odd;
        data[start + k + len / 2] = even - odd;
      }
    }
  }
}

}  // namespace

Spectrum dct2(const ImageF& image) {
  require_finite(image.values(), "image");
  Spectrum out(image.shape());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    forward_plane(image.plane(c), out.plane(c), image.width(), image.height());
  }
  return out;
}

ImageF idct2(const Spectrum& spectrum) {
  require_finite(spectrum.values(), "spectrum");
  ImageF out(spectrum.shape());
  for (std::size_t c = 0; c < spectrum.channels(); ++c) {
    inverse_plane(spectrum.plane(c), out.plane(c), spectrum.width(), spectrum.height());
  }
  return out;
}

MagnitudeSpectrum fft_magnitude(const ImageF& image) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  if (!is_power_of_two(w) || !is_power_of_two(h)) {
    throw ValidationError("fft_magnitude supports power-of-two sizes only (e.g. 32, 64, 128, 256), got " +
                          image.shape().str());
  }
  require_finite(image.values(), "image");

  MagnitudeSpectrum out(image.shape());
  std::vector<std::complex<double>> grid(w * h);
  std::vector<std::complex<double>> line(std::max(w, h));
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto plane = image.plane(c);
    for (std::size_t i = 0; i < w * h; ++i) grid[i] = plane[i];

    line.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(y * w), w, line.begin());
      fft_inplace(line);
      std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::ptrdiff_t>(y * w));
    }
    line.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) line[y] = grid[y * w + x];
      fft_inplace(line);
      for (std::size_t y = 0; y < h; ++y) grid[y * w + x] = line[y];
    }

    auto dst = out.plane(c);
    for (std::size_t i = 0; i < w * h; ++i) dst[i] = std::abs(grid[i]);
  }
  return out;
}

Spectrum log_scale(const Spectrum& spectrum, double eps) {
  if (!(eps > 0.0)) throw ValidationError("log_scale eps must be positive, got " + std::to_string(eps));
  Spectrum out(spectrum.shape());
  auto src = spectrum.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::log(std::abs(src[i]) + eps);
  return out;
}

void clip_in_place(std::span<double> values, double lo, double hi) {
  if (!(lo < hi)) {
    throw ValidationError("clip bounds must satisfy lo < hi, got [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  for (double& v : values) v = std::clamp(v, lo, hi);
}

}  // namespace fpforge
