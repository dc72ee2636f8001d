#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fpforge/error.hpp"

namespace fpforge {

struct Shape {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;

  std::size_t plane_size() const { return width * height; }
  std::size_t size() const { return width * height * channels; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Channel-planar real array: samples[c * H * W + y * W + x].
// The tag keeps spatial images and spectra apart at the type level.
template <class Tag>
class PlanarArray {
 public:
  PlanarArray() = default;
  explicit PlanarArray(Shape shape, double fill = 0.0) : shape_(shape), values_(checked(shape).size(), fill) {}
  PlanarArray(Shape shape, std::vector<double> values) : shape_(checked(shape)), values_(std::move(values)) {
    if (values_.size() != shape_.size()) {
      throw ValidationError("sample count " + std::to_string(values_.size()) + " does not match shape " +
                            shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t width() const { return shape_.width; }
  std::size_t height() const { return shape_.height; }
  std::size_t channels() const { return shape_.channels; }
  bool empty() const { return values_.empty(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) { return values_[index(c, y, x)]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return values_[index(c, y, x)]; }
  std::size_t index(std::size_t c, std::size_t y, std::size_t x) const {
    return (c * shape_.height + y) * shape_.width + x;
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> plane(std::size_t c) { return {values_.data() + c * shape_.plane_size(), shape_.plane_size()}; }
  std::span<const double> plane(std::size_t c) const {
    return {values_.data() + c * shape_.plane_size(), shape_.plane_size()};
  }
  std::vector<double>& storage() { return values_; }
  const std::vector<double>& storage() const { return values_; }

  bool operator==(const PlanarArray&) const = default;

 private:
  static Shape checked(Shape s) {
    if (s.width == 0 || s.height == 0) throw ValidationError("array dimensions must be positive, got " + s.str());
    if (s.channels != 1 && s.channels != 3) {
      throw ValidationError("channel count must be 1 or 3, got " + std::to_string(s.channels));
    }
    return s;
  }

  Shape shape_{};
  std::vector<double> values_;
};

struct ImageTag {};
struct SpectrumTag {};
struct MagnitudeTag {};

// Spatial image, nominal sample range [0, 255].
using ImageF = PlanarArray<ImageTag>;
// Orthonormal DCT-II coefficients; (0, 0) is DC.
using Spectrum = PlanarArray<SpectrumTag>;
// |DFT| per bin, unshifted layout.
using MagnitudeSpectrum = PlanarArray<MagnitudeTag>;

inline constexpr double kDefaultLogEps = 1e-12;

// Throws ValidationError naming `what` when any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

Spectrum dct2(const ImageF& image);
ImageF idct2(const Spectrum& spectrum);

// Radix-2 only: width and height must be powers of two.
MagnitudeSpectrum fft_magnitude(const ImageF& image);

// log(|c| + eps) element-wise; the sign is dropped.
Spectrum log_scale(const Spectrum& spectrum, double eps = kDefaultLogEps);

void clip_in_place(std::span<double> values, double lo, double hi);

template <class Tag>
PlanarArray<Tag> clip_view(PlanarArray<Tag> values, double lo, double hi) {
  clip_in_place(values.values(), lo, hi);
  return values;
}

// Orthonormal DCT-II basis for length n, row k holds basis vector k.
// Cached per length and shared between threads.
const std::vector<double>& dct_basis(std::size_t n);

}  // namespace fpforge
