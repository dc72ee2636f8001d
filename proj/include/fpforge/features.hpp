#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fpforge/spectral.hpp"

namespace fpforge {

// Dense column-major sample-by-feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[c * rows + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data[c * rows + r]; }
  std::span<double> column(std::size_t c) { return {data.data() + c * rows, rows}; }
  std::span<const double> column(std::size_t c) const { return {data.data() + c * rows, rows}; }
};

// Flattened log(|dct2(x)| + eps), channel-major then row-major.
std::vector<double> log_dct_feature_vector(const ImageF& image, double eps);

// One row per image, in input order. All images must share a shape.
FeatureMatrix log_dct_features(std::span<const ImageF> images, double eps);

// Per-feature affine map to zero mean and unit variance. Constant features
// keep scale 1 so they map to zero.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& features);
  void apply(FeatureMatrix& features) const;
  void apply(std::span<double> row) const;
};

// Throws ValidationError if the list is empty or shapes differ.
Shape common_shape(std::span<const ImageF> images, const char* what);

}  // namespace fpforge
