#include "fpforge/features.hpp"

#include <cmath>

#include "fpforge/parallel.hpp"

namespace fpforge {

Shape common_shape(std::span<const ImageF> images, const char* what) {
  if (images.empty()) throw ValidationError(std::string(what) + " must not be empty");
  const Shape shape = images.front().shape();
  for (const auto& image : images) {
    if (image.shape() != shape) {
      throw ValidationError(std::string(what) + " mixes shapes " + shape.str() + " and " + image.shape().str());
    }
  }
  return shape;
}

std::vector<double> log_dct_feature_vector(const ImageF& image, double eps) {
  const auto logged = log_scale(dct2(image), eps);
  return logged.storage();
}

FeatureMatrix log_dct_features(std::span<const ImageF> images, double eps) {
  const Shape shape = common_shape(images, "feature images");
  FeatureMatrix features(images.size(), shape.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const auto row = log_dct_feature_vector(images[i], eps);
    for (std::size_t j = 0; j < row.size(); ++j) features(i, j) = row[j];
  });
  return features;
}

Standardizer Standardizer::fit(const FeatureMatrix& features) {
  Standardizer s;
  s.mean.assign(features.cols, 0.0);
  s.scale.assign(features.cols, 1.0);
  const auto n = static_cast<double>(features.rows);
  for (std::size_t j = 0; j < features.cols; ++j) {
    const auto col = features.column(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= n;
    s.mean[j] = mean;
    s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

void Standardizer::apply(FeatureMatrix& features) const {
  if (features.cols != mean.size()) throw ValidationError("standardizer width does not match the features");
  for (std::size_t j = 0; j < features.cols; ++j) {
    for (double& v : features.column(j)) v = (v - mean[j]) / scale[j];
  }
}

void Standardizer::apply(std::span<double> row) const {
  if (row.size() != mean.size()) throw ValidationError("standardizer width does not match the feature vector");
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
}

}  // namespace fpforge
