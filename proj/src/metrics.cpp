#include "fpforge/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fpforge/imageio.hpp"

namespace fpforge {

double psnr(const ImageF& a, const ImageF& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("psnr needs equal shapes, got " + a.shape().str() + " and " + b.shape().str());
  }
  require_finite(a.values(), "image");
  require_finite(b.values(), "image");
  const auto qa = quantize_8bit(a);
  const auto qb = quantize_8bit(b);
  double sse = 0.0;
  const auto va = qa.values();
  const auto vb = qb.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    sse += d * d;
  }
  if (sse == 0.0) return kInfinitePsnr;
  const double mse = sse / static_cast<double>(va.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double mean_psnr(std::span<const ImageF> originals, std::span<const ImageF> modified) {
  if (originals.size() != modified.size() || originals.empty()) {
    throw ValidationError("mean_psnr needs two non-empty lists of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < originals.size(); ++i) total += psnr(originals[i], modified[i]);
  return total / static_cast<double>(originals.size());
}

const char* to_string(Label label) { return label == Label::fake ? "fake" : "natural"; }

double success_rate(std::span<const Label> predictions) {
  if (predictions.empty()) return 0.0;
  const auto natural = std::count(predictions.begin(), predictions.end(), Label::natural);
  return static_cast<double>(natural) / static_cast<double>(predictions.size());
}

double accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw ValidationError("accuracy needs equally long label lists");
  if (predicted.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

}  // namespace fpforge
