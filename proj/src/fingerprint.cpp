#include "fpforge/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fpforge/parallel.hpp"

namespace fpforge {

namespace {

// Element-wise mean of transform(image) over the list. Per-image transforms
// run in parallel chunks; accumulation stays in index order so the result
// does not depend on the thread count.
Spectrum mean_transform(std::span<const ImageF> images, const std::function<Spectrum(const ImageF&)>& transform) {
  const Shape shape = images.front().shape();
  Spectrum sum(shape);
  const std::size_t chunk = std::max<std::size_t>(16, 4 * worker_count());
  std::vector<Spectrum> partial(chunk);
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    const std::size_t n = std::min(chunk, images.size() - start);
    parallel_for(n, [&](std::size_t i) { partial[i] = transform(images[start + i]); });
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = sum.values();
      const auto src = partial[i].values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  const auto count = static_cast<double>(images.size());
  for (double& v : sum.values()) v /= count;
  return sum;
}

Shape check_populations(std::span<const ImageF> fakes, std::span<const ImageF> reals) {
  const Shape fake_shape = common_shape(fakes, "fake images");
  const Shape real_shape = common_shape(reals, "real images");
  if (fake_shape != real_shape) {
    throw ValidationError("fake images are " + fake_shape.str() + " but real images are " + real_shape.str());
  }
  return fake_shape;
}

double soft_threshold(double value, double lambda) {
  if (value > lambda) return value - lambda;
  if (value < -lambda) return value + lambda;
  return 0.0;
}

}  // namespace

std::string to_string(FingerprintKind kind) {
  switch (kind) {
    case FingerprintKind::mean: return "mean";
    case FingerprintKind::peak: return "peak";
    case FingerprintKind::regression: return "regression";
  }
  return "mean";
}

FingerprintKind parse_fingerprint_kind(const std::string& text) {
  if (text == "mean") return FingerprintKind::mean;
  if (text == "peak" || text == "peaks") return FingerprintKind::peak;
  if (text == "regression" || text == "lasso") return FingerprintKind::regression;
  throw ValidationError("unknown fingerprint kind '" + text + "' (expected mean, peak or lasso)");
}

Fingerprint estimate_mean_fingerprint(std::span<const ImageF> fakes, std::span<const ImageF> reals) {
  check_populations(fakes, reals);
  const Spectrum fake_mean = mean_transform(fakes, [](const ImageF& x) { return dct2(x); });
  const Spectrum real_mean = mean_transform(reals, [](const ImageF& x) { return dct2(x); });

  Fingerprint fp;
  fp.kind = FingerprintKind::mean;
  fp.values = fake_mean;
  auto dst = fp.values.values();
  const auto sub = real_mean.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= sub[i];
  fp.n_fake = static_cast<std::uint32_t>(fakes.size());
  fp.n_real = static_cast<std::uint32_t>(reals.size());
  return fp;
}

Fingerprint estimate_peak_fingerprint(std::span<const ImageF> fakes, std::span<const ImageF> reals, double eps) {
  check_populations(fakes, reals);
  if (!(eps > 0.0)) throw ValidationError("peak fingerprint eps must be positive");
  const auto logged = [eps](const ImageF& x) { return log_scale(dct2(x), eps); };
  const Spectrum fake_mean = mean_transform(fakes, logged);
  const Spectrum real_mean = mean_transform(reals, logged);

  Fingerprint fp;
  fp.kind = FingerprintKind::peak;
  fp.eps = eps;
  fp.values = fake_mean;
  auto dst = fp.values.values();
  const auto sub = real_mean.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::exp(dst[i] - sub[i]);
  fp.n_fake = static_cast<std::uint32_t>(fakes.size());
  fp.n_real = static_cast<std::uint32_t>(reals.size());
  return fp;
}

Spectrum peak_mask(const Fingerprint& fp, double threshold) {
  if (fp.kind != FingerprintKind::peak) throw ValidationError("peak processing needs a peak fingerprint");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("peak threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
  require_finite(fp.values.values(), "peak fingerprint");

  Spectrum mask(fp.shape());
  const auto src = fp.values.values();
  const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
  const double low = *lo;
  const double range = *hi - *lo;
  if (range <= 0.0) return mask;

  auto dst = mask.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    // The maximum maps to exactly 1 so t = 1 keeps it.
    const double scaled = src[i] == *hi ? 1.0 : (src[i] - low) / range;
    dst[i] = scaled >= threshold ? scaled : 0.0;
  }
  return mask;
}

Fingerprint process_peak_fingerprint(const Fingerprint& fp, double threshold, double strength) {
  if (!(strength >= 0.0) || !std::isfinite(strength)) {
    throw ValidationError("peak strength must be finite and non-negative");
  }
  Fingerprint out = fp;
  out.values = peak_mask(fp, threshold);
  for (double& v : out.values.values()) v = std::clamp(strength * v, 0.0, 1.0);
  return out;
}

void LassoConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lasso lambda must be non-negative");
  if (max_iterations < 1) throw ValidationError("lasso max_iterations must be at least 1");
  if (!(tolerance > 0.0)) throw ValidationError("lasso tolerance must be positive");
}

double lasso_objective(const FeatureMatrix& features, std::span<const double> targets,
                       std::span<const double> weights, double intercept, double lambda) {
  std::vector<double> residual(targets.begin(), targets.end());
  for (double& r : residual) r -= intercept;
  for (std::size_t j = 0; j < features.cols; ++j) {
    if (weights[j] == 0.0) continue;
    const auto col = features.column(j);
    for (std::size_t i = 0; i < features.rows; ++i) residual[i] -= col[i] * weights[j];
  }
  double loss = 0.0;
  for (double r : residual) loss += r * r;
  double penalty = 0.0;
  for (double w : weights) penalty += std::abs(w);
  return loss / (2.0 * static_cast<double>(features.rows)) + lambda * penalty;
}

LassoFit lasso_coordinate_descent(const FeatureMatrix& features, std::span<const double> targets,
                                  const LassoConfig& cfg) {
  cfg.validate();
  if (features.rows == 0 || features.cols == 0) throw ValidationError("lasso needs a non-empty feature matrix");
  if (targets.size() != features.rows) throw ValidationError("lasso target count does not match the rows");

  const std::size_t n = features.rows;
  const std::size_t d = features.cols;
  const auto inv_n = 1.0 / static_cast<double>(n);

  // Centered copy: the optimal intercept then separates out exactly.
  FeatureMatrix centered = features;
  std::vector<double> col_mean(d, 0.0);
  std::vector<double> col_power(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    auto col = centered.column(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean *= inv_n;
    double power = 0.0;
    for (double& v : col) {
      v -= mean;
      power += v * v;
    }
    col_mean[j] = mean;
    col_power[j] = power * inv_n;
  }
  double y_mean = 0.0;
  for (double y : targets) y_mean += y;
  y_mean *= inv_n;
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = targets[i] - y_mean;

  LassoFit fit;
  fit.weights.assign(d, 0.0);
  const auto objective = [&] {
    double loss = 0.0;
    for (double r : residual) loss += r * r;
    double penalty = 0.0;
    for (double w : fit.weights) penalty += std::abs(w);
    return 0.5 * loss * inv_n + cfg.lambda * penalty;
  };

  for (std::size_t sweep = 0; sweep < cfg.max_iterations; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (col_power[j] <= 0.0) continue;
      const auto col = centered.column(j);
      const double old = fit.weights[j];
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += col[i] * residual[i];
      rho = rho * inv_n + col_power[j] * old;
      const double updated = soft_threshold(rho, cfg.lambda) / col_power[j];
      const double delta = updated - old;
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= col[i] * delta;
        fit.weights[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    fit.objective_history.push_back(objective());
    fit.sweeps = sweep + 1;
    if (max_change < cfg.tolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.intercept = y_mean;
  for (std::size_t j = 0; j < d; ++j) fit.intercept -= col_mean[j] * fit.weights[j];
  return fit;
}

LassoResult train_lasso(std::span<const ImageF> fakes, std::span<const ImageF> reals, const LassoConfig& cfg,
                        double eps, std::uint64_t seed) {
  cfg.validate();
  const Shape shape = check_populations(fakes, reals);

  std::vector<ImageF> all;
  all.reserve(fakes.size() + reals.size());
  all.insert(all.end(), fakes.begin(), fakes.end());
  all.insert(all.end(), reals.begin(), reals.end());
  FeatureMatrix features = log_dct_features(all, eps);
  std::vector<double> labels(all.size(), 0.0);
  std::fill_n(labels.begin(), fakes.size(), 1.0);

  LassoResult result;
  result.standardizer = Standardizer::fit(features);
  result.standardizer.apply(features);
  result.fit = lasso_coordinate_descent(features, labels, cfg);

  result.fingerprint.kind = FingerprintKind::regression;
  result.fingerprint.values = Spectrum(shape);
  auto dst = result.fingerprint.values.values();
  for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = result.fit.weights[j] / result.standardizer.scale[j];
  result.fingerprint.eps = eps;
  result.fingerprint.n_fake = static_cast<std::uint32_t>(fakes.size());
  result.fingerprint.n_real = static_cast<std::uint32_t>(reals.size());
  result.fingerprint.seed = seed;
  return result;
}

}  // namespace fpforge
