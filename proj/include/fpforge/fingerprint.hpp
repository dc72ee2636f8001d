#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpforge/features.hpp"
#include "fpforge/spectral.hpp"

namespace fpforge {

enum class FingerprintKind : std::uint8_t { mean = 0, peak = 1, regression = 2 };

std::string to_string(FingerprintKind kind);
FingerprintKind parse_fingerprint_kind(const std::string& text);

// Per-channel coefficient pattern in DCT layout.
struct Fingerprint {
  FingerprintKind kind = FingerprintKind::mean;
  Spectrum values;
  double eps = kDefaultLogEps;
  std::uint32_t n_fake = 0;
  std::uint32_t n_real = 0;
  std::uint64_t seed = 0;

  const Shape& shape() const { return values.shape(); }
  bool operator==(const Fingerprint&) const = default;
};

// mean(dct2(fakes)) - mean(dct2(reals))
Fingerprint estimate_mean_fingerprint(std::span<const ImageF> fakes, std::span<const ImageF> reals);

// exp(mean(log|dct2(fakes)|) - mean(log|dct2(reals)|)), strictly positive.
Fingerprint estimate_peak_fingerprint(std::span<const ImageF> fakes, std::span<const ImageF> reals,
                                      double eps = kDefaultLogEps);

// Min-max scale (jointly over channels) to [0, 1] and zero entries below t.
// A constant fingerprint has no peaks and scales to all zeros.
Spectrum peak_mask(const Fingerprint& fp, double threshold);

// clip(s * peak_mask(fp, t), 0, 1), ready for attack_peaks.
Fingerprint process_peak_fingerprint(const Fingerprint& fp, double threshold, double strength);

struct LassoConfig {
  double lambda = 0.01;
  std::size_t max_iterations = 1000;
  double tolerance = 1e-7;

  void validate() const;
};

struct LassoFit {
  std::vector<double> weights;
  double intercept = 0.0;
  bool converged = false;
  std::size_t sweeps = 0;
  // Objective after each full coordinate sweep.
  std::vector<double> objective_history;
};

// Minimizes (1/2n) ||y - b - X w||^2 + lambda ||w||_1 by cyclic coordinate
// descent over features 0..d-1. The intercept is handled exactly by centering.
LassoFit lasso_coordinate_descent(const FeatureMatrix& features, std::span<const double> targets,
                                  const LassoConfig& cfg);

double lasso_objective(const FeatureMatrix& features, std::span<const double> targets,
                       std::span<const double> weights, double intercept, double lambda);

struct LassoResult {
  Fingerprint fingerprint;  // weights divided by the feature scale
  LassoFit fit;             // in standardized feature space
  Standardizer standardizer;
};

// Lasso on standardized log-DCT features with labels fake = 1, real = 0.
LassoResult train_lasso(std::span<const ImageF> fakes, std::span<const ImageF> reals, const LassoConfig& cfg,
                        double eps = kDefaultLogEps, std::uint64_t seed = 0);

struct ThresholdScore {
  double threshold = 0.0;
  double strength = 0.0;
  double mean_psnr = 0.0;
  double success_rate = 0.0;
  bool saturated = false;  // target not reachable, strongest attack used
};

struct ThresholdSearch {
  double best_threshold = 0.0;
  std::vector<ThresholdScore> scores;
};

// Picks the peak threshold whose PSNR-calibrated attack fools a ridge
// surrogate fit on the same hold-out split most often. Ties go to the smaller
// threshold.
ThresholdSearch grid_search_peak_threshold(std::span<const ImageF> fakes_holdout,
                                           std::span<const ImageF> reals_holdout,
                                           std::span<const double> candidate_thresholds, double target_psnr,
                                           double ridge_lambda = 1.0, double tolerance = 0.25);

void save_fingerprint(const Fingerprint& fp, const std::filesystem::path& path);
Fingerprint load_fingerprint(const std::filesystem::path& path);
// Additionally rejects files whose shape differs from `expected`.
Fingerprint load_fingerprint(const std::filesystem::path& path, const Shape& expected);

}  // namespace fpforge
