#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fpforge/features.hpp"
#include "fpforge/metrics.hpp"
#include "fpforge/spectral.hpp"

namespace fpforge {

struct Prediction {
  Label label = Label::natural;
  double score = 0.0;
};

// Mean FFT magnitude of a fake population plus a similarity threshold;
// score >= threshold means fake.
struct CosineModel {
  MagnitudeSpectrum fingerprint;
  double threshold = 0.0;
  std::uint32_t n_fake = 0;
  std::uint32_t n_real = 0;
};

MagnitudeSpectrum cosine_fit(std::span<const ImageF> fakes);

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_score(const ImageF& image, const MagnitudeSpectrum& fingerprint);

// Threshold maximizing balanced accuracy over all midpoints between distinct
// observed scores (plus one point below and above the range). Ties go to the
// smallest threshold.
double best_balanced_threshold(std::span<const double> real_scores, std::span<const double> fake_scores);
double balanced_accuracy(std::span<const double> real_scores, std::span<const double> fake_scores, double threshold);

double cosine_calibrate(std::span<const ImageF> reals, std::span<const ImageF> fakes,
                        const MagnitudeSpectrum& fingerprint);

// cosine_fit on the fakes, threshold from cosine_calibrate on both sets.
CosineModel fit_cosine_detector(std::span<const ImageF> fakes, std::span<const ImageF> reals);
Prediction cosine_predict(const ImageF& image, const CosineModel& model);

// Linear model over standardized log-DCT features, labels +1 fake / -1 real.
struct RidgeModel {
  Shape shape;
  double eps = kDefaultLogEps;
  double lambda = 1.0;
  std::vector<double> weights;  // standardized feature space
  double bias = 0.0;
  Standardizer standardizer;
  std::uint32_t n_fake = 0;
  std::uint32_t n_real = 0;

  // Equivalent model acting on unstandardized features.
  std::vector<double> raw_weights() const;
  double raw_bias() const;
};

struct LinearSolution {
  std::vector<double> weights;
  double bias = 0.0;
};

// (X^T X + lambda I) w = X^T (y - mean y) on column-centered X, solved
// directly (through the n x n dual system when n < d). The bias restores the
// centering. lambda = 0 with a singular system is rejected.
LinearSolution ridge_solve(const FeatureMatrix& features, std::span<const double> targets, double lambda);

double ridge_objective(const FeatureMatrix& features, std::span<const double> targets,
                       std::span<const double> weights, double bias, double lambda);

RidgeModel ridge_fit(std::span<const ImageF> fakes, std::span<const ImageF> reals, double lambda,
                     double eps = kDefaultLogEps);

// Fake iff w.phi + b > 0; a score of exactly 0 is natural.
Prediction ridge_predict(const ImageF& image, const RidgeModel& model);

using DetectorModel = std::variant<CosineModel, RidgeModel>;

std::string detector_name(const DetectorModel& model);
Prediction predict(const DetectorModel& model, const ImageF& image);
std::vector<Prediction> predict_all(const DetectorModel& model, std::span<const ImageF> images);

void save_detector(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_detector(const std::filesystem::path& path);

}  // namespace fpforge
