#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "fpforge/spectral.hpp"

namespace fpforge {

inline constexpr double kDefaultPsnrTolerance = 0.25;
inline constexpr std::size_t kMaxBisectionSteps = 60;

enum class StrengthDomain { continuous, integer };

struct Calibration {
  double strength = 0.0;
  double mean_psnr = 0.0;
  std::size_t evaluations = 0;
};

// Mean PSNR of the modified images as a function of strength.
using PsnrCurve = std::function<double(double)>;

// Continuous: bisection on [0, max_strength] until the mean PSNR is within
// tolerance of the target; the bound is widened tenfold once if even the
// maximum is too weak. Integer: the largest strength whose mean PSNR is still
// >= target, assuming PSNR falls with strength. Throws CalibrationError
// carrying the reached PSNR range when the target is out of reach.
Calibration calibrate_curve(const PsnrCurve& curve, StrengthDomain domain, double max_strength, double target_psnr,
                            double tolerance = kDefaultPsnrTolerance);

// Curve helper: mean over images of psnr(image, transform(image, strength)).
// Images are processed in parallel, the mean is summed in index order.
PsnrCurve mean_psnr_curve(std::span<const ImageF> images,
                          std::function<ImageF(std::size_t index, double strength)> transform);

}  // namespace fpforge
