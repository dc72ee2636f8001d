#include "fpforge/calibration.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "fpforge/metrics.hpp"
#include "fpforge/parallel.hpp"

namespace fpforge {

namespace {

std::string describe(double value) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed << value;
  return std::isinf(value) ? std::string("inf") : out.str();
}

Calibration calibrate_integer(const PsnrCurve& curve, double max_strength, double target) {
  const auto top = static_cast<long long>(std::floor(max_strength));
  Calibration result;
  const double at_top = curve(static_cast<double>(top));
  ++result.evaluations;
  if (at_top >= target) {
    result.strength = static_cast<double>(top);
    result.mean_psnr = at_top;
    return result;
  }
  long long lo = 0;
  long long hi = top;
  double lo_psnr = kInfinitePsnr;
  double hi_psnr = at_top;
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    const double p = curve(static_cast<double>(mid));
    ++result.evaluations;
    if (p >= target) {
      lo = mid;
      lo_psnr = p;
    } else {
      hi = mid;
      hi_psnr = p;
    }
  }
  if (lo == 0) {
    throw CalibrationError("target " + describe(target) + " dB unreachable: the smallest non-zero strength already gives " +
                               describe(hi_psnr) + " dB",
                           hi_psnr, kInfinitePsnr);
  }
  result.strength = static_cast<double>(lo);
  result.mean_psnr = lo_psnr;
  return result;
}

}  // namespace

Calibration calibrate_curve(const PsnrCurve& curve, StrengthDomain domain, double max_strength, double target,
                            double tolerance) {
  if (!(target > 0.0) || !std::isfinite(target)) throw ValidationError("target PSNR must be positive and finite");
  if (!(tolerance > 0.0)) throw ValidationError("PSNR tolerance must be positive");
  if (!(max_strength > 0.0)) throw ValidationError("maximum strength must be positive");
  if (domain == StrengthDomain::integer) return calibrate_integer(curve, max_strength, target);

  Calibration result;
  double hi = max_strength;
  double hi_psnr = curve(hi);
  ++result.evaluations;
  if (hi_psnr > target + tolerance) {
    hi *= 10.0;
    hi_psnr = curve(hi);
    ++result.evaluations;
    if (hi_psnr > target + tolerance) {
      throw CalibrationError("target " + describe(target) + " dB unreachable: strength " + describe(hi) +
                                 " still gives " + describe(hi_psnr) + " dB",
                             hi_psnr, kInfinitePsnr);
    }
  }

  double lo = 0.0;
  double lowest = hi_psnr;
  double highest = -std::numeric_limits<double>::infinity();
  for (std::size_t step = 0; step < kMaxBisectionSteps; ++step) {
    const double mid = 0.5 * (lo + hi);
    const double p = curve(mid);
    ++result.evaluations;
    lowest = std::min(lowest, p);
    highest = std::max(highest, p);
    if (std::abs(p - target) <= tolerance) {
      result.strength = mid;
      result.mean_psnr = p;
      return result;
    }
    if (p > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw CalibrationError("bisection did not reach " + describe(target) + " +/- " + describe(tolerance) + " dB",
                         lowest, highest);
}

PsnrCurve mean_psnr_curve(std::span<const ImageF> images,
                          std::function<ImageF(std::size_t index, double strength)> transform) {
  if (images.empty()) throw ValidationError("calibration needs at least one image");
  return [images, transform = std::move(transform)](double strength) {
    std::vector<double> values(images.size());
    parallel_for(images.size(), [&](std::size_t i) { values[i] = psnr(images[i], transform(i, strength)); });
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
  };
}

}  // namespace fpforge
