#include "fpforge/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fpforge/imageio.hpp"
#include "fpforge/parallel.hpp"

namespace fpforge {

namespace {

void require_fingerprint(const Fingerprint& fp, FingerprintKind kind, const Shape& shape) {
  if (fp.kind != kind) {
    throw ValidationError("attack needs a " + to_string(kind) + " fingerprint, got " + to_string(fp.kind));
  }
  if (fp.shape() != shape) {
    throw ValidationError("fingerprint shape " + fp.shape().str() + " does not match image " + shape.str());
  }
}

void zero_bars(Spectrum& spectrum, std::size_t width) {
  const std::size_t w = spectrum.width();
  const std::size_t h = spectrum.height();
  for (std::size_t c = 0; c < spectrum.channels(); ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (y + width >= h || x + width >= w) spectrum.at(c, y, x) = 0.0;
      }
    }
  }
}

// y <- y * (1 - mask) element-wise.
void suppress(Spectrum& spectrum, std::span<const double> mask) {
  auto values = spectrum.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] *= 1.0 - mask[i];
}

ImageF finish(const Spectrum& spectrum) {
  ImageF image = idct2(spectrum);
  clamp_to_range(image);
  return image;
}

}  // namespace

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::bars: return "bars";
    case AttackKind::mean: return "mean";
    case AttackKind::peaks: return "peaks";
    case AttackKind::regression: return "regression";
  }
  return "none";
}

AttackKind parse_attack_kind(const std::string& text) {
  if (text == "none") return AttackKind::none;
  if (text == "bars") return AttackKind::bars;
  if (text == "mean") return AttackKind::mean;
  if (text == "peaks" || text == "peak") return AttackKind::peaks;
  if (text == "regression") return AttackKind::regression;
  throw ValidationError("unknown attack kind '" + text + "' (expected bars, mean, peaks or regression)");
}

void AttackSpec::validate(const Shape& shape) const {
  if (!(strength >= 0.0) || !std::isfinite(strength)) {
    throw ValidationError("attack strength must be finite and non-negative");
  }
  switch (kind) {
    case AttackKind::none: return;
    case AttackKind::bars:
      if (strength != std::floor(strength) || strength > static_cast<double>(std::min(shape.width, shape.height))) {
        throw ValidationError("bar width must be an integer in [0, " +
                              std::to_string(std::min(shape.width, shape.height)) + "]");
      }
      return;
    case AttackKind::mean:
    case AttackKind::peaks:
    case AttackKind::regression:
      if (!fingerprint) throw ValidationError(to_string(kind) + " attack needs a fingerprint");
      if (kind == AttackKind::peaks && !(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("peak threshold must lie in [0, 1]");
      }
      require_fingerprint(*fingerprint,
                          kind == AttackKind::mean    ? FingerprintKind::mean
                          : kind == AttackKind::peaks ? FingerprintKind::peak
                                                      : FingerprintKind::regression,
                          shape);
      return;
  }
}

Spectrum attacked_spectrum(const Spectrum& spectrum, const AttackSpec& spec) {
  spec.validate(spectrum.shape());
  Spectrum out = spectrum;
  switch (spec.kind) {
    case AttackKind::none:
      break;
    case AttackKind::bars:
      zero_bars(out, static_cast<std::size_t>(spec.strength));
      break;
    case AttackKind::mean: {
      auto values = out.values();
      const auto fp = spec.fingerprint->values.values();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= spec.strength * fp[i];
      break;
    }
    case AttackKind::peaks: {
      const Fingerprint processed = process_peak_fingerprint(*spec.fingerprint, spec.threshold, spec.strength);
      suppress(out, processed.values.values());
      break;
    }
    case AttackKind::regression: {
      std::vector<double> mask(spec.fingerprint->values.storage());
      for (double& v : mask) v = std::clamp(spec.strength * v, -1.0, 1.0);
      suppress(out, mask);
      break;
    }
  }
  return out;
}

ImageF apply_attack(const ImageF& image, const AttackSpec& spec) {
  spec.validate(image.shape());
  if (spec.kind == AttackKind::none) return image;
  return finish(attacked_spectrum(dct2(image), spec));
}

ImageF attack_bars(const ImageF& image, std::size_t width) {
  const std::size_t limit = std::min(image.width(), image.height());
  if (width > limit) {
    throw ValidationError("bar width " + std::to_string(width) + " exceeds " + std::to_string(limit));
  }
  Spectrum spectrum = dct2(image);
  zero_bars(spectrum, width);
  return finish(spectrum);
}

ImageF attack_mean(const ImageF& image, const Fingerprint& fp, double strength) {
  AttackSpec spec{AttackKind::mean, strength, 0.0, std::make_shared<const Fingerprint>(fp)};
  return apply_attack(image, spec);
}

ImageF attack_peaks(const ImageF& image, const Fingerprint& processed) {
  require_fingerprint(processed, FingerprintKind::peak, image.shape());
  const auto mask = processed.values.values();
  for (double v : mask) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("attack_peaks needs a processed peak fingerprint with values in [0, 1]");
    }
  }
  Spectrum spectrum = dct2(image);
  suppress(spectrum, mask);
  return finish(spectrum);
}

ImageF attack_regression(const ImageF& image, const Fingerprint& fp, double strength) {
  AttackSpec spec{AttackKind::regression, strength, 0.0, std::make_shared<const Fingerprint>(fp)};
  return apply_attack(image, spec);
}

double max_strength(AttackKind kind, const Shape& shape) {
  switch (kind) {
    case AttackKind::bars: return static_cast<double>(std::min(shape.width, shape.height));
    case AttackKind::mean: return 1e4;
    case AttackKind::regression: return 1e3;
    case AttackKind::peaks: return 1e2;
    case AttackKind::none: break;
  }
  throw ValidationError("the identity attack has no strength to calibrate");
}

Calibration calibrate_strength(const AttackSpec& spec, std::span<const ImageF> images, double target_psnr,
                               double tolerance) {
  const Shape shape = common_shape(images, "calibration images");
  AttackSpec probe = spec;
  probe.strength = 0.0;
  probe.validate(shape);
  const double top = max_strength(spec.kind, shape);

  std::vector<Spectrum> spectra(images.size());
  parallel_for(images.size(), [&](std::size_t i) { spectra[i] = dct2(images[i]); });

  // Peak masks depend only on the threshold; build the mask once.
  std::vector<double> peak_mask_values;
  if (spec.kind == AttackKind::peaks) peak_mask_values = peak_mask(*spec.fingerprint, spec.threshold).storage();

  const auto curve = mean_psnr_curve(images, [&](std::size_t i, double strength) {
    if (spec.kind == AttackKind::peaks) {
      Spectrum out = spectra[i];
      auto values = out.values();
      for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] *= 1.0 - std::clamp(strength * peak_mask_values[k], 0.0, 1.0);
      }
      return finish(out);
    }
    AttackSpec trial = spec;
    trial.strength = strength;
    return finish(attacked_spectrum(spectra[i], trial));
  });
  const auto domain = spec.kind == AttackKind::bars ? StrengthDomain::integer : StrengthDomain::continuous;
  return calibrate_curve(curve, domain, top, target_psnr, tolerance);
}

}  // namespace fpforge
