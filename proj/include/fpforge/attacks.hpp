#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>

#include "fpforge/calibration.hpp"
#include "fpforge/fingerprint.hpp"
#include "fpforge/spectral.hpp"

namespace fpforge {

// `none` is the identity and exists so reports can carry the unattacked
// baseline in the same shape as real attacks.
enum class AttackKind { none, bars, mean, peaks, regression };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& text);

struct AttackSpec {
  AttackKind kind = AttackKind::none;
  // Bar width in coefficients for bars, fingerprint multiplier otherwise.
  double strength = 0.0;
  // Peak threshold t in [0, 1]; peaks only.
  double threshold = 0.0;
  // Raw fingerprint of the matching kind. Peak attacks take the unprocessed
  // peak fingerprint and process it with (threshold, strength).
  std::shared_ptr<const Fingerprint> fingerprint;

  void validate(const Shape& shape) const;
};

// Zero DCT rows >= H - s and columns >= W - s, invert, clamp.
ImageF attack_bars(const ImageF& image, std::size_t width);
// idct2(dct2(G) - s F_m), clamped.
ImageF attack_mean(const ImageF& image, const Fingerprint& fp, double strength);
// idct2(dct2(G) * (1 - F~_p)) for a processed fingerprint with values in [0, 1].
ImageF attack_peaks(const ImageF& image, const Fingerprint& processed);
// idct2(dct2(G) * (1 - clip(s F_r, -1, 1))), clamped. Negative weights amplify.
ImageF attack_regression(const ImageF& image, const Fingerprint& fp, double strength);

// The manipulated spectrum before inversion and clamping.
Spectrum attacked_spectrum(const Spectrum& spectrum, const AttackSpec& spec);

ImageF apply_attack(const ImageF& image, const AttackSpec& spec);

// Largest meaningful strength for a kind before widening: bars use the image
// size, the fingerprint attacks fixed bounds.
double max_strength(AttackKind kind, const Shape& shape);

// Strength for `spec` (its own strength is ignored) whose mean PSNR over the
// images hits target_psnr. Bars pick the widest bar still >= target.
Calibration calibrate_strength(const AttackSpec& spec, std::span<const ImageF> images, double target_psnr,
                               double tolerance = kDefaultPsnrTolerance);

}  // namespace fpforge
