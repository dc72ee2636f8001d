#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "fpforge/calibration.hpp"
#include "fpforge/spectral.hpp"

namespace fpforge {

// Center crop to floor(f W) x floor(f H), bilinear resize back to W x H.
ImageF crop_resize(const ImageF& image, double keep_fraction);

// i.i.d. Gaussian noise, clamped to [0, 255].
ImageF add_noise(const ImageF& image, double sigma, std::uint64_t seed);

// Separable Gaussian blur, radius ceil(3 sigma), mirrored borders. Output is
// not clamped: a normalized kernel keeps samples in range.
ImageF blur(const ImageF& image, double sigma);

// libjpeg quality scaling of the standard luminance table.
std::array<int, 64> jpeg_quant_table(int quality);

// 8x8 block DCT quantize/dequantize per channel with the scaled luminance
// table; no chroma subsampling or entropy coding.
ImageF jpeg_compress(const ImageF& image, int quality);

enum class PerturbKind { crop, noise, blur, jpeg };

std::string to_string(PerturbKind kind);
PerturbKind parse_perturb_kind(const std::string& text);

// Perturbation with a single monotone "strength" knob, so all four share the
// attacks' PSNR calibration: crop removes `strength` pixels of the shorter
// side, noise and blur use sigma, jpeg uses 100 - quality.
struct PerturbSpec {
  PerturbKind kind = PerturbKind::noise;
  double strength = 0.0;
  std::uint64_t seed = 0;
};

ImageF apply_perturbation(const ImageF& image, const PerturbSpec& spec);

// Human-readable native parameter, e.g. "quality=73".
std::string describe_parameter(const PerturbSpec& spec, const Shape& shape);

// Strength hitting target_psnr; crop and jpeg are integer searches.
Calibration calibrate_perturbation(const PerturbSpec& spec, std::span<const ImageF> images, double target_psnr,
                                   double tolerance = kDefaultPsnrTolerance);

}  // namespace fpforge
