#include "fpforge/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "fpforge/imageio.hpp"
#include "fpforge/random.hpp"

namespace fpforge {

namespace {

constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto len = static_cast<std::ptrdiff_t>(n);
  if (len == 1) return 0;
  const std::ptrdiff_t period = 2 * len;
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  // Half-sample symmetric: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
  return static_cast<std::size_t>(m < len ? m : period - 1 - m);
}

double bilinear_sample(std::span<const double> plane, std::size_t w, std::size_t h, double sx, double sy) {
  sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
  const auto x0 = static_cast<std::size_t>(sx);
  const auto y0 = static_cast<std::size_t>(sy);
  const std::size_t x1 = std::min(x0 + 1, w - 1);
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const double tx = sx - static_cast<double>(x0);
  const double ty = sy - static_cast<double>(y0);
  const double top = (1 - tx) * plane[y0 * w + x0] + tx * plane[y0 * w + x1];
  const double bottom = (1 - tx) * plane[y1 * w + x0] + tx * plane[y1 * w + x1];
  return (1 - ty) * top + ty * bottom;
}

}  // namespace

ImageF crop_resize(const ImageF& image, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ValidationError("crop keep fraction must lie in (0, 1], got " + std::to_string(keep_fraction));
  }
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  const auto cw = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(w))));
  const auto ch = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(h))));
  if (cw == w && ch == h) return image;
  const std::size_t left = (w - cw) / 2;
  const std::size_t top = (h - ch) / 2;

  ImageF out(image.shape());
  const double scale_x = static_cast<double>(cw) / static_cast<double>(w);
  const double scale_y = static_cast<double>(ch) / static_cast<double>(h);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto plane = image.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      // Pixel centers of the output mapped into the crop window.
      const double sy = static_cast<double>(top) + (static_cast<double>(y) + 0.5) * scale_y - 0.5;
      for (std::size_t x = 0; x < w; ++x) {
        const double sx = static_cast<double>(left) + (static_cast<double>(x) + 0.5) * scale_x - 0.5;
        out.at(c, y, x) = bilinear_sample(plane, w, h, std::clamp(sx, static_cast<double>(left), static_cast<double>(left + cw - 1)),
                                          std::clamp(sy, static_cast<double>(top), static_cast<double>(top + ch - 1)));
      }
    }
  }
  return out;
}

ImageF add_noise(const ImageF& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("noise sigma must be non-negative");
  if (sigma == 0.0) return image;
  SplitMix64 rng(seed);
  ImageF out = image;
  for (double& v : out.values()) v = std::clamp(v + sigma * rng.normal(), 0.0, 255.0);
  return out;
}

ImageF blur(const ImageF& image, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("blur sigma must be non-negative");
  if (sigma < 1e-6) return image;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : kernel) v /= total;

  const std::size_t w = image.width();
  const std::size_t h = image.height();
  ImageF out(image.shape());
  std::vector<double> tmp(w * h);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto src = image.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        // Weights applied to differences from the center sample, so flat
        // regions come out bit-exact despite rounding in the kernel sum.
        const double center = src[y * w + x];
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 (src[y * w + reflect(static_cast<std::ptrdiff_t>(x) + k, w)] - center);
        }
        tmp[y * w + x] = center + acc;
      }
    }
    auto dst = out.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double center = tmp[y * w + x];
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 (tmp[reflect(static_cast<std::ptrdiff_t>(y) + k, h) * w + x] - center);
        }
        dst[y * w + x] = center + acc;
      }
    }
  }
  return out;
}

std::array<int, 64> jpeg_quant_table(int quality) {
  if (quality < 1 || quality > 100) throw ValidationError("JPEG quality must lie in [1, 100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> table{};
  for (std::size_t i = 0; i < 64; ++i) table[i] = std::clamp((kLuminanceTable[i] * scale + 50) / 100, 1, 255);
  return table;
}

ImageF jpeg_compress(const ImageF& image, int quality) {
  const auto table = jpeg_quant_table(quality);
  const auto& basis = dct_basis(8);
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  ImageF out(image.shape());

  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto src = image.plane(c);
    auto dst = out.plane(c);
    for (std::size_t by = 0; by < h; by += 8) {
      for (std::size_t bx = 0; bx < w; bx += 8) {
        // Partial edge blocks replicate the last row/column, as encoders pad.
        std::array<double, 64> block{};
        for (std::size_t y = 0; y < 8; ++y) {
          for (std::size_t x = 0; x < 8; ++x) {
            block[y * 8 + x] = src[std::min(by + y, h - 1) * w + std::min(bx + x, w - 1)] - 128.0;
          }
        }
        std::array<double, 64> coeff{};
        for (std::size_t u = 0; u < 8; ++u) {
          for (std::size_t v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (std::size_t y = 0; y < 8; ++y) {
              for (std::size_t x = 0; x < 8; ++x) acc += basis[u * 8 + y] * basis[v * 8 + x] * block[y * 8 + x];
            }
            // At 8x8 the orthonormal DCT equals the JPEG FDCT scaling.
            const double q = table[u * 8 + v];
            coeff[u * 8 + v] = std::round(acc / q) * q;
          }
        }
        for (std::size_t y = 0; y < 8; ++y) {
          for (std::size_t x = 0; x < 8; ++x) {
            if (by + y >= h || bx + x >= w) continue;
            double acc = 0.0;
            for (std::size_t u = 0; u < 8; ++u) {
              for (std::size_t v = 0; v < 8; ++v) acc += basis[u * 8 + y] * basis[v * 8 + x] * coeff[u * 8 + v];
            }
            // Decoders emit 8-bit samples.
            dst[(by + y) * w + bx + x] = std::clamp(std::round(acc + 128.0), 0.0, 255.0);
          }
        }
      }
    }
  }
  return out;
}

std::string to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::crop: return "crop";
    case PerturbKind::noise: return "noise";
    case PerturbKind::blur: return "blur";
    case PerturbKind::jpeg: return "jpeg";
  }
  return "noise";
}

PerturbKind parse_perturb_kind(const std::string& text) {
  if (text == "crop" || text == "cropping") return PerturbKind::crop;
  if (text == "noise") return PerturbKind::noise;
  if (text == "blur" || text == "blurring") return PerturbKind::blur;
  if (text == "jpeg") return PerturbKind::jpeg;
  throw ValidationError("unknown perturbation '" + text + "' (expected crop, noise, blur or jpeg)");
}

ImageF apply_perturbation(const ImageF& image, const PerturbSpec& spec) {
  if (!(spec.strength >= 0.0) || !std::isfinite(spec.strength)) {
    throw ValidationError("perturbation strength must be non-negative");
  }
  switch (spec.kind) {
    case PerturbKind::crop: {
      const auto side = static_cast<double>(std::min(image.width(), image.height()));
      if (spec.strength >= side) throw ValidationError("crop would remove the whole image");
      return crop_resize(image, (side - std::floor(spec.strength)) / side);
    }
    case PerturbKind::noise: return add_noise(image, spec.strength, spec.seed);
    case PerturbKind::blur: return blur(image, spec.strength);
    case PerturbKind::jpeg: {
      if (spec.strength > 99.0) throw ValidationError("jpeg strength must be at most 99 (quality 1)");
      return jpeg_compress(image, 100 - static_cast<int>(std::floor(spec.strength)));
    }
  }
  return image;
}

std::string describe_parameter(const PerturbSpec& spec, const Shape& shape) {
  std::ostringstream out;
  out.precision(6);
  switch (spec.kind) {
    case PerturbKind::crop: {
      const auto side = static_cast<double>(std::min(shape.width, shape.height));
      out << "keep_fraction=" << (side - std::floor(spec.strength)) / side;
      break;
    }
    case PerturbKind::noise: out << "sigma=" << spec.strength; break;
    case PerturbKind::blur: out << "sigma=" << spec.strength; break;
    case PerturbKind::jpeg: out << "quality=" << 100 - static_cast<int>(std::floor(spec.strength)); break;
  }
  return out.str();
}

Calibration calibrate_perturbation(const PerturbSpec& spec, std::span<const ImageF> images, double target_psnr,
                                   double tolerance) {
  if (images.empty()) throw ValidationError("calibration needs at least one image");
  const Shape shape = images.front().shape();
  const auto curve = mean_psnr_curve(images, [&](std::size_t i, double strength) {
    PerturbSpec trial = spec;
    trial.strength = strength;
    // Per-image noise streams so images do not share one noise field.
    trial.seed = stream_seed(spec.seed, i);
    return apply_perturbation(images[i], trial);
  });
  switch (spec.kind) {
    case PerturbKind::crop:
      return calibrate_curve(curve, StrengthDomain::integer,
                             static_cast<double>(std::min(shape.width, shape.height) - 1), target_psnr, tolerance);
    case PerturbKind::jpeg: return calibrate_curve(curve, StrengthDomain::integer, 99.0, target_psnr, tolerance);
    case PerturbKind::noise: return calibrate_curve(curve, StrengthDomain::continuous, 128.0, target_psnr, tolerance);
    case PerturbKind::blur: return calibrate_curve(curve, StrengthDomain::continuous, 16.0, target_psnr, tolerance);
  }
  throw ValidationError("unknown perturbation");
}

}  // namespace fpforge
