#include "fpforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpforge/imageio.hpp"
#include "fpforge/parallel.hpp"
#include "fpforge/random.hpp"

namespace fpforge {

namespace {

// Radial frequency (normalized so the far corner is sqrt(2)) is multiplied by
// this before entering the 1 / (1 + f)^2 envelope.
constexpr double kEnvelopeScale = 16.0;
// Share of every channel's coefficients drawn from a common luminance field.
constexpr double kSharedWeight = 0.8;

constexpr double kLow = 16.0;
constexpr double kHigh = 240.0;

}  // namespace

void SynthConfig::validate() const {
  if (count < 1) throw ValidationError("synth count must be at least 1");
  if (width == 0 || height == 0) throw ValidationError("synth dimensions must be positive");
  if (channels != 1 && channels != 3) throw ValidationError("synth channels must be 1 or 3");
  if (!(smoothness > 0.0 && smoothness <= 1.0)) {
    throw ValidationError("synth smoothness must lie in (0, 1], got " + std::to_string(smoothness));
  }
}

void ArtifactSpec::validate(const SynthConfig& cfg) const {
  if (mode == ArtifactMode::upsample) {
    if (upsample_factor != 2 && upsample_factor != 4) throw ValidationError("upsample factor must be 2 or 4");
    if (cfg.width % upsample_factor != 0 || cfg.height % upsample_factor != 0) {
      throw ValidationError("upsample factor " + std::to_string(upsample_factor) + " does not divide " +
                            std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
    }
    return;
  }
  for (const auto& bin : bins) {
    if (bin.channel >= cfg.channels || bin.row >= cfg.height || bin.col >= cfg.width) {
      throw ValidationError("artifact bin (" + std::to_string(bin.channel) + "," + std::to_string(bin.row) + "," +
                            std::to_string(bin.col) + ") lies outside the image");
    }
    if (!std::isfinite(bin.amplitude)) throw ValidationError("artifact amplitude must be finite");
  }
}

std::string to_string(ArtifactMode mode) {
  switch (mode) {
    case ArtifactMode::additive_bins: return "additive_bins";
    case ArtifactMode::multiplicative_bins: return "multiplicative_bins";
    case ArtifactMode::upsample: return "upsample";
  }
  return "additive_bins";
}

std::string to_string(UpsampleKernel kernel) {
  switch (kernel) {
    case UpsampleKernel::nearest: return "nearest";
    case UpsampleKernel::bilinear: return "bilinear";
    case UpsampleKernel::zero_insertion: return "zero_insertion";
  }
  return "zero_insertion";
}

ArtifactMode parse_artifact_mode(const std::string& text) {
  if (text == "additive_bins" || text == "additive") return ArtifactMode::additive_bins;
  if (text == "multiplicative_bins" || text == "multiplicative") return ArtifactMode::multiplicative_bins;
  if (text == "upsample") return ArtifactMode::upsample;
  throw ValidationError("unknown artifact mode '" + text + "'");
}

UpsampleKernel parse_upsample_kernel(const std::string& text) {
  if (text == "nearest") return UpsampleKernel::nearest;
  if (text == "bilinear") return UpsampleKernel::bilinear;
  if (text == "zero_insertion") return UpsampleKernel::zero_insertion;
  throw ValidationError("unknown upsample kernel '" + text + "'");
}

std::vector<BinArtifact> parse_bins(const std::string& text) {
  std::vector<BinArtifact> bins;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream fields(item);
    std::string field;
    std::vector<std::string> parts;
    while (std::getline(fields, field, ':')) parts.push_back(field);
    if (parts.size() != 4) throw ValidationError("artifact bin '" + item + "' must be channel:row:col:amplitude");
    try {
      bins.push_back({std::stoul(parts[0]), std::stoul(parts[1]), std::stoul(parts[2]), std::stod(parts[3])});
    } catch (const std::exception&) {
      throw ValidationError("artifact bin '" + item + "' is not numeric");
    }
  }
  return bins;
}

std::string format_bins(const std::vector<BinArtifact>& bins) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (i) out << ';';
    out << bins[i].channel << ':' << bins[i].row << ':' << bins[i].col << ':' << bins[i].amplitude;
  }
  return out.str();
}

namespace {

// Natural image before 8-bit quantization. Artifacts are injected at this
// stage so that quantization acts once, as noise, rather than as a dead zone
// that snaps small changes back to the original integers.
ImageF natural_field(const SynthConfig& cfg, std::size_t index) {
  SplitMix64 rng(stream_seed(cfg.seed, cfg.first_index + index));
  const Shape shape{cfg.width, cfg.height, cfg.channels};
  const double cutoff = cfg.smoothness * std::sqrt(2.0);

  Spectrum spectrum(shape);
  const double own_weight = std::sqrt(1.0 - kSharedWeight * kSharedWeight);
  for (std::size_t y = 0; y < cfg.height; ++y) {
    for (std::size_t x = 0; x < cfg.width; ++x) {
      const double fy = static_cast<double>(y) / static_cast<double>(cfg.height);
      const double fx = static_cast<double>(x) / static_cast<double>(cfg.width);
      const double radial = std::hypot(fx, fy);
      const double shared = rng.normal();
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        const double own = rng.normal();
        if ((y == 0 && x == 0) || radial > cutoff) continue;
        const double envelope = 1.0 / std::pow(1.0 + kEnvelopeScale * radial, 2.0);
        const double mix = cfg.channels == 1 ? shared : kSharedWeight * shared + own_weight * own;
        spectrum.at(c, y, x) = envelope * mix;
      }
    }
  }

  ImageF image = idct2(spectrum);
  const auto [lo, hi] = std::minmax_element(image.values().begin(), image.values().end());
  const double low = *lo;
  const double range = *hi - *lo;
  for (double& v : image.values()) {
    v = range > 0.0 ? kLow + (v - low) * (kHigh - kLow) / range : 0.5 * (kLow + kHigh);
  }
  return image;
}

// image += delta * (outer product of the DCT basis vectors for one bin).
void add_basis(ImageF& image, std::size_t channel, std::size_t row, std::size_t col, double delta) {
  const auto& bh = dct_basis(image.height());
  const auto& bw = dct_basis(image.width());
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  for (std::size_t y = 0; y < h; ++y) {
    const double wy = delta * bh[row * h + y];
    for (std::size_t x = 0; x < w; ++x) image.at(channel, y, x) += wy * bw[col * w + x];
  }
}

// Coefficient of one bin, <image, basis>.
double project(const ImageF& image, std::size_t channel, std::size_t row, std::size_t col) {
  const auto& bh = dct_basis(image.height());
  const auto& bw = dct_basis(image.width());
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  double acc = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    double line = 0.0;
    for (std::size_t x = 0; x < w; ++x) line += image.at(channel, y, x) * bw[col * w + x];
    acc += bh[row * h + y] * line;
  }
  return acc;
}

}  // namespace

EdgeSide parse_edge_side(const std::string& text) {
  if (text == "bottom") return EdgeSide::bottom;
  if (text == "right") return EdgeSide::right;
  if (text == "both") return EdgeSide::both;
  throw ValidationError("unknown band side '" + text + "' (expected bottom, right or both)");
}

std::vector<BinArtifact> edge_band_bins(const Shape& shape, EdgeSide side, std::size_t width, double amplitude) {
  if (width == 0 || width > std::min(shape.width, shape.height)) {
    throw ValidationError("band width must lie in [1, " + std::to_string(std::min(shape.width, shape.height)) + "]");
  }
  std::vector<BinArtifact> bins;
  SplitMix64 signs(0x5eed);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t y = 0; y < shape.height; ++y) {
      for (std::size_t x = 0; x < shape.width; ++x) {
        const bool in_bottom = y + width >= shape.height;
        const bool in_right = x + width >= shape.width;
        const bool selected = side == EdgeSide::bottom ? in_bottom
                              : side == EdgeSide::right ? in_right
                                                        : (in_bottom || in_right);
        if (!selected) continue;
        const double sign = (signs.next() & 1) ? 1.0 : -1.0;
        bins.push_back({c, y, x, sign * amplitude});
      }
    }
  }
  return bins;
}

ImageF gen_natural_one(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  return quantize_8bit(natural_field(cfg, index));
}

std::vector<ImageF> gen_natural(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<ImageF> images(cfg.count);
  parallel_for(cfg.count, [&](std::size_t i) { images[i] = gen_natural_one(cfg, i); });
  return images;
}

ImageF upsample(const ImageF& image, std::size_t factor, UpsampleKernel kernel) {
  if (factor != 2 && factor != 4) throw ValidationError("upsample factor must be 2 or 4");
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  ImageF out(Shape{w * factor, h * factor, image.channels()});
  const auto f = static_cast<double>(factor);

  for (std::size_t c = 0; c < image.channels(); ++c) {
    switch (kernel) {
      case UpsampleKernel::nearest:
        for (std::size_t y = 0; y < h * factor; ++y) {
          for (std::size_t x = 0; x < w * factor; ++x) out.at(c, y, x) = image.at(c, y / factor, x / factor);
        }
        break;
      case UpsampleKernel::bilinear:
        for (std::size_t y = 0; y < h * factor; ++y) {
          const double sy = std::clamp((static_cast<double>(y) + 0.5) / f - 0.5, 0.0, static_cast<double>(h - 1));
          const auto y0 = static_cast<std::size_t>(sy);
          const std::size_t y1 = std::min(y0 + 1, h - 1);
          const double ty = sy - static_cast<double>(y0);
          for (std::size_t x = 0; x < w * factor; ++x) {
            const double sx =
                std::clamp((static_cast<double>(x) + 0.5) / f - 0.5, 0.0, static_cast<double>(w - 1));
            const auto x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const double tx = sx - static_cast<double>(x0);
            const double top = (1 - tx) * image.at(c, y0, x0) + tx * image.at(c, y0, x1);
            const double bottom = (1 - tx) * image.at(c, y1, x0) + tx * image.at(c, y1, x1);
            out.at(c, y, x) = (1 - ty) * top + ty * bottom;
          }
        }
        break;
      case UpsampleKernel::zero_insertion: {
        // Tent kernel with its off-center taps damped to 80%: the stride does
        // not divide the overlap evenly, so phases get different gains.
        const auto radius = static_cast<std::ptrdiff_t>(factor) - 1;
        std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
        for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
          const double tent = 1.0 - std::abs(static_cast<double>(j)) / f;
          taps[static_cast<std::size_t>(j + radius)] = j == 0 ? 1.0 : 0.8 * tent;
        }
        const auto spread = [&](std::span<const double> src, std::size_t n, std::size_t stride_in,
                                std::span<double> dst, std::size_t stride_out) {
          for (std::size_t i = 0; i < n; ++i) {
            const auto centre = static_cast<std::ptrdiff_t>(i * factor);
            for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
              const std::ptrdiff_t pos = centre + j;
              if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(n * factor)) continue;
              dst[static_cast<std::size_t>(pos) * stride_out] +=
                  taps[static_cast<std::size_t>(j + radius)] * src[i * stride_in];
            }
          }
        };
        std::vector<double> rows(h * w * factor, 0.0);
        const auto plane = image.plane(c);
        for (std::size_t y = 0; y < h; ++y) {
          spread(plane.subspan(y * w), w, 1, std::span<double>(rows).subspan(y * w * factor), 1);
        }
        auto dst = out.plane(c);
        for (std::size_t x = 0; x < w * factor; ++x) {
          spread(std::span<const double>(rows).subspan(x), h, w * factor, dst.subspan(x), w * factor);
        }
        break;
      }
    }
  }
  return out;
}

ImageF gen_fake_one(const SynthConfig& cfg, const ArtifactSpec& spec, std::size_t index) {
  cfg.validate();
  spec.validate(cfg);

  if (spec.mode == ArtifactMode::upsample) {
    SynthConfig small = cfg;
    small.width = cfg.width / spec.upsample_factor;
    small.height = cfg.height / spec.upsample_factor;
    small.validate();
    ImageF image = upsample(natural_field(small, index), spec.upsample_factor, spec.kernel);
    clamp_to_range(image);
    return quantize_8bit(image);
  }

  // Bin artifacts are applied in the pixel domain so that a zero additive
  // amplitude (or unit factor) adds exactly 0.0 and leaves the image untouched.
  ImageF image = natural_field(cfg, index);
  std::vector<double> deltas(spec.bins.size());
  for (std::size_t i = 0; i < spec.bins.size(); ++i) {
    const auto& bin = spec.bins[i];
    deltas[i] = spec.mode == ArtifactMode::additive_bins
                    ? bin.amplitude
                    : (bin.amplitude - 1.0) * project(image, bin.channel, bin.row, bin.col);
  }
  for (std::size_t i = 0; i < spec.bins.size(); ++i) {
    add_basis(image, spec.bins[i].channel, spec.bins[i].row, spec.bins[i].col, deltas[i]);
  }
  clamp_to_range(image);
  return quantize_8bit(image);
}

std::vector<ImageF> gen_fake(const SynthConfig& cfg, const ArtifactSpec& spec) {
  cfg.validate();
  spec.validate(cfg);
  std::vector<ImageF> images(cfg.count);
  parallel_for(cfg.count, [&](std::size_t i) { images[i] = gen_fake_one(cfg, spec, i); });
  return images;
}

}  // namespace fpforge
