#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fpforge/spectral.hpp"

namespace fpforge {

struct SynthConfig {
  std::size_t count = 1;
  std::size_t width = 32;
  std::size_t height = 32;
  std::size_t channels = 3;
  std::uint64_t seed = 0;
  // Low-pass cutoff as a fraction of the highest radial frequency, in (0, 1].
  double smoothness = 1.0;
  // Index of the first generated image. Lets callers draw disjoint
  // populations from one seed.
  std::size_t first_index = 0;

  void validate() const;
};

struct BinArtifact {
  std::size_t channel = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  double amplitude = 0.0;
};

enum class ArtifactMode { additive_bins, multiplicative_bins, upsample };
enum class UpsampleKernel { nearest, bilinear, zero_insertion };

struct ArtifactSpec {
  ArtifactMode mode = ArtifactMode::additive_bins;
  std::vector<BinArtifact> bins;
  std::size_t upsample_factor = 2;
  UpsampleKernel kernel = UpsampleKernel::zero_insertion;

  void validate(const SynthConfig& cfg) const;
};

std::string to_string(ArtifactMode mode);
std::string to_string(UpsampleKernel kernel);
ArtifactMode parse_artifact_mode(const std::string& text);
UpsampleKernel parse_upsample_kernel(const std::string& text);
// "c:row:col:amp;c:row:col:amp"
std::vector<BinArtifact> parse_bins(const std::string& text);
std::string format_bins(const std::vector<BinArtifact>& bins);

enum class EdgeSide { bottom, right, both };

// Additive bins covering the last `width` DCT rows (bottom), columns (right)
// or both, in every channel, with a fixed pseudo-random sign pattern.
std::vector<BinArtifact> edge_band_bins(const Shape& shape, EdgeSide side, std::size_t width, double amplitude);
EdgeSide parse_edge_side(const std::string& text);

// Spectrally decaying noise images, 8-bit valued in [16, 240].
std::vector<ImageF> gen_natural(const SynthConfig& cfg);
ImageF gen_natural_one(const SynthConfig& cfg, std::size_t index);

std::vector<ImageF> gen_fake(const SynthConfig& cfg, const ArtifactSpec& spec);
ImageF gen_fake_one(const SynthConfig& cfg, const ArtifactSpec& spec, std::size_t index);

// Upsamples every channel by `factor`. zero_insertion spreads samples with a
// transposed-convolution kernel whose overlaps do not sum evenly, which
// leaves a periodic pattern.
ImageF upsample(const ImageF& image, std::size_t factor, UpsampleKernel kernel);

}  // namespace fpforge
