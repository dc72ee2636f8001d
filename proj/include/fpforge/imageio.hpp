#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpforge/spectral.hpp"

namespace fpforge {

// 8-bit grayscale or RGB PNG; samples land in [0, 255] as exact integers.
ImageF load_png(const std::filesystem::path& path);

// Rounds half-up to the nearest integer and writes an 8-bit PNG.
// Samples outside [-0.5, 255.5) are rejected rather than clipped.
void save_png(const ImageF& image, const std::filesystem::path& path);

// Round half-up and clamp to [0, 255], as a defender would see the image
// after 8-bit storage.
ImageF quantize_8bit(const ImageF& image);

// Clamp every sample to [0, 255] without rounding.
void clamp_to_range(ImageF& image);

struct DatasetHandle {
  std::filesystem::path root;
  std::vector<std::filesystem::path> file_list;  // sorted lexicographically
  std::uint64_t seed = 0;
};

// Recursively collects *.png under root.
DatasetHandle open_dataset(const std::filesystem::path& root, std::uint64_t seed);

enum class Split { all, holdout, fit, eval };

std::string to_string(Split split);
Split parse_split(const std::string& name);

// Sizes of the three disjoint ranges carved, in order, out of one seeded
// permutation of the population.
struct SplitPlan {
  std::size_t holdout = 0;
  std::size_t fit = 0;
  std::size_t eval = 0;

  std::size_t total() const { return holdout + fit + eval; }
};

// Seeded Fisher-Yates permutation of [0, population).
std::vector<std::size_t> seeded_permutation(std::size_t population, std::uint64_t seed);

// First n indices of the requested split. Split::all ignores the plan and
// draws from the whole permutation.
std::vector<std::size_t> split_indices(std::size_t population, std::uint64_t seed, const SplitPlan& plan,
                                       Split split, std::size_t n);

std::vector<std::filesystem::path> sample_paths(const DatasetHandle& handle, std::size_t n,
                                                Split split = Split::all, const SplitPlan& plan = {});
std::vector<ImageF> sample_dataset(const DatasetHandle& handle, std::size_t n, Split split = Split::all,
                                   const SplitPlan& plan = {});

// Writes images as <prefix>_<index>.png (zero-padded) into dir, creating it.
void save_dataset(const std::vector<ImageF>& images, const std::filesystem::path& dir,
                  const std::string& prefix = "img");

}  // namespace fpforge
