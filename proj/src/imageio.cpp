#include "fpforge/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fpforge/parallel.hpp"

namespace fpforge {

namespace {

// Bit depth and color type straight from IHDR; libpng's simplified reader
// would otherwise expand palettes and low bit depths silently.
void check_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<unsigned char, 29> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  static constexpr std::array<unsigned char, 8> signature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (!std::equal(signature.begin(), signature.begin() + std::min(got, signature.size()), head.begin())) {
    throw FormatError(FormatError::Reason::bad_magic, path.string() + ": not a PNG file");
  }
  if (got != head.size()) {
    throw FormatError(FormatError::Reason::truncated, path.string() + ": file too short for a PNG header");
  }
  if (std::string(head.begin() + 12, head.begin() + 16) != "IHDR") {
    throw FormatError(FormatError::Reason::bad_magic, path.string() + ": IHDR chunk missing");
  }
  const unsigned bit_depth = head[24];
  const unsigned color_type = head[25];
  if (bit_depth != 8) {
    throw FormatError(FormatError::Reason::unsupported,
                      path.string() + ": unsupported bit depth " + std::to_string(bit_depth) + " (need 8)");
  }
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    throw FormatError(FormatError::Reason::unsupported,
                      path.string() + ": unsupported color type " + std::to_string(color_type) +
                          " (need grayscale or RGB)");
  }
}

}  // namespace

ImageF load_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  check_header(path);

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw FormatError(FormatError::Reason::unsupported, path.string() + ": " + png.message);
  }
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const std::size_t channels = gray ? 1 : 3;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw FormatError(FormatError::Reason::truncated, path.string() + ": " + message);
  }

  ImageF image(Shape{png.width, png.height, channels});
  for (std::size_t y = 0; y < png.height; ++y) {
    for (std::size_t x = 0; x < png.width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        image.at(c, y, x) = buffer[(y * png.width + x) * channels + c];
      }
    }
  }
  return image;
}

void save_png(const ImageF& image, const std::filesystem::path& path) {
  require_finite(image.values(), "image");
  const auto values = image.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < -0.5 || values[i] >= 255.5) {
      throw ValidationError("sample " + std::to_string(values[i]) + " at index " + std::to_string(i) +
                            " is outside the 8-bit range");
    }
  }

  const std::size_t channels = image.channels();
  std::vector<unsigned char> buffer(image.shape().size());
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = std::floor(image.at(c, y, x) + 0.5);
        buffer[(y * image.width() + x) * channels + c] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
      }
    }
  }

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + png.message);
  }
}

ImageF quantize_8bit(const ImageF& image) {
  ImageF out = image;
  for (double& v : out.values()) v = std::clamp(std::floor(v + 0.5), 0.0, 255.0);
  return out;
}

void clamp_to_range(ImageF& image) {
  for (double& v : image.values()) v = std::clamp(v, 0.0, 255.0);
}

DatasetHandle open_dataset(const std::filesystem::path& root, std::uint64_t seed) {
  if (!std::filesystem::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());
  DatasetHandle handle{root, {}, seed};
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") handle.file_list.push_back(entry.path());
  }
  std::sort(handle.file_list.begin(), handle.file_list.end());
  return handle;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::all: return "all";
    case Split::holdout: return "holdout";
    case Split::fit: return "fit";
    case Split::eval: return "eval";
  }
  return "all";
}

Split parse_split(const std::string& name) {
  if (name == "all") return Split::all;
  if (name == "holdout") return Split::holdout;
  if (name == "fit") return Split::fit;
  if (name == "eval") return Split::eval;
  throw ValidationError("unknown split '" + name + "' (expected all, holdout, fit or eval)");
}

std::vector<std::size_t> seeded_permutation(std::size_t population, std::uint64_t seed) {
  std::vector<std::size_t> order(population);
  for (std::size_t i = 0; i < population; ++i) order[i] = i;
  // splitmix64: fully specified, unlike std::shuffle's distribution.
  std::uint64_t state = seed;
  auto next = [&state] {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  for (std::size_t i = population; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(next() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<std::size_t> split_indices(std::size_t population, std::uint64_t seed, const SplitPlan& plan,
                                       Split split, std::size_t n) {
  std::size_t offset = 0;
  std::size_t available = population;
  if (split != Split::all) {
    if (plan.total() > population) {
      throw ValidationError("split plan needs " + std::to_string(plan.total()) + " items but only " +
                            std::to_string(population) + " are available");
    }
    switch (split) {
      case Split::holdout: available = plan.holdout; break;
      case Split::fit: offset = plan.holdout; available = plan.fit; break;
      case Split::eval: offset = plan.holdout + plan.fit; available = plan.eval; break;
      case Split::all: break;
    }
  }
  if (n > available) {
    throw ValidationError("requested " + std::to_string(n) + " items from split '" + to_string(split) +
                          "' but only " + std::to_string(available) + " are available");
  }
  const auto order = seeded_permutation(population, seed);
  return {order.begin() + static_cast<std::ptrdiff_t>(offset),
          order.begin() + static_cast<std::ptrdiff_t>(offset + n)};
}

std::vector<std::filesystem::path> sample_paths(const DatasetHandle& handle, std::size_t n, Split split,
                                                const SplitPlan& plan) {
  const auto indices = split_indices(handle.file_list.size(), handle.seed, plan, split, n);
  std::vector<std::filesystem::path> paths;
  paths.reserve(indices.size());
  for (std::size_t i : indices) paths.push_back(handle.file_list[i]);
  return paths;
}

std::vector<ImageF> sample_dataset(const DatasetHandle& handle, std::size_t n, Split split, const SplitPlan& plan) {
  const auto paths = sample_paths(handle, n, split, plan);
  std::vector<ImageF> images(paths.size());
  parallel_for(paths.size(), [&](std::size_t i) { images[i] = load_png(paths[i]); });
  return images;
}

void save_dataset(const std::vector<ImageF>& images, const std::filesystem::path& dir, const std::string& prefix) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  parallel_for(images.size(), [&](std::size_t i) {
    std::ostringstream name;
    name << prefix << '_' << std::setw(5) << std::setfill('0') << i << ".png";
    save_png(images[i], dir / name.str());
  });
}

}  // namespace fpforge
