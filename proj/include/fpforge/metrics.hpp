#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fpforge/spectral.hpp"

namespace fpforge {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// 10 log10(255^2 / MSE) over all samples; both inputs are quantized to 8 bit
// first. Identical inputs give kInfinitePsnr.
double psnr(const ImageF& a, const ImageF& b);

// Mean of per-image PSNR values; infinite if any pair is identical.
double mean_psnr(std::span<const ImageF> originals, std::span<const ImageF> modified);

enum class Label { natural, fake };

const char* to_string(Label label);

// Fraction of predictions that are `natural`; 0 for an empty list.
double success_rate(std::span<const Label> predictions);

// (TP + TN) / total with `fake` as the positive class.
double accuracy(std::span<const Label> predicted, std::span<const Label> truth);

}  // namespace fpforge
