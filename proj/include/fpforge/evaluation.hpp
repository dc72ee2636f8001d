#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpforge/attacks.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/perturb.hpp"
#include "fpforge/spectral.hpp"
#include "fpforge/synth.hpp"

namespace fpforge {

// One fake population: either a synthetic artifact or a directory of PNGs.
struct ModelSource {
  std::string name;
  ArtifactSpec artifact;
  std::filesystem::path directory;  // files mode only
};

// Counts are per class (real and each fake model).
struct RunConfig {
  std::string dataset = "synth";  // "synth" or "files"
  std::size_t width = 32;
  std::size_t height = 32;
  std::size_t channels = 3;
  double smoothness = 1.0;
  std::filesystem::path real_dir;
  std::vector<ModelSource> models;

  std::vector<std::string> detectors{"cosine", "ridge"};
  std::vector<std::string> attacks{"none", "bars", "mean", "peaks", "regression", "crop", "noise", "blur", "jpeg"};

  double target_psnr = 30.0;
  double tolerance = kDefaultPsnrTolerance;
  std::size_t holdout_count = 1000;
  std::size_t fit_count = 1000;
  std::size_t eval_count = 1000;
  std::size_t calibration_count = 200;
  std::uint64_t seed = 0;

  double ridge_lambda = 1.0;
  double lasso_lambda = 0.05;
  std::size_t lasso_max_iterations = 200;
  std::vector<double> peak_thresholds{0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9};
  double log_eps = kDefaultLogEps;
  std::string cross_attack = "mean";
  std::string cross_detector = "ridge";
  std::filesystem::path output_dir = "fpforge-out";

  void validate() const;
  // Every key with its resolved value, in a stable order.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& cfg);

struct ReportRow {
  std::string dataset;
  std::string detector;
  std::string model;
  double accuracy = 0.0;  // detector accuracy on unmodified eval images
  std::string attack;
  std::optional<double> success_rate;  // empty when the cell failed
  std::optional<double> psnr;          // mean over the eval fakes; may be +inf
  std::optional<double> calibration_psnr;
  std::string params;
};

struct RunReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::map<std::string, std::string> environment;
  std::vector<ReportRow> rows;
};

// The images run_evaluation draws for one population ("real" or a model
// name) and split.
std::vector<ImageF> load_split(const RunConfig& cfg, const std::string& population, Split split);

// Disjoint holdout / fit / eval draw from each population, fingerprints on
// holdout, detectors on fit, per-attack calibration on the first
// calibration_count eval fakes, success measured on all eval fakes. Cell
// failures are recorded in the row and do not stop the run.
RunReport run_evaluation(const RunConfig& cfg);

struct CrossRemoval {
  std::vector<std::string> models;
  std::string attack;
  std::string detector;
  // success[row][col]: images of models[row] cleaned with models[col]'s fingerprint.
  std::vector<std::vector<double>> success;
  std::vector<std::vector<double>> psnr;
};

CrossRemoval cross_removal(const RunConfig& cfg);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(const std::string& text);

std::string render_csv(const RunReport& report);
std::string render_json(const RunReport& report);
RunReport parse_json_report(const std::string& text);
std::string render_cross_csv(const CrossRemoval& cross);
void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path);

// Mean DCT spectrum averaged over channels, log-scaled, clipped to
// [-10, 10] and mapped linearly to 8-bit gray.
ImageF spectrum_heatmap(std::span<const ImageF> images, double eps = kDefaultLogEps);
void emit_spectrum_heatmap(std::span<const ImageF> images, const std::filesystem::path& out);

}  // namespace fpforge
