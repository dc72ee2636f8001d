// fpforge command-line front end.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fpforge/attacks.hpp"
#include "fpforge/detectors.hpp"
#include "fpforge/error.hpp"
#include "fpforge/evaluation.hpp"
#include "fpforge/fingerprint.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/metrics.hpp"
#include "fpforge/perturb.hpp"
#include "fpforge/random.hpp"
#include "fpforge/synth.hpp"

namespace fs = std::filesystem;
using namespace fpforge;

namespace {

enum Exit { kOk = 0, kValidation = 1, kIo = 2, kCalibration = 3 };

struct Folder {
  std::vector<fs::path> paths;
  std::vector<ImageF> images;
};

// All PNGs under dir in sorted order, or a seeded sample of `count`.
Folder read_folder(const fs::path& dir, std::size_t count, std::uint64_t seed) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  const auto handle = open_dataset(dir, seed);
  Folder folder;
  folder.paths = count == 0 ? handle.file_list : sample_paths(handle, count);
  if (folder.paths.empty()) throw ValidationError("no PNG files under " + dir.string());
  for (const auto& p : folder.paths) folder.images.push_back(load_png(p));
  return folder;
}

void write_folder(const Folder& folder, const std::vector<ImageF>& images, const fs::path& out) {
  fs::create_directories(out);
  for (std::size_t i = 0; i < images.size(); ++i) save_png(images[i], out / folder.paths[i].filename());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct SynthArgs {
  fs::path out;
  std::string kind = "natural";
  SynthConfig cfg;
  std::string artifact = "additive_bins";
  std::string bins;
  std::string band;
  std::size_t factor = 2;
  std::string kernel = "zero_insertion";
};

void synth_gen(const SynthArgs& a) {
  a.cfg.validate();
  std::vector<ImageF> images;
  if (a.kind == "natural") {
    images = gen_natural(a.cfg);
  } else if (a.kind == "fake") {
    ArtifactSpec spec;
    spec.mode = parse_artifact_mode(a.artifact);
    if (!a.bins.empty()) spec.bins = parse_bins(a.bins);
    if (!a.band.empty()) {
      std::stringstream in(a.band);
      std::string side, width, amp;
      std::getline(in, side, ':');
      std::getline(in, width, ':');
      std::getline(in, amp, ':');
      try {
        const auto extra = edge_band_bins(Shape{a.cfg.width, a.cfg.height, a.cfg.channels}, parse_edge_side(side),
                                          std::stoul(width), std::stod(amp));
        spec.bins.insert(spec.bins.end(), extra.begin(), extra.end());
      } catch (const std::logic_error&) {
        throw ValidationError("--band expects side:width:amplitude, got '" + a.band + "'");
      }
    }
    spec.upsample_factor = a.factor;
    spec.kernel = parse_upsample_kernel(a.kernel);
    images = gen_fake(a.cfg, spec);
  } else {
    throw ValidationError("--kind must be natural or fake");
  }
  save_dataset(images, a.out, a.kind);
}

struct SetArgs {
  fs::path fake_dir;
  fs::path real_dir;
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

void add_set_options(CLI::App* cmd, SetArgs& s) {
  cmd->add_option("--fake", s.fake_dir, "Directory of generated images")->required();
  cmd->add_option("--real", s.real_dir, "Directory of natural images")->required();
  cmd->add_option("--count", s.count, "Images per class (0 = all)");
  cmd->add_option("--seed", s.seed, "Sampling seed");
}

struct FingerprintArgs {
  SetArgs set;
  std::string kind = "mean";
  fs::path out;
  double eps = kDefaultLogEps;
  double lambda = 0.05;
  std::size_t max_iterations = 200;
};

void fingerprint_estimate(const FingerprintArgs& a) {
  const auto fakes = read_folder(a.set.fake_dir, a.set.count, a.set.seed);
  const auto reals = read_folder(a.set.real_dir, a.set.count, a.set.seed + 1);
  Fingerprint fp;
  switch (parse_fingerprint_kind(a.kind)) {
    case FingerprintKind::mean: fp = estimate_mean_fingerprint(fakes.images, reals.images); break;
    case FingerprintKind::peak: fp = estimate_peak_fingerprint(fakes.images, reals.images, a.eps); break;
    case FingerprintKind::regression: {
      LassoConfig cfg;
      cfg.lambda = a.lambda;
      cfg.max_iterations = a.max_iterations;
      fp = train_lasso(fakes.images, reals.images, cfg, a.eps, a.set.seed).fingerprint;
      break;
    }
  }
  fp.seed = a.set.seed;
  save_fingerprint(fp, a.out);
}

struct AttackArgs {
  std::string kind;
  fs::path in;
  fs::path out;
  fs::path fingerprint;
  std::optional<double> strength;
  std::optional<double> target;
  double threshold = 0.0;
  double tolerance = kDefaultPsnrTolerance;
  std::size_t calibration_count = 200;
};

void attack_apply(const AttackArgs& a) {
  auto folder = read_folder(a.in, 0, 0);
  AttackSpec spec;
  spec.kind = parse_attack_kind(a.kind);
  spec.threshold = a.threshold;
  if (spec.kind != AttackKind::bars && spec.kind != AttackKind::none) {
    if (a.fingerprint.empty()) throw ValidationError("--fingerprint is required for " + a.kind);
    spec.fingerprint = std::make_shared<Fingerprint>(load_fingerprint(a.fingerprint, folder.images.front().shape()));
  }
  if (a.strength.has_value() == a.target.has_value()) throw ValidationError("give exactly one of --strength, --target-psnr");
  if (a.target) {
    const std::size_t n = std::min(a.calibration_count, folder.images.size());
    const auto cal = calibrate_strength(spec, std::span(folder.images).subspan(0, n), *a.target, a.tolerance);
    spec.strength = cal.strength;
    std::cerr << "calibrated strength " << cal.strength << " at " << cal.mean_psnr << " dB\n";
  } else {
    spec.strength = *a.strength;
  }
  std::vector<ImageF> attacked;
  for (const auto& image : folder.images) attacked.push_back(quantize_8bit(apply_attack(image, spec)));
  std::cerr << "mean psnr " << mean_psnr(folder.images, attacked) << " dB\n";
  write_folder(folder, attacked, a.out);
}

struct DetectorArgs {
  SetArgs set;
  std::string kind = "ridge";
  fs::path out;
  double lambda = 1.0;
  double eps = kDefaultLogEps;
};

void detector_fit(const DetectorArgs& a) {
  const auto fakes = read_folder(a.set.fake_dir, a.set.count, a.set.seed);
  const auto reals = read_folder(a.set.real_dir, a.set.count, a.set.seed + 1);
  DetectorModel model;
  if (a.kind == "cosine") {
    model = fit_cosine_detector(fakes.images, reals.images);
  } else if (a.kind == "ridge") {
    model = ridge_fit(fakes.images, reals.images, a.lambda, a.eps);
  } else {
    throw ValidationError("unknown detector kind '" + a.kind + "' (cosine, ridge)");
  }
  save_detector(model, a.out);
}

void detector_predict(const fs::path& model_path, const fs::path& in, const fs::path& out) {
  const auto model = load_detector(model_path);
  const auto folder = read_folder(in, 0, 0);
  std::string text = "file,label,score\n";
  std::vector<Label> labels;
  for (std::size_t i = 0; i < folder.images.size(); ++i) {
    const auto p = predict(model, folder.images[i]);
    labels.push_back(p.label);
    char score[64];
    std::snprintf(score, sizeof score, "%.6g", p.score);
    text += folder.paths[i].filename().string() + ',' + to_string(p.label) + ',' + score + '\n';
  }
  write_text(out, text);
  std::cerr << "natural fraction " << success_rate(labels) << "\n";
}

struct PerturbArgs {
  std::string kind;
  fs::path in;
  fs::path out;
  std::optional<double> strength;
  std::optional<double> target;
  double tolerance = kDefaultPsnrTolerance;
  std::uint64_t seed = 0;
};

void perturb_apply(const PerturbArgs& a) {
  auto folder = read_folder(a.in, 0, 0);
  PerturbSpec spec{parse_perturb_kind(a.kind), 0.0, a.seed};
  if (a.strength.has_value() == a.target.has_value()) throw ValidationError("give exactly one of --strength, --target-psnr");
  if (a.target) {
    const auto cal = calibrate_perturbation(spec, folder.images, *a.target, a.tolerance);
    spec.strength = cal.strength;
    std::cerr << "calibrated " << describe_parameter(spec, folder.images.front().shape()) << " at " << cal.mean_psnr
              << " dB\n";
  } else {
    spec.strength = *a.strength;
  }
  std::vector<ImageF> out;
  for (std::size_t i = 0; i < folder.images.size(); ++i) {
    PerturbSpec local = spec;
    local.seed = stream_seed(spec.seed, i);
    out.push_back(quantize_8bit(apply_perturbation(folder.images[i], local)));
  }
  write_folder(folder, out, a.out);
}

void eval_run(const fs::path& config, const std::string& format, fs::path out) {
  const auto cfg = load_run_config(config);
  const auto report = run_evaluation(cfg);
  const auto fmt = parse_report_format(format);
  if (out.empty()) out = cfg.output_dir / (fmt == ReportFormat::csv ? "report.csv" : "report.json");
  emit_report(report, fmt, out);
  std::cerr << "wrote " << out.string() << "\n";
}

void eval_cross(const fs::path& config, const fs::path& out) {
  const auto cfg = load_run_config(config);
  write_text(out, render_cross_csv(cross_removal(cfg)));
}

void report_render(const fs::path& in, const std::string& format, const fs::path& out) {
  const auto report = parse_json_report(read_text(in));
  const auto fmt = parse_report_format(format);
  write_text(out, fmt == ReportFormat::csv ? render_csv(report) : render_json(report));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN fingerprint estimation, removal and evaluation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Synthetic datasets")->require_subcommand(1);
  SynthArgs synth_args;
  auto* gen = synth->add_subcommand("gen", "Generate natural or artifact-bearing images");
  gen->add_option("--out", synth_args.out, "Output directory")->required();
  gen->add_option("--kind", synth_args.kind, "natural or fake");
  gen->add_option("--count", synth_args.cfg.count, "Number of images");
  gen->add_option("--width", synth_args.cfg.width);
  gen->add_option("--height", synth_args.cfg.height);
  gen->add_option("--channels", synth_args.cfg.channels);
  gen->add_option("--seed", synth_args.cfg.seed);
  gen->add_option("--smoothness", synth_args.cfg.smoothness);
  gen->add_option("--first-index", synth_args.cfg.first_index);
  gen->add_option("--artifact", synth_args.artifact, "additive_bins, multiplicative_bins or upsample");
  gen->add_option("--bins", synth_args.bins, "c:row:col:amp;...");
  gen->add_option("--band", synth_args.band, "side:width:amplitude edge band (bottom, right, both)");
  gen->add_option("--upsample-factor", synth_args.factor);
  gen->add_option("--kernel", synth_args.kernel, "nearest, bilinear or zero_insertion");

  auto* fingerprint = app.add_subcommand("fingerprint", "Fingerprint estimation")->require_subcommand(1);
  FingerprintArgs fp_args;
  auto* estimate = fingerprint->add_subcommand("estimate", "Estimate a fingerprint from two image folders");
  add_set_options(estimate, fp_args.set);
  estimate->add_option("--kind", fp_args.kind)->check(CLI::IsMember({"mean", "peak", "lasso"}));
  estimate->add_option("--out", fp_args.out, "Fingerprint file")->required();
  estimate->add_option("--eps", fp_args.eps);
  estimate->add_option("--lambda", fp_args.lambda, "Lasso penalty");
  estimate->add_option("--max-iter", fp_args.max_iterations, "Lasso sweeps");

  auto* attack = app.add_subcommand("attack", "Fingerprint removal")->require_subcommand(1);
  AttackArgs attack_args;
  auto* attack_apply_cmd = attack->add_subcommand("apply", "Remove a fingerprint from a folder of images");
  attack_apply_cmd->add_option("--kind", attack_args.kind)
      ->required()
      ->check(CLI::IsMember({"bars", "mean", "peaks", "regression"}));
  attack_apply_cmd->add_option("--in", attack_args.in)->required();
  attack_apply_cmd->add_option("--out", attack_args.out)->required();
  attack_apply_cmd->add_option("--fingerprint", attack_args.fingerprint);
  attack_apply_cmd->add_option("--strength", attack_args.strength);
  attack_apply_cmd->add_option("--target-psnr", attack_args.target);
  attack_apply_cmd->add_option("--threshold", attack_args.threshold, "Peak threshold t");
  attack_apply_cmd->add_option("--tolerance", attack_args.tolerance);
  attack_apply_cmd->add_option("--calibration-count", attack_args.calibration_count);

  auto* detector = app.add_subcommand("detector", "Fake detectors")->require_subcommand(1);
  DetectorArgs det_args;
  auto* fit = detector->add_subcommand("fit", "Fit a detector");
  add_set_options(fit, det_args.set);
  fit->add_option("--kind", det_args.kind)->check(CLI::IsMember({"cosine", "ridge"}));
  fit->add_option("--out", det_args.out, "Detector file")->required();
  fit->add_option("--lambda", det_args.lambda);
  fit->add_option("--eps", det_args.eps);
  fs::path predict_model, predict_in, predict_out;
  auto* predict_cmd = detector->add_subcommand("predict", "Classify a folder of images");
  predict_cmd->add_option("--model", predict_model)->required();
  predict_cmd->add_option("--in", predict_in)->required();
  predict_cmd->add_option("--out", predict_out, "CSV output (default stdout)");

  auto* perturb = app.add_subcommand("perturb", "Generic image perturbations")->require_subcommand(1);
  PerturbArgs perturb_args;
  auto* perturb_apply_cmd = perturb->add_subcommand("apply", "Perturb a folder of images");
  perturb_apply_cmd->add_option("--kind", perturb_args.kind)
      ->required()
      ->check(CLI::IsMember({"crop", "noise", "blur", "jpeg"}));
  perturb_apply_cmd->add_option("--in", perturb_args.in)->required();
  perturb_apply_cmd->add_option("--out", perturb_args.out)->required();
  perturb_apply_cmd->add_option("--strength", perturb_args.strength,
                                "crop: pixels removed, noise/blur: sigma, jpeg: 100 - quality");
  perturb_apply_cmd->add_option("--target-psnr", perturb_args.target);
  perturb_apply_cmd->add_option("--tolerance", perturb_args.tolerance);
  perturb_apply_cmd->add_option("--seed", perturb_args.seed);

  auto* eval = app.add_subcommand("eval", "Evaluation protocol")->require_subcommand(1);
  fs::path eval_config, eval_out;
  std::string eval_format = "csv";
  auto* run = eval->add_subcommand("run", "Run the detector x attack grid");
  run->add_option("--config", eval_config)->required();
  run->add_option("--format", eval_format)->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--out", eval_out, "Report path (default <output_dir>/report.<format>)");
  fs::path cross_config, cross_out;
  auto* cross = eval->add_subcommand("cross", "Cross-removal success matrix");
  cross->add_option("--config", cross_config)->required();
  cross->add_option("--out", cross_out, "CSV output (default stdout)");

  auto* report = app.add_subcommand("report", "Report conversion")->require_subcommand(1);
  fs::path report_in, report_out;
  std::string report_format = "csv";
  auto* render = report->add_subcommand("render", "Render a JSON report as CSV or JSON");
  render->add_option("--in", report_in)->required();
  render->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}));
  render->add_option("--out", report_out, "Output (default stdout)");

  auto* spectrum = app.add_subcommand("spectrum", "Spectrum visualization")->require_subcommand(1);
  fs::path heat_in, heat_out;
  std::size_t heat_count = 0;
  auto* heatmap = spectrum->add_subcommand("heatmap", "Mean log DCT spectrum as a grayscale PNG");
  heatmap->add_option("--in", heat_in)->required();
  heatmap->add_option("--out", heat_out)->required();
  heatmap->add_option("--count", heat_count, "Images to average (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (gen->parsed()) synth_gen(synth_args);
    else if (estimate->parsed()) fingerprint_estimate(fp_args);
    else if (attack_apply_cmd->parsed()) attack_apply(attack_args);
    else if (fit->parsed()) detector_fit(det_args);
    else if (predict_cmd->parsed()) detector_predict(predict_model, predict_in, predict_out);
    else if (perturb_apply_cmd->parsed()) perturb_apply(perturb_args);
    else if (run->parsed()) eval_run(eval_config, eval_format, eval_out);
    else if (cross->parsed()) eval_cross(cross_config, cross_out);
    else if (render->parsed()) report_render(report_in, report_format, report_out);
    else if (heatmap->parsed()) emit_spectrum_heatmap(read_folder(heat_in, heat_count, 0).images, heat_out);
  } catch (const CalibrationError& e) {
    std::cerr << "calibration failed: " << e.what() << "\n";
    return kCalibration;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const Error& e) {
    // IoError and FormatError: the bytes on disk are missing or unusable.
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
