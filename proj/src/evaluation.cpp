#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <set>
#include <sstream>

#include "fpforge/detectors.hpp"
#include "fpforge/error.hpp"
#include "fpforge/evaluation.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/metrics.hpp"
#include "fpforge/parallel.hpp"
#include "fpforge/random.hpp"

namespace fpforge {

namespace {

struct Population {
  std::vector<ImageF> holdout;
  std::vector<ImageF> fit;
  std::vector<ImageF> eval;
};

// FNV-1a, so population seeds depend on names rather than config order.
std::uint64_t name_hash(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SplitPlan plan_of(const RunConfig& cfg) { return {cfg.holdout_count, cfg.fit_count, cfg.eval_count}; }

SynthConfig synth_of(const RunConfig& cfg, const std::string& population) {
  SynthConfig s;
  s.count = plan_of(cfg).total();
  s.width = cfg.width;
  s.height = cfg.height;
  s.channels = cfg.channels;
  s.smoothness = cfg.smoothness;
  s.seed = stream_seed(cfg.seed, name_hash(population));
  return s;
}

// model == nullptr draws the natural population.
std::vector<ImageF> load_part(const RunConfig& cfg, const ModelSource* model, Split split) {
  const SplitPlan plan = plan_of(cfg);
  const std::string name = model ? "model." + model->name : std::string("real");
  const std::uint64_t split_seed = stream_seed(cfg.seed, name_hash(name + ".split"));
  const std::size_t count = split == Split::holdout ? plan.holdout : split == Split::fit ? plan.fit : plan.eval;

  if (cfg.dataset == "files") {
    const auto handle = open_dataset(model ? model->directory : cfg.real_dir, split_seed);
    auto images = sample_dataset(handle, count, split, plan);
    for (const auto& image : images) {
      if (!(image.shape() == Shape{cfg.width, cfg.height, cfg.channels})) {
        throw ValidationError("image shape " + image.shape().str() + " in " + name + " differs from the config");
      }
    }
    return images;
  }

  const SynthConfig synth = synth_of(cfg, name);
  const auto indices = split_indices(plan.total(), split_seed, plan, split, count);
  std::vector<ImageF> out(indices.size());
  parallel_for(indices.size(), [&](std::size_t i) {
    out[i] = model ? gen_fake_one(synth, model->artifact, indices[i]) : gen_natural_one(synth, indices[i]);
  });
  return out;
}

Population load_population(const RunConfig& cfg, const ModelSource* model) {
  return {load_part(cfg, model, Split::holdout), load_part(cfg, model, Split::fit), load_part(cfg, model, Split::eval)};
}

struct FingerprintSet {
  std::shared_ptr<const Fingerprint> mean;
  std::shared_ptr<const Fingerprint> peak;
  std::shared_ptr<const Fingerprint> regression;
  double peak_threshold = 0.0;
};

FingerprintSet estimate_fingerprints(const RunConfig& cfg, const std::set<std::string>& attacks,
                                     const Population& fakes, const Population& reals) {
  FingerprintSet fps;
  if (attacks.count("mean")) {
    fps.mean = std::make_shared<Fingerprint>(estimate_mean_fingerprint(fakes.holdout, reals.holdout));
  }
  if (attacks.count("peaks")) {
    auto peak = estimate_peak_fingerprint(fakes.holdout, reals.holdout, cfg.log_eps);
    peak.seed = cfg.seed;
    fps.peak = std::make_shared<Fingerprint>(std::move(peak));
    fps.peak_threshold = grid_search_peak_threshold(fakes.holdout, reals.holdout, cfg.peak_thresholds,
                                                    cfg.target_psnr, cfg.ridge_lambda, cfg.tolerance)
                             .best_threshold;
  }
  if (attacks.count("regression")) {
    LassoConfig lasso;
    lasso.lambda = cfg.lasso_lambda;
    lasso.max_iterations = cfg.lasso_max_iterations;
    fps.regression = std::make_shared<Fingerprint>(
        train_lasso(fakes.holdout, reals.holdout, lasso, cfg.log_eps, cfg.seed).fingerprint);
  }
  return fps;
}

DetectorModel fit_detector(const RunConfig& cfg, const std::string& name, const Population& fakes,
                           const Population& reals) {
  if (name == "cosine") return fit_cosine_detector(fakes.fit, reals.fit);
  return ridge_fit(fakes.fit, reals.fit, cfg.ridge_lambda, cfg.log_eps);
}

double detection_accuracy(const DetectorModel& model, const Population& fakes, const Population& reals) {
  std::vector<Label> predicted;
  std::vector<Label> truth;
  for (const auto& p : predict_all(model, fakes.eval)) predicted.push_back(p.label);
  truth.assign(fakes.eval.size(), Label::fake);
  for (const auto& p : predict_all(model, reals.eval)) predicted.push_back(p.label);
  truth.resize(predicted.size(), Label::natural);
  return accuracy(predicted, truth);
}

std::string fmt(double value) {
  std::ostringstream out;
  out.precision(6);
  out << value;
  return out.str();
}

struct AttackOutcome {
  std::vector<ImageF> attacked;  // quantized
  double psnr = 0.0;
  std::optional<double> calibration_psnr;
  std::string params;
  std::optional<std::string> error;
  std::exception_ptr failure;
};

bool is_perturbation(const std::string& name) {
  return name == "crop" || name == "noise" || name == "blur" || name == "jpeg";
}

std::uint64_t perturb_seed(const RunConfig& cfg, const std::string& population, const std::string& kind) {
  return stream_seed(cfg.seed, name_hash(population + ".perturb." + kind));
}

// Calibrates on the first calibration_count images, then applies to all.
AttackOutcome run_attack(const RunConfig& cfg, const std::string& name, const std::string& population,
                         std::span<const ImageF> images, const FingerprintSet& fps) {
  AttackOutcome out;
  const std::size_t n_cal = std::min(cfg.calibration_count, images.size());
  const auto calibration_set = images.subspan(0, n_cal);
  out.attacked.resize(images.size());
  try {
    if (is_perturbation(name)) {
      PerturbSpec spec{parse_perturb_kind(name), 0.0, perturb_seed(cfg, population, name)};
      const auto cal = calibrate_perturbation(spec, calibration_set, cfg.target_psnr, cfg.tolerance);
      spec.strength = cal.strength;
      parallel_for(images.size(), [&](std::size_t i) {
        PerturbSpec local = spec;
        local.seed = stream_seed(spec.seed, i);
        out.attacked[i] = quantize_8bit(apply_perturbation(images[i], local));
      });
      out.calibration_psnr = cal.mean_psnr;
      out.params = describe_parameter(spec, images.front().shape());
    } else {
      AttackSpec spec;
      spec.kind = parse_attack_kind(name);
      switch (spec.kind) {
        case AttackKind::mean: spec.fingerprint = fps.mean; break;
        case AttackKind::peaks:
          spec.fingerprint = fps.peak;
          spec.threshold = fps.peak_threshold;
          break;
        case AttackKind::regression: spec.fingerprint = fps.regression; break;
        default: break;
      }
      if (spec.kind != AttackKind::none) {
        const auto cal = calibrate_strength(spec, calibration_set, cfg.target_psnr, cfg.tolerance);
        spec.strength = cal.strength;
        out.calibration_psnr = cal.mean_psnr;
      }
      // The peak mask does not depend on the image, so build it once.
      AttackSpec applied = spec;
      if (spec.kind == AttackKind::peaks) {
        const auto processed =
            std::make_shared<Fingerprint>(process_peak_fingerprint(*spec.fingerprint, spec.threshold, spec.strength));
        parallel_for(images.size(),
                     [&](std::size_t i) { out.attacked[i] = quantize_8bit(attack_peaks(images[i], *processed)); });
      } else {
        parallel_for(images.size(),
                     [&](std::size_t i) { out.attacked[i] = quantize_8bit(apply_attack(images[i], applied)); });
      }
      if (spec.kind == AttackKind::bars) {
        out.params = "width=" + std::to_string(static_cast<std::size_t>(spec.strength));
      } else if (spec.kind == AttackKind::peaks) {
        out.params = "s=" + fmt(spec.strength) + ";t=" + fmt(spec.threshold);
      } else {
        out.params = "s=" + fmt(spec.strength);
      }
    }
    out.psnr = mean_psnr(images, out.attacked);
  } catch (const Error& e) {
    out.error = e.what();
    out.failure = std::current_exception();
    out.attacked.clear();
  }
  return out;
}

ReportRow make_row(const RunConfig& cfg, const std::string& detector, const std::string& model, double acc,
                   const std::string& attack, const AttackOutcome& outcome, const DetectorModel& det) {
  ReportRow row;
  row.dataset = cfg.dataset == "files" ? cfg.real_dir.filename().string() : "synth";
  row.detector = detector;
  row.model = model;
  row.accuracy = acc;
  row.attack = attack;
  if (outcome.error) {
    row.params = "error=" + *outcome.error;
    return row;
  }
  std::vector<Label> labels;
  for (const auto& p : predict_all(det, outcome.attacked)) labels.push_back(p.label);
  row.success_rate = success_rate(labels);
  row.psnr = outcome.psnr;
  row.calibration_psnr = outcome.calibration_psnr;
  row.params = outcome.params;
  return row;
}

std::set<std::string> as_set(const std::vector<std::string>& items) { return {items.begin(), items.end()}; }

}  // namespace

std::vector<ImageF> load_split(const RunConfig& cfg, const std::string& population, Split split) {
  if (split == Split::all) throw ValidationError("load_split needs holdout, fit or eval");
  if (population == "real") return load_part(cfg, nullptr, split);
  for (const auto& model : cfg.models) {
    if (model.name == population) return load_part(cfg, &model, split);
  }
  throw ValidationError("no population named '" + population + "'");
}

RunReport run_evaluation(const RunConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.config = cfg.to_key_values();
  report.environment = {
      {"fpforge_version", "0.1.0"},
      {"compiler", __VERSION__},
      {"worker_count", std::to_string(worker_count())},
  };

  const Population reals = load_population(cfg, nullptr);
  const auto attacks = as_set(cfg.attacks);
  for (const auto& model : cfg.models) {
    const Population fakes = load_population(cfg, &model);
    const FingerprintSet fps = estimate_fingerprints(cfg, attacks, fakes, reals);

    std::vector<DetectorModel> detectors;
    std::vector<double> accuracies;
    for (const auto& name : cfg.detectors) {
      detectors.push_back(fit_detector(cfg, name, fakes, reals));
      accuracies.push_back(detection_accuracy(detectors.back(), fakes, reals));
    }
    // Attack outcomes do not depend on the detector; share them across rows.
    for (const auto& attack : cfg.attacks) {
      const auto outcome = run_attack(cfg, attack, "model." + model.name, fakes.eval, fps);
      for (std::size_t d = 0; d < detectors.size(); ++d) {
        report.rows.push_back(make_row(cfg, cfg.detectors[d], model.name, accuracies[d], attack, outcome, detectors[d]));
      }
    }
  }
  return report;
}

CrossRemoval cross_removal(const RunConfig& cfg) {
  cfg.validate();
  CrossRemoval cross;
  cross.attack = cfg.cross_attack;
  cross.detector = cfg.cross_detector;
  const Population reals = load_population(cfg, nullptr);
  const std::set<std::string> needed{cfg.cross_attack};

  std::vector<Population> fakes;
  std::vector<FingerprintSet> fps;
  for (const auto& model : cfg.models) {
    cross.models.push_back(model.name);
    fakes.push_back(load_population(cfg, &model));
    fps.push_back(estimate_fingerprints(cfg, needed, fakes.back(), reals));
  }
  const std::size_t n = cfg.models.size();
  cross.success.assign(n, std::vector<double>(n, 0.0));
  cross.psnr.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t row = 0; row < n; ++row) {
    const auto detector = fit_detector(cfg, cfg.cross_detector, fakes[row], reals);
    for (std::size_t col = 0; col < n; ++col) {
      const auto outcome = run_attack(cfg, cfg.cross_attack, "model." + cfg.models[row].name, fakes[row].eval, fps[col]);
      if (outcome.failure) std::rethrow_exception(outcome.failure);
      std::vector<Label> labels;
      for (const auto& p : predict_all(detector, outcome.attacked)) labels.push_back(p.label);
      cross.success[row][col] = success_rate(labels);
      cross.psnr[row][col] = outcome.psnr;
    }
  }
  return cross;
}

}  // namespace fpforge
