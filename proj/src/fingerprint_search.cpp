#include <algorithm>
#include <memory>

#include "fpforge/attacks.hpp"
#include "fpforge/detectors.hpp"
#include "fpforge/fingerprint.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/parallel.hpp"

namespace fpforge {

ThresholdSearch grid_search_peak_threshold(std::span<const ImageF> fakes_holdout,
                                           std::span<const ImageF> reals_holdout,
                                           std::span<const double> candidate_thresholds, double target_psnr,
                                           double ridge_lambda, double tolerance) {
  if (candidate_thresholds.empty()) throw ValidationError("peak threshold grid search needs candidates");
  for (double t : candidate_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("peak threshold candidates must lie in [0, 1]");
  }

  const auto fp = std::make_shared<const Fingerprint>(estimate_peak_fingerprint(fakes_holdout, reals_holdout));
  const RidgeModel surrogate = ridge_fit(fakes_holdout, reals_holdout, ridge_lambda);

  ThresholdSearch search;
  for (double t : candidate_thresholds) {
    ThresholdScore score;
    score.threshold = t;
    AttackSpec spec{AttackKind::peaks, 0.0, t, fp};
    try {
      const Calibration cal = calibrate_strength(spec, fakes_holdout, target_psnr, tolerance);
      score.strength = cal.strength;
      score.mean_psnr = cal.mean_psnr;
    } catch (const CalibrationError& e) {
      // Too few surviving bins to reach the target: even full suppression
      // stays above it, so the strongest attack is admissible.
      if (!(e.psnr_low() > target_psnr)) throw;
      score.saturated = true;
      score.strength = 10.0 * max_strength(AttackKind::peaks, fp->shape());
    }
    spec.strength = score.strength;

    std::vector<Label> labels(fakes_holdout.size());
    std::vector<double> psnrs(fakes_holdout.size());
    parallel_for(fakes_holdout.size(), [&](std::size_t i) {
      const ImageF attacked = quantize_8bit(apply_attack(fakes_holdout[i], spec));
      labels[i] = ridge_predict(attacked, surrogate).label;
      psnrs[i] = psnr(fakes_holdout[i], attacked);
    });
    if (score.saturated) {
      double total = 0.0;
      for (double p : psnrs) total += p;
      score.mean_psnr = total / static_cast<double>(psnrs.size());
    }
    score.success_rate = success_rate(labels);
    search.scores.push_back(score);
  }

  const auto best = std::min_element(search.scores.begin(), search.scores.end(),
                                     [](const ThresholdScore& a, const ThresholdScore& b) {
                                       if (a.success_rate != b.success_rate) return a.success_rate > b.success_rate;
                                       return a.threshold < b.threshold;
                                     });
  search.best_threshold = best->threshold;
  return search;
}

}  // namespace fpforge
