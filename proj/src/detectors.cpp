#include "fpforge/detectors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "fpforge/parallel.hpp"

namespace fpforge {

MagnitudeSpectrum cosine_fit(std::span<const ImageF> fakes) {
  const Shape shape = common_shape(fakes, "cosine fit images");
  std::vector<MagnitudeSpectrum> spectra(fakes.size());
  parallel_for(fakes.size(), [&](std::size_t i) { spectra[i] = fft_magnitude(fakes[i]); });
  MagnitudeSpectrum mean(shape);
  auto dst = mean.values();
  for (const auto& s : spectra) {
    const auto src = s.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  for (double& v : dst) v /= static_cast<double>(fakes.size());
  return mean;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("cosine similarity needs equally long vectors");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine similarity of a zero-norm vector is undefined");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_score(const ImageF& image, const MagnitudeSpectrum& fingerprint) {
  if (image.shape() != fingerprint.shape()) {
    throw ValidationError("image " + image.shape().str() + " does not match cosine fingerprint " +
                          fingerprint.shape().str());
  }
  return cosine_similarity(fft_magnitude(image).values(), fingerprint.values());
}

double balanced_accuracy(std::span<const double> real_scores, std::span<const double> fake_scores, double threshold) {
  if (real_scores.empty() || fake_scores.empty()) throw ValidationError("balanced accuracy needs both classes");
  const auto caught = std::count_if(fake_scores.begin(), fake_scores.end(), [&](double s) { return s >= threshold; });
  const auto passed = std::count_if(real_scores.begin(), real_scores.end(), [&](double s) { return s < threshold; });
  return 0.5 * (static_cast<double>(caught) / static_cast<double>(fake_scores.size()) +
                static_cast<double>(passed) / static_cast<double>(real_scores.size()));
}

double best_balanced_threshold(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) throw ValidationError("threshold calibration needs both classes");
  struct Item {
    double score;
    bool fake;
  };
  std::vector<Item> items;
  items.reserve(real_scores.size() + fake_scores.size());
  for (double s : real_scores) items.push_back({s, false});
  for (double s : fake_scores) items.push_back({s, true});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  const auto n_real = static_cast<double>(real_scores.size());
  const auto n_fake = static_cast<double>(fake_scores.size());
  // Sweep thresholds upward; below everything every fake is caught, no real passes.
  double caught = n_fake;
  double passed = 0.0;
  double best_threshold = items.front().score - 1.0;
  double best = 0.5 * (caught / n_fake + passed / n_real);
  for (std::size_t i = 0; i < items.size();) {
    const double value = items[i].score;
    while (i < items.size() && items[i].score == value) {
      if (items[i].fake) {
        caught -= 1.0;
      } else {
        passed += 1.0;
      }
      ++i;
    }
    const double threshold = i < items.size() ? 0.5 * (value + items[i].score) : value + 1.0;
    const double score = 0.5 * (caught / n_fake + passed / n_real);
    if (score > best) {
      best = score;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

double cosine_calibrate(std::span<const ImageF> reals, std::span<const ImageF> fakes,
                        const MagnitudeSpectrum& fingerprint) {
  std::vector<double> real_scores(reals.size());
  std::vector<double> fake_scores(fakes.size());
  parallel_for(reals.size(), [&](std::size_t i) { real_scores[i] = cosine_score(reals[i], fingerprint); });
  parallel_for(fakes.size(), [&](std::size_t i) { fake_scores[i] = cosine_score(fakes[i], fingerprint); });
  return best_balanced_threshold(real_scores, fake_scores);
}

CosineModel fit_cosine_detector(std::span<const ImageF> fakes, std::span<const ImageF> reals) {
  CosineModel model;
  model.fingerprint = cosine_fit(fakes);
  model.threshold = cosine_calibrate(reals, fakes, model.fingerprint);
  model.n_fake = static_cast<std::uint32_t>(fakes.size());
  model.n_real = static_cast<std::uint32_t>(reals.size());
  return model;
}

Prediction cosine_predict(const ImageF& image, const CosineModel& model) {
  const double score = cosine_score(image, model.fingerprint);
  return {score >= model.threshold ? Label::fake : Label::natural, score};
}

std::vector<double> RidgeModel::raw_weights() const {
  std::vector<double> raw(weights.size());
  for (std::size_t j = 0; j < raw.size(); ++j) raw[j] = weights[j] / standardizer.scale[j];
  return raw;
}

double RidgeModel::raw_bias() const {
  double b = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) b -= weights[j] * standardizer.mean[j] / standardizer.scale[j];
  return b;
}

LinearSolution ridge_solve(const FeatureMatrix& features, std::span<const double> targets, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("ridge lambda must be non-negative");
  if (features.rows == 0 || features.cols == 0) throw ValidationError("ridge needs a non-empty feature matrix");
  if (targets.size() != features.rows) throw ValidationError("ridge target count does not match the rows");

  const auto n = static_cast<Eigen::Index>(features.rows);
  const auto d = static_cast<Eigen::Index>(features.cols);
  Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(features.data.data(), n, d);
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  x.rowwise() -= x_mean;
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
  const double y_mean = y.mean();
  y.array() -= y_mean;

  const auto singular = [] {
    return ValidationError("ridge system is singular with lambda = 0; use lambda > 0");
  };

  Eigen::VectorXd w;
  if (lambda == 0.0) {
    if (n - 1 < d) throw singular();
    Eigen::MatrixXd gram = x.transpose() * x;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    const auto pivots = solver.vectorD();
    if (solver.info() != Eigen::Success || pivots.minCoeff() <= 1e-12 * std::max(1.0, pivots.maxCoeff())) {
      throw singular();
    }
    w = solver.solve(x.transpose() * y);
  } else if (n < d) {
    // Dual form: w = X^T (X X^T + lambda I)^-1 y, same solution, n x n system.
    Eigen::MatrixXd kernel = x * x.transpose();
    kernel.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> solver(kernel);
    if (solver.info() != Eigen::Success) throw ValidationError("ridge dual system is not positive definite");
    w = x.transpose() * solver.solve(y);
  } else {
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw ValidationError("ridge system is not positive definite");
    w = solver.solve(x.transpose() * y);
  }

  LinearSolution solution;
  solution.weights.assign(w.data(), w.data() + w.size());
  solution.bias = y_mean - x_mean.dot(w);
  return solution;
}

double ridge_objective(const FeatureMatrix& features, std::span<const double> targets,
                       std::span<const double> weights, double bias, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < features.rows; ++i) {
    double pred = bias;
    for (std::size_t j = 0; j < features.cols; ++j) pred += features(i, j) * weights[j];
    loss += (targets[i] - pred) * (targets[i] - pred);
  }
  double norm = 0.0;
  for (double w : weights) norm += w * w;
  return loss + lambda * norm;
}

RidgeModel ridge_fit(std::span<const ImageF> fakes, std::span<const ImageF> reals, double lambda, double eps) {
  const Shape shape = common_shape(fakes, "ridge fake images");
  if (common_shape(reals, "ridge real images") != shape) {
    throw ValidationError("ridge fake and real images differ in shape");
  }
  std::vector<ImageF> all;
  all.reserve(fakes.size() + reals.size());
  all.insert(all.end(), fakes.begin(), fakes.end());
  all.insert(all.end(), reals.begin(), reals.end());
  FeatureMatrix features = log_dct_features(all, eps);
  std::vector<double> labels(all.size(), -1.0);
  std::fill_n(labels.begin(), fakes.size(), 1.0);

  RidgeModel model;
  model.shape = shape;
  model.eps = eps;
  model.lambda = lambda;
  model.standardizer = Standardizer::fit(features);
  model.standardizer.apply(features);
  auto solution = ridge_solve(features, labels, lambda);
  model.weights = std::move(solution.weights);
  model.bias = solution.bias;
  model.n_fake = static_cast<std::uint32_t>(fakes.size());
  model.n_real = static_cast<std::uint32_t>(reals.size());
  return model;
}

Prediction ridge_predict(const ImageF& image, const RidgeModel& model) {
  if (image.shape() != model.shape) {
    throw ValidationError("image " + image.shape().str() + " does not match ridge model " + model.shape.str());
  }
  auto features = log_dct_feature_vector(image, model.eps);
  model.standardizer.apply(features);
  double score = model.bias;
  for (std::size_t j = 0; j < features.size(); ++j) score += model.weights[j] * features[j];
  return {score > 0.0 ? Label::fake : Label::natural, score};
}

std::string detector_name(const DetectorModel& model) {
  return std::holds_alternative<CosineModel>(model) ? "cosine" : "ridge";
}

Prediction predict(const DetectorModel& model, const ImageF& image) {
  return std::visit(
      [&](const auto& m) -> Prediction {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, CosineModel>) {
          return cosine_predict(image, m);
        } else {
          return ridge_predict(image, m);
        }
      },
      model);
}

std::vector<Prediction> predict_all(const DetectorModel& model, std::span<const ImageF> images) {
  std::vector<Prediction> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = predict(model, images[i]); });
  return out;
}

}  // namespace fpforge
