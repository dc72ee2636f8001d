#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fpforge/attacks.hpp"
#include "fpforge/detectors.hpp"
#include "fpforge/error.hpp"
#include "fpforge/fingerprint.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/metrics.hpp"
#include "fpforge/synth.hpp"
#include "helpers.hpp"

using namespace fpforge;
namespace fs = std::filesystem;

namespace {

std::vector<ImageF> random_set(std::size_t n, std::uint64_t seed, std::size_t w = 8, std::size_t h = 8) {
  std::vector<ImageF> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(test::random_image(w, h, 3, stream_seed(seed, i), true));
  return out;
}

Fingerprint peak_from(std::vector<double> values, std::size_t w) {
  Fingerprint fp;
  fp.kind = FingerprintKind::peak;
  const std::size_t h = values.size() / w;
  fp.values = Spectrum(Shape{w, h, 1}, std::move(values));
  return fp;
}

// Single-feature lasso with centered data: w = S(x'y / n, lambda) / (x'x / n).
double soft_threshold_solution(const std::vector<double>& x, const std::vector<double>& y, double lambda) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx) / n, sxy += (x[i] - mx) * (y[i] - my) / n;
  const double rho = std::abs(sxy) > lambda ? sxy - std::copysign(lambda, sxy) : 0.0;
  return rho / sxx;
}

FeatureMatrix column_matrix(const std::vector<std::vector<double>>& columns) {
  FeatureMatrix m(columns.front().size(), columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (std::size_t i = 0; i < columns[j].size(); ++i) m(i, j) = columns[j][i];
  return m;
}

std::size_t nonzeros(const std::vector<double>& w) {
  return static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v != 0.0; }));
}

}  // namespace

TEST_SUITE("fingerprint") {

TEST_CASE("identical populations") {
  const auto images = random_set(6, 1);
  const auto mean = estimate_mean_fingerprint(images, images);
  for (double v : mean.values.values()) CHECK(v == 0.0);
  const auto peak = estimate_peak_fingerprint(images, images);
  for (double v : peak.values.values()) CHECK(v == 1.0);
  CHECK(mean.n_fake == 6);
  CHECK(mean.kind == FingerprintKind::mean);
}

TEST_CASE("DC offset shows up only at DC") {
  const auto reals = random_set(5, 2);
  const double d = 3.0;
  std::vector<ImageF> fakes = reals;
  for (auto& image : fakes)
    for (double& v : image.values()) v += d;
  const auto fp = estimate_mean_fingerprint(fakes, reals);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) {
        if (x == 0 && y == 0) CHECK(fp.values.at(c, y, x) == doctest::Approx(d * 8).epsilon(1e-12));
        else CHECK(std::abs(fp.values.at(c, y, x)) < 1e-9);
      }
}

TEST_CASE("swap symmetry") {
  const auto a = random_set(7, 3);
  const auto b = random_set(4, 4);
  const auto ab = estimate_mean_fingerprint(a, b);
  const auto ba = estimate_mean_fingerprint(b, a);
  for (std::size_t i = 0; i < ab.values.storage().size(); ++i) CHECK(ab.values.storage()[i] == -ba.values.storage()[i]);

  const auto pab = estimate_peak_fingerprint(a, b);
  const auto pba = estimate_peak_fingerprint(b, a);
  for (std::size_t i = 0; i < pab.values.storage().size(); ++i) {
    CHECK(pab.values.storage()[i] > 0.0);
    CHECK(pab.values.storage()[i] * pba.values.storage()[i] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("estimators reject bad input") {
  const auto a = random_set(2, 5);
  const auto small = random_set(2, 6, 4, 4);
  CHECK_THROWS_AS(estimate_mean_fingerprint({}, a), ValidationError);
  CHECK_THROWS_AS(estimate_mean_fingerprint(a, small), ValidationError);
  CHECK_THROWS_AS(estimate_peak_fingerprint(a, a, 0.0), ValidationError);
}

TEST_CASE("additive bump is recovered within sampling noise") {
  const std::size_t n = 500;
  SynthConfig cfg;
  cfg.count = n;
  cfg.width = cfg.height = 16;
  cfg.seed = 21;
  const double b = 12.0;
  ArtifactSpec spec;
  spec.bins = {{1, 9, 13, b}};
  const auto fakes = gen_fake(cfg, spec);
  cfg.seed = 22;
  const auto reals = gen_natural(cfg);
  const auto fp = estimate_mean_fingerprint(fakes, reals);

  // Empirical spread of the bin over the natural population.
  double mean = 0.0, sq = 0.0;
  for (const auto& image : reals) {
    const double v = dct2(image).at(1, 9, 13);
    mean += v / n;
    sq += v * v / n;
  }
  const double sigma = std::sqrt(sq - mean * mean);
  CHECK(std::abs(fp.values.at(1, 9, 13) - b) < 3.0 * sigma / std::sqrt(double(n)));
}

TEST_CASE("doubled magnitudes give a peak value near 2") {
  SynthConfig cfg;
  cfg.count = 500;
  cfg.width = cfg.height = 16;
  cfg.seed = 31;
  ArtifactSpec spec;
  spec.mode = ArtifactMode::multiplicative_bins;
  spec.bins = {{0, 5, 11, 2.0}};
  // Paired draws: each fake is its natural twin with one coefficient doubled.
  const auto fakes = gen_fake(cfg, spec);
  const auto reals = gen_natural(cfg);
  const auto fp = estimate_peak_fingerprint(fakes, reals);
  CHECK(std::abs(fp.values.at(0, 5, 11) - 2.0) < 0.1);
}

TEST_CASE("peak processing") {
  const auto fp = peak_from({1.0, 2.0, 3.0, 5.0, 5.0, 4.0}, 3);

  SUBCASE("t = 0, s = 1 is min-max scaling") {
    const auto p = process_peak_fingerprint(fp, 0.0, 1.0);
    const std::vector<double> expected{0.0, 0.25, 0.5, 1.0, 1.0, 0.75};
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(p.values.storage()[i] == doctest::Approx(expected[i]));
  }
  SUBCASE("t = 1 keeps only the maxima") {
    const auto p = process_peak_fingerprint(fp, 1.0, 1.0);
    CHECK(p.values.storage() == std::vector<double>{0, 0, 0, 1, 1, 0});
  }
  SUBCASE("survivors are scaled then clipped") {
    const auto p = process_peak_fingerprint(peak_from({1.0, 1.3, 2.0}, 3), 0.2, 10.0);
    CHECK(p.values.storage() == std::vector<double>{0.0, 1.0, 1.0});
    const auto q = process_peak_fingerprint(peak_from({1.0, 1.3, 2.0}, 3), 0.2, 2.0);
    CHECK(q.values.storage()[1] == doctest::Approx(0.6));
  }
  SUBCASE("threshold out of range") {
    CHECK_THROWS_AS(process_peak_fingerprint(fp, -0.1, 1.0), ValidationError);
    CHECK_THROWS_AS(process_peak_fingerprint(fp, 1.1, 1.0), ValidationError);
  }
  SUBCASE("processed values stay in [0, 1]") {
    const auto raw = estimate_peak_fingerprint(random_set(5, 8), random_set(5, 9));
    for (double t : {0.0, 0.3, 0.8})
      for (double s : {0.5, 1.0, 7.0}) {
        const auto p = process_peak_fingerprint(raw, t, s);
        for (double v : p.values.storage()) CHECK((v >= 0.0 && v <= 1.0));
      }
  }
}

TEST_CASE("lasso: single feature matches the soft-threshold solution") {
  const std::vector<double> x{0.3, -1.2, 2.2, 0.9, -0.4, 1.7, -2.0, 0.1};
  const std::vector<double> y{1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0};
  const auto X = column_matrix({x});
  for (double lambda : {0.0, 0.05, 0.2, 0.4, 5.0}) {
    const auto fit = lasso_coordinate_descent(X, y, {lambda, 100, 1e-12});
    CHECK(fit.weights[0] == doctest::Approx(soft_threshold_solution(x, y, lambda)).epsilon(1e-9));
  }
}

TEST_CASE("lasso: lambda = 0 on one feature is ordinary least squares") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const std::vector<double> y{2.1, 3.9, 6.2, 7.8, 10.1, 12.0};
  double mx = 3.5, my = 0;
  for (double v : y) my += v / 6;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 6; ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  const auto fit = lasso_coordinate_descent(column_matrix({x}), y, {0.0, 10, 1e-12});
  CHECK(fit.weights[0] == doctest::Approx(sxy / sxx).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(my - sxy / sxx * mx).epsilon(1e-12));
}

TEST_CASE("lasso: huge lambda zeroes every weight") {
  const auto X = column_matrix({{1, 2, 3, 4}, {0, 1, 0, 1}, {5, -1, 2, 0}});
  const std::vector<double> y{0, 0, 1, 1};
  const auto fit = lasso_coordinate_descent(X, y, {1e6, 50, 1e-9});
  CHECK(nonzeros(fit.weights) == 0);
  CHECK(fit.intercept == doctest::Approx(0.5));
}

TEST_CASE("lasso: one separating feature gets all the weight") {
  // Feature 0 carries the label, features 1..4 are independent noise.
  const std::size_t n = 200;
  SplitMix64 rng(77);
  std::vector<std::vector<double>> cols(5, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1.0 : 0.0;
    cols[0][i] = (y[i] ? 1.0 : -1.0) + 0.3 * rng.normal();
    for (std::size_t j = 1; j < 5; ++j) cols[j][i] = rng.normal();
  }
  const auto X = column_matrix(cols);

  // Oracle: with only feature 0 active, w0 follows the 1-feature formula.
  // The solution is the lasso optimum iff the other features satisfy the
  // KKT bound |x_j' r| / n <= lambda; pick lambda so they do.
  auto mean_of = [&](const std::vector<double>& v) {
    double m = 0;
    for (double e : v) m += e / n;
    return m;
  };
  const double my = mean_of(y);
  auto kkt_gap = [&](double lambda) {
    const double w0 = soft_threshold_solution(cols[0], y, lambda);
    const double m0 = mean_of(cols[0]);
    double worst = 0.0;
    for (std::size_t j = 1; j < 5; ++j) {
      const double mj = mean_of(cols[j]);
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += (cols[j][i] - mj) * ((y[i] - my) - w0 * (cols[0][i] - m0)) / n;
      worst = std::max(worst, std::abs(g));
    }
    return worst;
  };
  double lambda = 0.01;
  while (kkt_gap(lambda) >= lambda) lambda *= 1.5;
  REQUIRE(lambda < 0.4);  // feature 0 must still be active

  const auto fit = lasso_coordinate_descent(X, y, {lambda, 1000, 1e-12});
  CHECK(fit.converged);
  CHECK(fit.weights[0] == doctest::Approx(soft_threshold_solution(cols[0], y, lambda)).epsilon(1e-6));
  for (std::size_t j = 1; j < 5; ++j) CHECK(std::abs(fit.weights[j]) < 1e-6);
}

TEST_CASE("lasso: objective never increases and sparsity is monotone") {
  const std::size_t n = 60, d = 25;
  SplitMix64 rng(5);
  FeatureMatrix X(n, d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.normal();
    y[i] = X(i, 0) - 0.5 * X(i, 3) + 0.2 * X(i, 7) + 0.3 * rng.normal() > 0 ? 1.0 : 0.0;
  }
  std::size_t previous = d + 1;
  for (double lambda : {0.001, 0.01, 0.03, 0.1, 0.3}) {
    const auto fit = lasso_coordinate_descent(X, y, {lambda, 500, 1e-10});
    REQUIRE(!fit.objective_history.empty());
    for (std::size_t k = 1; k < fit.objective_history.size(); ++k) {
      CHECK(fit.objective_history[k] <= fit.objective_history[k - 1] + 1e-15);
    }
    CHECK(fit.objective_history.back() ==
          doctest::Approx(lasso_objective(X, y, fit.weights, fit.intercept, lambda)).epsilon(1e-12));
    const auto nz = nonzeros(fit.weights);
    CHECK(nz <= previous);
    previous = nz;
  }
}

TEST_CASE("lasso: non-convergence is a flag, not an error") {
  const std::size_t n = 30, d = 40;
  SplitMix64 rng(9);
  FeatureMatrix X(n, d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.normal();
    y[i] = rng.uniform() > 0.5;
  }
  const auto fit = lasso_coordinate_descent(X, y, {1e-4, 1, 1e-12});
  CHECK(!fit.converged);
  CHECK(fit.sweeps == 1);
  CHECK_THROWS_AS(LassoConfig({-1.0, 10, 1e-6}).validate(), ValidationError);
  CHECK_THROWS_AS(LassoConfig({0.1, 0, 1e-6}).validate(), ValidationError);
  CHECK_THROWS_AS(LassoConfig({0.1, 10, 0.0}).validate(), ValidationError);
}

TEST_CASE("train_lasso produces a regression fingerprint") {
  SynthConfig cfg;
  cfg.count = 60;
  cfg.width = cfg.height = 8;
  cfg.seed = 1;
  ArtifactSpec spec;
  spec.bins = edge_band_bins(Shape{8, 8, 3}, EdgeSide::both, 1, 20.0);
  const auto fakes = gen_fake(cfg, spec);
  cfg.seed = 2;
  const auto reals = gen_natural(cfg);
  const auto result = train_lasso(fakes, reals, {0.02, 500, 1e-8}, kDefaultLogEps, 42);
  CHECK(result.fingerprint.kind == FingerprintKind::regression);
  CHECK(result.fingerprint.shape() == Shape{8, 8, 3});
  CHECK(result.fingerprint.seed == 42);
  for (std::size_t j = 0; j < result.fit.weights.size(); ++j) {
    CHECK(result.fingerprint.values.storage()[j] ==
          doctest::Approx(result.fit.weights[j] / result.standardizer.scale[j]));
  }
  // The band holds every bin with row or column 7; the strongest weight must sit there.
  const auto& w = result.fingerprint.values.storage();
  const auto best = static_cast<std::size_t>(std::max_element(w.begin(), w.end(), [](double a, double b) {
                                               return std::abs(a) < std::abs(b);
                                             }) - w.begin());
  CHECK(((best % 8) == 7 || ((best / 8) % 8) == 7));
}

TEST_CASE("peak threshold grid search") {
  SynthConfig cfg;
  cfg.count = 120;
  cfg.width = cfg.height = 16;
  cfg.seed = 3;
  ArtifactSpec spec;
  spec.mode = ArtifactMode::multiplicative_bins;
  for (std::size_t r = 12; r < 16; ++r)
    for (std::size_t c = 0; c < 3; ++c) spec.bins.push_back({c, r, 15, 4.0});
  const auto fakes = gen_fake(cfg, spec);
  cfg.seed = 4;
  const auto reals = gen_natural(cfg);

  SUBCASE("single candidate") {
    const std::vector<double> one{0.4};
    CHECK(grid_search_peak_threshold(fakes, reals, one, 30.0).best_threshold == 0.4);
  }
  SUBCASE("empty candidates") {
    CHECK_THROWS_AS(grid_search_peak_threshold(fakes, reals, std::vector<double>{}, 30.0), ValidationError);
  }
  SUBCASE("argmax agrees with exhaustive re-scoring") {
    const std::vector<double> ts{0.3, 0.6, 0.9};
    const auto search = grid_search_peak_threshold(fakes, reals, ts, 30.0);
    REQUIRE(search.scores.size() == 3);

    const auto peak = std::make_shared<Fingerprint>(estimate_peak_fingerprint(fakes, reals));
    const auto surrogate = ridge_fit(fakes, reals, 1.0);
    double best_success = -1.0, best_t = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      AttackSpec attack{AttackKind::peaks, 0.0, ts[k], peak};
      double strength;
      try {
        strength = calibrate_strength(attack, fakes, 30.0).strength;
      } catch (const CalibrationError&) {
        strength = 10.0 * max_strength(AttackKind::peaks, fakes.front().shape());
      }
      attack.strength = strength;
      std::vector<Label> labels;
      for (const auto& image : fakes) labels.push_back(ridge_predict(quantize_8bit(apply_attack(image, attack)), surrogate).label);
      const double success = success_rate(labels);
      CHECK(search.scores[k].threshold == ts[k]);
      CHECK(search.scores[k].success_rate == doctest::Approx(success));
      if (success > best_success) best_success = success, best_t = ts[k];
    }
    CHECK(search.best_threshold == best_t);
  }
  SUBCASE("equal success goes to the smaller threshold") {
    // Two thresholds with no scaled value between them build the same mask.
    const auto peak = estimate_peak_fingerprint(fakes, reals);
    std::vector<double> scaled = peak_mask(peak, 0.0).storage();
    std::sort(scaled.begin(), scaled.end());
    const double hi = scaled[scaled.size() - 13];  // just below the top 12
    const double lo = scaled[scaled.size() - 14];
    const double t1 = lo + 0.25 * (hi - lo), t2 = lo + 0.75 * (hi - lo);
    REQUIRE(peak_mask(peak, t1) == peak_mask(peak, t2));
    const std::vector<double> ts{t2, t1};
    const auto search = grid_search_peak_threshold(fakes, reals, ts, 30.0);
    CHECK(search.scores[0].success_rate == search.scores[1].success_rate);
    CHECK(search.best_threshold == t1);
  }
}

TEST_CASE("fingerprint files") {
  const auto dir = fs::temp_directory_path() / "fpforge_fp_test";
  fs::create_directories(dir);
  auto fp = estimate_peak_fingerprint(random_set(3, 10), random_set(3, 11), 1e-6);
  fp.seed = 0xdeadbeefcafeULL;
  const auto path = dir / "peak.fpfg";
  save_fingerprint(fp, path);
  const auto back = load_fingerprint(path);
  CHECK(back == fp);
  CHECK(std::memcmp(back.values.storage().data(), fp.values.storage().data(), fp.values.storage().size() * 8) == 0);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  CHECK(bytes.substr(0, 4) == "FPFG");
  CHECK(bytes.size() == 40 + 8 * 8 * 3 * 8);

  auto expect_reason = [&](const std::string& content, FormatError::Reason reason) {
    const auto bad = dir / "bad.fpfg";
    std::ofstream(bad, std::ios::binary) << content;
    try {
      load_fingerprint(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.reason() == reason);
    }
  };
  expect_reason(bytes.substr(0, bytes.size() - 5), FormatError::Reason::truncated);
  expect_reason(bytes.substr(0, 20), FormatError::Reason::truncated);
  expect_reason("FPDM" + bytes.substr(4), FormatError::Reason::bad_magic);
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  expect_reason(wrong_version, FormatError::Reason::bad_version);
  expect_reason(bytes + "xx", FormatError::Reason::dimension_mismatch);

  try {
    load_fingerprint(path, Shape{16, 16, 3});
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.reason() == FormatError::Reason::dimension_mismatch);
  }
  CHECK_THROWS_AS(load_fingerprint(dir / "missing.fpfg"), IoError);
}

TEST_CASE("fingerprint kind names") {
  CHECK(parse_fingerprint_kind("lasso") == FingerprintKind::regression);
  CHECK(parse_fingerprint_kind("mean") == FingerprintKind::mean);
  CHECK(parse_fingerprint_kind("peak") == FingerprintKind::peak);
  CHECK_THROWS_AS(parse_fingerprint_kind("median"), ValidationError);
}

}
