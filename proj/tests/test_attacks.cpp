#include <doctest.h>

#include <cmath>
#include <memory>

#include "fpforge/attacks.hpp"
#include "fpforge/error.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/metrics.hpp"
#include "fpforge/synth.hpp"
#include "helpers.hpp"

using namespace fpforge;

namespace {

std::shared_ptr<Fingerprint> make_fp(FingerprintKind kind, const Shape& shape, double fill = 0.0) {
  auto fp = std::make_shared<Fingerprint>();
  fp->kind = kind;
  fp->values = Spectrum(shape, fill);
  return fp;
}

// Mid-range content so clamping never kicks in for mild attacks.
ImageF soft_image(std::size_t n, std::uint64_t seed) {
  auto image = test::random_image(n, n, 3, seed);
  for (double& v : image.values()) v = 64.0 + v / 2.0;
  return image;
}

std::vector<ImageF> synthetic_fakes(std::size_t count, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.count = count;
  cfg.width = cfg.height = 16;
  cfg.seed = seed;
  ArtifactSpec spec;
  spec.bins = edge_band_bins(Shape{16, 16, 3}, EdgeSide::both, 2, 20.0);
  return gen_fake(cfg, spec);
}

}  // namespace

TEST_SUITE("attacks") {

TEST_CASE("bars") {
  const auto image = soft_image(16, 1);
  CHECK(test::max_abs_diff(attack_bars(image, 0).values(), image.values()) < 1e-6);
  const auto zeroed = attack_bars(image, 16);
  for (double v : zeroed.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(attack_bars(image, 17), ValidationError);

  for (std::size_t s : {1u, 3u, 7u}) {
    const auto spectrum = attacked_spectrum(dct2(image), {AttackKind::bars, double(s), 0.0, nullptr});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x)
          if (y >= 16 - s || x >= 16 - s) CHECK(spectrum.at(c, y, x) == 0.0);
  }

  ImageF wide(Shape{12, 8, 1}, 100.0);
  CHECK_NOTHROW(attack_bars(wide, 8));
  CHECK_THROWS_AS(attack_bars(wide, 9), ValidationError);
}

TEST_CASE("mean subtraction") {
  const auto image = soft_image(8, 2);
  const auto zero = make_fp(FingerprintKind::mean, image.shape());
  CHECK(test::max_abs_diff(attack_mean(image, *zero, 0.0).values(), image.values()) < 1e-9);
  CHECK(test::max_abs_diff(attack_mean(image, *zero, 123.0).values(), image.values()) < 1e-9);

  auto fp = make_fp(FingerprintKind::mean, image.shape());
  fp->values.at(0, 3, 4) = 5.0;
  CHECK(test::max_abs_diff(attack_mean(image, *fp, 0.0).values(), image.values()) < 1e-9);
  const auto out = dct2(attack_mean(image, *fp, 2.0));
  CHECK(out.at(0, 3, 4) == doctest::Approx(dct2(image).at(0, 3, 4) - 10.0));

  const auto wrong = make_fp(FingerprintKind::peak, image.shape(), 1.0);
  CHECK_THROWS_AS(apply_attack(image, {AttackKind::mean, 1.0, 0.0, wrong}), ValidationError);
  const auto small = make_fp(FingerprintKind::mean, Shape{4, 4, 3});
  CHECK_THROWS_AS(apply_attack(image, {AttackKind::mean, 1.0, 0.0, small}), ValidationError);
  CHECK_THROWS_AS(apply_attack(image, {AttackKind::mean, 1.0, 0.0, nullptr}), ValidationError);
}

TEST_CASE("mean subtraction removes an additive artifact") {
  const std::size_t n = 500;
  SynthConfig cfg;
  cfg.count = n;
  cfg.width = cfg.height = 16;
  cfg.seed = 5;
  ArtifactSpec spec;
  spec.bins = {{0, 14, 3, 20.0}, {2, 9, 15, -15.0}, {1, 15, 15, 25.0}};
  const auto fakes = gen_fake(cfg, spec);
  const auto twins = gen_natural(cfg);  // same content without the artifact
  cfg.seed = 6;
  const auto reals = gen_natural(cfg);
  const auto fp = estimate_mean_fingerprint(fakes, reals);

  double before = 0.0, after = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto base = dct2(twins[i]);
    const auto fake = dct2(fakes[i]);
    const auto cleaned = dct2(attack_mean(fakes[i], fp, 1.0));
    for (const auto& b : spec.bins) {
      before += std::abs(fake.at(b.channel, b.row, b.col) - base.at(b.channel, b.row, b.col));
      after += std::abs(cleaned.at(b.channel, b.row, b.col) - base.at(b.channel, b.row, b.col));
    }
  }
  CHECK(after <= 0.1 * before);
}

TEST_CASE("peak multiplication") {
  const auto image = soft_image(8, 3);
  const auto spectrum = dct2(image);
  const auto zero = make_fp(FingerprintKind::peak, image.shape());
  CHECK(test::max_abs_diff(attack_peaks(image, *zero).values(), image.values()) < 1e-9);

  auto one_bin = make_fp(FingerprintKind::peak, image.shape());
  one_bin->values.at(1, 2, 5) = 1.0;
  one_bin->values.at(2, 6, 1) = 0.3;
  const auto result = dct2(attack_peaks(image, *one_bin));
  CHECK(std::abs(result.at(1, 2, 5)) < 1e-9);
  CHECK(std::abs(result.at(2, 6, 1)) == doctest::Approx(0.7 * std::abs(spectrum.at(2, 6, 1))).epsilon(1e-9));
  CHECK(std::signbit(result.at(2, 6, 1)) == std::signbit(spectrum.at(2, 6, 1)));

  auto raw = make_fp(FingerprintKind::peak, image.shape(), 1.0);
  raw->values.at(0, 0, 0) = 1.5;
  CHECK_THROWS_AS(attack_peaks(image, *raw), ValidationError);
}

TEST_CASE("peak attack through AttackSpec processes the raw fingerprint") {
  const auto image = soft_image(8, 4);
  auto raw = make_fp(FingerprintKind::peak, image.shape(), 1.0);
  raw->values.at(0, 7, 7) = 3.0;
  const AttackSpec spec{AttackKind::peaks, 0.5, 0.5, raw};
  const auto direct = attack_peaks(image, process_peak_fingerprint(*raw, 0.5, 0.5));
  CHECK(apply_attack(image, spec) == direct);
  CHECK_THROWS_AS(apply_attack(image, {AttackKind::peaks, 0.5, 1.5, raw}), ValidationError);
}

TEST_CASE("regression multiplication") {
  const auto image = soft_image(8, 5);
  const auto spectrum = dct2(image);
  auto fp = make_fp(FingerprintKind::regression, image.shape());
  fp->values.at(0, 1, 1) = 0.5;
  fp->values.at(1, 4, 2) = -0.25;
  fp->values.at(2, 3, 3) = 0.01;
  CHECK(test::max_abs_diff(attack_regression(image, *fp, 0.0).values(), image.values()) < 1e-9);

  const AttackSpec spec{AttackKind::regression, 4.0, 0.0, fp};
  const auto out = attacked_spectrum(spectrum, spec);
  CHECK(out.at(0, 1, 1) == 0.0);                                              // 4 * 0.5 clips to 1
  CHECK(out.at(1, 4, 2) == doctest::Approx(2.0 * spectrum.at(1, 4, 2)));       // 4 * -0.25 = -1
  CHECK(out.at(2, 3, 3) == doctest::Approx(0.96 * spectrum.at(2, 3, 3)));
  CHECK(out.at(0, 5, 5) == spectrum.at(0, 5, 5));

  const auto wrong = make_fp(FingerprintKind::mean, image.shape());
  CHECK_THROWS_AS(attack_regression(image, *wrong, 1.0), ValidationError);
}

TEST_CASE("outputs are valid clamped images") {
  const auto image = test::random_image(16, 16, 3, 6, true);
  auto mean = make_fp(FingerprintKind::mean, image.shape());
  auto reg = make_fp(FingerprintKind::regression, image.shape());
  SplitMix64 rng(3);
  for (double& v : mean->values.values()) v = 200.0 * rng.normal();
  for (double& v : reg->values.values()) v = rng.normal();
  for (const auto& spec : {AttackSpec{AttackKind::mean, 5.0, 0.0, mean}, AttackSpec{AttackKind::regression, 3.0, 0.0, reg},
                           AttackSpec{AttackKind::bars, 5.0, 0.0, nullptr}}) {
    const auto out = apply_attack(image, spec);
    for (double v : out.values()) CHECK((v >= 0.0 && v <= 255.0));
    CHECK(quantize_8bit(out) == quantize_8bit(quantize_8bit(out)));
  }
}

TEST_CASE("non-negative multiplicative factors keep coefficient signs") {
  const auto spectrum = dct2(test::random_image(8, 8, 3, 7));
  auto peak = make_fp(FingerprintKind::peak, spectrum.shape());
  auto reg = make_fp(FingerprintKind::regression, spectrum.shape());
  SplitMix64 rng(8);
  for (double& v : peak->values.values()) v = rng.uniform() * 4.0;
  for (double& v : reg->values.values()) v = rng.normal();
  for (const auto& spec : {AttackSpec{AttackKind::peaks, 3.0, 0.2, peak}, AttackSpec{AttackKind::regression, 2.0, 0.0, reg}}) {
    const auto out = attacked_spectrum(spectrum, spec);
    for (std::size_t i = 0; i < out.storage().size(); ++i) {
      if (out.storage()[i] != 0.0) CHECK(std::signbit(out.storage()[i]) == std::signbit(spectrum.storage()[i]));
    }
  }
}

TEST_CASE("calibrate_curve on analytic curves") {
  SUBCASE("continuous") {
    const auto cal = calibrate_curve([](double s) { return 60.0 - s; }, StrengthDomain::continuous, 100.0, 30.0, 0.25);
    CHECK(std::abs(cal.strength - 30.0) <= 0.25);
    CHECK(std::abs(cal.mean_psnr - 30.0) <= 0.25);
  }
  SUBCASE("widened once") {
    const auto cal = calibrate_curve([](double s) { return 60.0 - s; }, StrengthDomain::continuous, 10.0, 30.0, 0.25);
    CHECK(std::abs(cal.mean_psnr - 30.0) <= 0.25);
  }
  SUBCASE("too weak even after widening") {
    try {
      calibrate_curve([](double s) { return 60.0 - s; }, StrengthDomain::continuous, 1.0, 30.0, 0.25);
      FAIL("expected CalibrationError");
    } catch (const CalibrationError& e) {
      CHECK(e.psnr_low() == doctest::Approx(50.0));
      CHECK(std::isinf(e.psnr_high()));
    }
  }
  SUBCASE("integer picks the largest strength still above target") {
    const auto cal = calibrate_curve([](double s) { return 40.0 - 1.5 * s; }, StrengthDomain::integer, 32.0, 30.0);
    CHECK(cal.strength == 6.0);
    CHECK(cal.mean_psnr == doctest::Approx(31.0));
    const auto whole = calibrate_curve([](double s) { return 60.0 - s; }, StrengthDomain::integer, 20.0, 30.0);
    CHECK(whole.strength == 20.0);
  }
  SUBCASE("integer unreachable") {
    CHECK_THROWS_AS(calibrate_curve([](double s) { return s > 0 ? 28.0 : INFINITY; }, StrengthDomain::integer, 16.0, 30.0),
                    CalibrationError);
  }
  SUBCASE("invalid arguments") {
    auto curve = [](double s) { return 60.0 - s; };
    CHECK_THROWS_AS(calibrate_curve(curve, StrengthDomain::continuous, 10.0, 0.0), ValidationError);
    CHECK_THROWS_AS(calibrate_curve(curve, StrengthDomain::continuous, 10.0, 30.0, 0.0), ValidationError);
  }
}

TEST_CASE("calibrated attacks hit the target") {
  const auto fakes = synthetic_fakes(60, 11);
  auto fp = std::make_shared<Fingerprint>(estimate_mean_fingerprint(fakes, gen_natural({60, 16, 16, 3, 12, 1.0, 0})));
  const AttackSpec spec{AttackKind::mean, 0.0, 0.0, fp};
  const auto cal = calibrate_strength(spec, fakes, 30.0);
  AttackSpec applied = spec;
  applied.strength = cal.strength;
  std::vector<ImageF> out;
  for (const auto& image : fakes) out.push_back(quantize_8bit(apply_attack(image, applied)));
  const double measured = mean_psnr(fakes, out);
  CHECK(measured == doctest::Approx(cal.mean_psnr).epsilon(1e-12));
  CHECK(std::abs(measured - 30.0) <= 0.25);

  const auto again = calibrate_strength(spec, fakes, 30.0);
  CHECK(again.strength == cal.strength);
  CHECK(again.mean_psnr == cal.mean_psnr);
}

TEST_CASE("unreachable targets") {
  SUBCASE("bars on high-detail images") {
    std::vector<ImageF> noisy;
    for (std::uint64_t i = 0; i < 4; ++i) noisy.push_back(test::random_image(32, 32, 3, 100 + i, true));
    const AttackSpec bars{AttackKind::bars, 0.0, 0.0, nullptr};
    AttackSpec one = bars;
    one.strength = 1;
    std::vector<ImageF> out;
    for (const auto& image : noisy) out.push_back(quantize_8bit(apply_attack(image, one)));
    REQUIRE(mean_psnr(noisy, out) < 30.0);
    CHECK_THROWS_AS(calibrate_strength(bars, noisy, 30.0), CalibrationError);
  }
  SUBCASE("all-zero fingerprint never lowers PSNR") {
    const auto fakes = synthetic_fakes(4, 13);
    const auto zero = make_fp(FingerprintKind::mean, fakes.front().shape());
    try {
      calibrate_strength({AttackKind::mean, 0.0, 0.0, zero}, fakes, 30.0);
      FAIL("expected CalibrationError");
    } catch (const CalibrationError& e) {
      CHECK(std::isinf(e.psnr_low()));
    }
  }
}

TEST_CASE("PSNR falls as strength grows") {
  const auto fakes = synthetic_fakes(8, 14);
  const auto reals = gen_natural({8, 16, 16, 3, 15, 1.0, 0});
  const auto mean = std::make_shared<Fingerprint>(estimate_mean_fingerprint(fakes, reals));
  const auto peak = std::make_shared<Fingerprint>(estimate_peak_fingerprint(fakes, reals));
  auto reg = make_fp(FingerprintKind::regression, fakes.front().shape());
  SplitMix64 rng(4);
  for (double& v : reg->values.values()) v = 0.01 * rng.normal();

  auto psnr_at = [&](AttackSpec spec, double s) {
    spec.strength = s;
    std::vector<ImageF> out;
    for (const auto& image : fakes) out.push_back(quantize_8bit(apply_attack(image, spec)));
    return mean_psnr(fakes, out);
  };
  const std::vector<std::pair<AttackSpec, std::vector<double>>> grids{
      {{AttackKind::mean, 0, 0, mean}, {0.25, 0.5, 1, 2, 4}},
      {{AttackKind::peaks, 0, 0.3, peak}, {0.1, 0.2, 0.4, 0.8, 1.0}},
      {{AttackKind::bars, 0, 0, nullptr}, {1, 2, 4, 8, 16}},
  };
  for (const auto& [spec, grid] : grids) {
    for (std::size_t k = 1; k < grid.size(); ++k) CHECK(psnr_at(spec, grid[k - 1]) >= psnr_at(spec, grid[k]));
  }
  // Amplified bins can make the regression curve non-monotone; only report it.
  std::size_t violations = 0;
  const std::vector<double> grid{1, 10, 50, 100, 500};
  for (std::size_t k = 1; k < grid.size(); ++k)
    violations += psnr_at({AttackKind::regression, 0, 0, reg}, grid[k - 1]) < psnr_at({AttackKind::regression, 0, 0, reg}, grid[k]);
  MESSAGE("regression monotonicity violations: " << violations);
}

TEST_CASE("attack names and limits") {
  for (auto k : {AttackKind::none, AttackKind::bars, AttackKind::mean, AttackKind::peaks, AttackKind::regression})
    CHECK(parse_attack_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_attack_kind("blur"), ValidationError);
  CHECK(max_strength(AttackKind::bars, Shape{32, 16, 3}) == 16.0);
  CHECK(max_strength(AttackKind::mean, Shape{32, 16, 3}) == 1e4);
  CHECK(max_strength(AttackKind::regression, Shape{32, 16, 3}) == 1e3);
  CHECK(max_strength(AttackKind::peaks, Shape{32, 16, 3}) == 1e2);
}

}
