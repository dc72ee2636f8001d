import math

import numpy as np
import pytest

import fpforge


def test_dct_round_trip_and_parseval():
    rng = np.random.default_rng(0)
    image = rng.uniform(0, 255, size=(16, 24, 3))
    spectrum = fpforge.dct2(image)
    assert spectrum.shape == image.shape
    assert np.abs(fpforge.idct2(spectrum) - image).max() < 1e-9
    assert math.isclose((spectrum**2).sum(), (image**2).sum(), rel_tol=1e-12)


def test_constant_image_is_dc_only():
    spectrum = fpforge.dct2(np.full((8, 8), 100.0))
    assert spectrum[0, 0] == pytest.approx(800.0)
    spectrum[0, 0] = 0
    assert np.abs(spectrum).max() < 1e-9


def test_psnr_closed_form():
    a = np.full((8, 8, 3), 100.0)
    assert fpforge.psnr(a, a + 8) == pytest.approx(30.07, abs=0.01)
    assert math.isinf(fpforge.psnr(a, a))


def test_fft_rejects_odd_sizes():
    with pytest.raises(fpforge.ValidationError):
        fpforge.fft_magnitude(np.zeros((6, 6)))


def test_synthetic_pipeline(tmp_path):
    fakes = fpforge.gen_fake(120, seed=1, band="both:2:23")
    reals = fpforge.gen_natural(120, seed=2)
    fp = fpforge.estimate_mean_fingerprint(fakes, reals)
    assert fp.kind == "mean"
    assert fp.values.shape == (32, 32, 3)

    detector = fpforge.fit_ridge(fakes[:60], reals[:60])
    assert detector.predict(fakes[100])[0] == "fake"

    strength, achieved = fpforge.calibrate_strength(fakes[60:], "mean", fp, target_psnr=30.0)
    assert strength > 0
    assert abs(achieved - 30.0) <= 0.25

    path = tmp_path / "mean.fpfg"
    fp.save(path)
    loaded = fpforge.Fingerprint.load(path)
    assert np.array_equal(loaded.values, fp.values)

    detector.save(tmp_path / "ridge.fpdm")
    again = fpforge.Detector.load(tmp_path / "ridge.fpdm")
    assert again.predict(fakes[0]) == detector.predict(fakes[0])


def test_lasso_single_feature_soft_threshold():
    x = np.array([[1.0], [-1.0], [2.0], [-2.0]])
    y = [2.0, -2.0, 4.0, -4.0]
    fit = fpforge.lasso(x, y, lam=0.5)
    # 1/n x'x = 2.5, 1/n x'y = 5: w = (5 - 0.5) / 2.5
    assert fit["weights"][0] == pytest.approx(1.8, abs=1e-9)


def test_bad_config_is_a_validation_error():
    with pytest.raises(fpforge.ValidationError):
        fpforge.parse_run_config("no_such_key = 1\n")


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(fpforge.IoError):
        fpforge.load_png(tmp_path / "missing.png")
