#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <sstream>

#include "fpforge/attacks.hpp"
#include "fpforge/detectors.hpp"
#include "fpforge/error.hpp"
#include "fpforge/evaluation.hpp"
#include "fpforge/fingerprint.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/metrics.hpp"
#include "fpforge/perturb.hpp"
#include "fpforge/spectral.hpp"
#include "fpforge/synth.hpp"

namespace py = pybind11;
using namespace fpforge;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// numpy (H, W) or (H, W, C) <-> channel-planar arrays.
template <class A>
A from_numpy(const Array& in) {
  const auto info = in.request();
  if (info.ndim != 2 && info.ndim != 3) throw ValidationError("expected an (H, W) or (H, W, C) array");
  const std::size_t h = info.shape[0];
  const std::size_t w = info.shape[1];
  const std::size_t c = info.ndim == 3 ? info.shape[2] : 1;
  A out(Shape{w, h, c});
  const double* src = in.data();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k) out.at(k, y, x) = src[(y * w + x) * c + k];
  return out;
}

template <class A>
Array to_numpy(const A& in) {
  const auto& s = in.shape();
  Array out = s.channels == 1 ? Array({s.height, s.width}) : Array({s.height, s.width, s.channels});
  double* dst = out.mutable_data();
  for (std::size_t y = 0; y < s.height; ++y)
    for (std::size_t x = 0; x < s.width; ++x)
      for (std::size_t k = 0; k < s.channels; ++k) dst[(y * s.width + x) * s.channels + k] = in.at(k, y, x);
  return out;
}

std::vector<ImageF> images_from(const std::vector<Array>& arrays) {
  std::vector<ImageF> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(from_numpy<ImageF>(a));
  return out;
}

std::vector<Array> images_to(const std::vector<ImageF>& images) {
  std::vector<Array> out;
  for (const auto& image : images) out.push_back(to_numpy(image));
  return out;
}

ArtifactSpec artifact_from(const std::string& artifact, const std::string& bins, const std::string& band,
                           std::size_t factor, const std::string& kernel, const Shape& shape) {
  ArtifactSpec spec;
  spec.mode = parse_artifact_mode(artifact);
  if (!bins.empty()) spec.bins = parse_bins(bins);
  if (!band.empty()) {
    std::stringstream in(band);
    std::string side, width, amp;
    std::getline(in, side, ':');
    std::getline(in, width, ':');
    std::getline(in, amp, ':');
    const auto extra = edge_band_bins(shape, parse_edge_side(side), std::stoul(width), std::stod(amp));
    spec.bins.insert(spec.bins.end(), extra.begin(), extra.end());
  }
  spec.upsample_factor = factor;
  spec.kernel = parse_upsample_kernel(kernel);
  return spec;
}

AttackSpec attack_from(const std::string& kind, double strength, std::shared_ptr<Fingerprint> fp, double threshold) {
  AttackSpec spec;
  spec.kind = parse_attack_kind(kind);
  spec.strength = strength;
  spec.threshold = threshold;
  spec.fingerprint = std::move(fp);
  return spec;
}

// std::variant would be unpacked by the stl casters; keep it opaque.
struct Detector {
  DetectorModel model;
};

}  // namespace

PYBIND11_MODULE(_fpforge, m) {
  m.doc() = "DCT fingerprints of generated images: estimation, removal and detection.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<CalibrationError>(m, "CalibrationError", base.ptr());

  m.def("dct2", [](const Array& a) { return to_numpy(dct2(from_numpy<ImageF>(a))); });
  m.def("idct2", [](const Array& a) { return to_numpy(idct2(from_numpy<Spectrum>(a))); });
  m.def("fft_magnitude", [](const Array& a) { return to_numpy(fft_magnitude(from_numpy<ImageF>(a))); });
  m.def("log_scale", [](const Array& a, double eps) { return to_numpy(log_scale(from_numpy<Spectrum>(a), eps)); },
        py::arg("spectrum"), py::arg("eps") = kDefaultLogEps);

  m.def("load_png", [](const std::filesystem::path& p) { return to_numpy(load_png(p)); });
  m.def("save_png", [](const Array& a, const std::filesystem::path& p) { save_png(from_numpy<ImageF>(a), p); });
  m.def("psnr", [](const Array& a, const Array& b) { return psnr(from_numpy<ImageF>(a), from_numpy<ImageF>(b)); });
  m.def("success_rate", [](const std::vector<std::string>& labels) {
    std::vector<Label> l;
    for (const auto& s : labels) {
      if (s != "natural" && s != "fake") throw ValidationError("labels must be 'natural' or 'fake'");
      l.push_back(s == "natural" ? Label::natural : Label::fake);
    }
    return success_rate(l);
  });

  m.def(
      "gen_natural",
      [](std::size_t count, std::size_t width, std::size_t height, std::size_t channels, std::uint64_t seed,
         double smoothness, std::size_t first_index) {
        return images_to(gen_natural({count, width, height, channels, seed, smoothness, first_index}));
      },
      py::arg("count"), py::arg("width") = 32, py::arg("height") = 32, py::arg("channels") = 3, py::arg("seed") = 0,
      py::arg("smoothness") = 1.0, py::arg("first_index") = 0);
  m.def(
      "gen_fake",
      [](std::size_t count, std::size_t width, std::size_t height, std::size_t channels, std::uint64_t seed,
         const std::string& artifact, const std::string& bins, const std::string& band, std::size_t factor,
         const std::string& kernel, double smoothness, std::size_t first_index) {
        SynthConfig cfg{count, width, height, channels, seed, smoothness, first_index};
        return images_to(gen_fake(cfg, artifact_from(artifact, bins, band, factor, kernel, {width, height, channels})));
      },
      py::arg("count"), py::arg("width") = 32, py::arg("height") = 32, py::arg("channels") = 3, py::arg("seed") = 0,
      py::arg("artifact") = "additive_bins", py::arg("bins") = "", py::arg("band") = "", py::arg("upsample_factor") = 2,
      py::arg("kernel") = "zero_insertion", py::arg("smoothness") = 1.0, py::arg("first_index") = 0);

  py::class_<Fingerprint, std::shared_ptr<Fingerprint>>(m, "Fingerprint")
      .def_property_readonly("kind", [](const Fingerprint& f) { return to_string(f.kind); })
      .def_property_readonly("values", [](const Fingerprint& f) { return to_numpy(f.values); })
      .def_readonly("eps", &Fingerprint::eps)
      .def_readonly("n_fake", &Fingerprint::n_fake)
      .def_readonly("n_real", &Fingerprint::n_real)
      .def_readonly("seed", &Fingerprint::seed)
      .def("save", [](const Fingerprint& f, const std::filesystem::path& p) { save_fingerprint(f, p); })
      .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<Fingerprint>(load_fingerprint(p)); });

  m.def("estimate_mean_fingerprint", [](const std::vector<Array>& fakes, const std::vector<Array>& reals) {
    return std::make_shared<Fingerprint>(estimate_mean_fingerprint(images_from(fakes), images_from(reals)));
  });
  m.def(
      "estimate_peak_fingerprint",
      [](const std::vector<Array>& fakes, const std::vector<Array>& reals, double eps) {
        return std::make_shared<Fingerprint>(estimate_peak_fingerprint(images_from(fakes), images_from(reals), eps));
      },
      py::arg("fakes"), py::arg("reals"), py::arg("eps") = kDefaultLogEps);
  m.def("process_peak_fingerprint", [](const Fingerprint& fp, double threshold, double strength) {
    return std::make_shared<Fingerprint>(process_peak_fingerprint(fp, threshold, strength));
  });
  m.def(
      "train_lasso",
      [](const std::vector<Array>& fakes, const std::vector<Array>& reals, double lambda, std::size_t max_iterations) {
        LassoConfig cfg;
        cfg.lambda = lambda;
        cfg.max_iterations = max_iterations;
        return std::make_shared<Fingerprint>(train_lasso(images_from(fakes), images_from(reals), cfg).fingerprint);
      },
      py::arg("fakes"), py::arg("reals"), py::arg("lam") = 0.05, py::arg("max_iterations") = 200);
  m.def(
      "lasso",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, const std::vector<double>& y,
         double lambda, std::size_t max_iterations, double tolerance) {
        if (x.ndim() != 2) throw ValidationError("features must be an (n, d) array");
        FeatureMatrix features(x.shape(0), x.shape(1));
        for (py::ssize_t i = 0; i < x.shape(0); ++i)
          for (py::ssize_t j = 0; j < x.shape(1); ++j) features(i, j) = x.at(i, j);
        const auto fit = lasso_coordinate_descent(features, y, {lambda, max_iterations, tolerance});
        py::dict out;
        out["weights"] = fit.weights;
        out["intercept"] = fit.intercept;
        out["converged"] = fit.converged;
        out["objective_history"] = fit.objective_history;
        return out;
      },
      py::arg("features"), py::arg("targets"), py::arg("lam"), py::arg("max_iterations") = 1000,
      py::arg("tolerance") = 1e-7);

  m.def(
      "apply_attack",
      [](const Array& image, const std::string& kind, double strength, std::shared_ptr<Fingerprint> fp,
         double threshold) {
        return to_numpy(apply_attack(from_numpy<ImageF>(image), attack_from(kind, strength, std::move(fp), threshold)));
      },
      py::arg("image"), py::arg("kind"), py::arg("strength"), py::arg("fingerprint") = nullptr,
      py::arg("threshold") = 0.0);
  m.def(
      "calibrate_strength",
      [](const std::vector<Array>& images, const std::string& kind, std::shared_ptr<Fingerprint> fp,
         double threshold, double target_psnr, double tolerance) {
        const auto cal = calibrate_strength(attack_from(kind, 0.0, std::move(fp), threshold), images_from(images),
                                            target_psnr, tolerance);
        return py::make_tuple(cal.strength, cal.mean_psnr);
      },
      py::arg("images"), py::arg("kind"), py::arg("fingerprint") = nullptr, py::arg("threshold") = 0.0,
      py::arg("target_psnr") = 30.0, py::arg("tolerance") = kDefaultPsnrTolerance);

  m.def("crop_resize", [](const Array& a, double f) { return to_numpy(crop_resize(from_numpy<ImageF>(a), f)); });
  m.def("add_noise", [](const Array& a, double sigma, std::uint64_t seed) {
    return to_numpy(add_noise(from_numpy<ImageF>(a), sigma, seed));
  });
  m.def("blur", [](const Array& a, double sigma) { return to_numpy(blur(from_numpy<ImageF>(a), sigma)); });
  m.def("jpeg_compress", [](const Array& a, int q) { return to_numpy(jpeg_compress(from_numpy<ImageF>(a), q)); });

  py::class_<Detector>(m, "Detector")
      .def_property_readonly("kind", [](const Detector& d) { return detector_name(d.model); })
      .def("predict",
           [](const Detector& d, const Array& image) {
             const auto p = predict(d.model, from_numpy<ImageF>(image));
             return py::make_tuple(std::string(to_string(p.label)), p.score);
           })
      .def("save", [](const Detector& d, const std::filesystem::path& p) { save_detector(d.model, p); })
      .def_static("load", [](const std::filesystem::path& p) { return Detector{load_detector(p)}; });
  m.def("fit_cosine", [](const std::vector<Array>& fakes, const std::vector<Array>& reals) {
    return Detector{fit_cosine_detector(images_from(fakes), images_from(reals))};
  });
  m.def(
      "fit_ridge",
      [](const std::vector<Array>& fakes, const std::vector<Array>& reals, double lambda) {
        return Detector{ridge_fit(images_from(fakes), images_from(reals), lambda)};
      },
      py::arg("fakes"), py::arg("reals"), py::arg("lam") = 1.0);

  m.def("parse_run_config", [](const std::string& text) { return format_run_config(parse_run_config(text)); },
        "Validates a config and returns it with every key resolved.");
  m.def(
      "run_evaluation",
      [](const std::string& config_text, const std::string& format) {
        const auto report = run_evaluation(parse_run_config(config_text));
        return parse_report_format(format) == ReportFormat::csv ? render_csv(report) : render_json(report);
      },
      py::arg("config"), py::arg("format") = "json");
  m.def("cross_removal", [](const std::string& config_text) {
    const auto cross = cross_removal(parse_run_config(config_text));
    py::dict out;
    out["models"] = cross.models;
    out["success"] = cross.success;
    out["psnr"] = cross.psnr;
    return out;
  });
  m.def("spectrum_heatmap", [](const std::vector<Array>& images) {
    return to_numpy(spectrum_heatmap(images_from(images)));
  });
}
