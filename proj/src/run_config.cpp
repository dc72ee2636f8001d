#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fpforge/evaluation.hpp"

namespace fpforge {

namespace {

const std::set<std::string> kDetectors{"cosine", "ridge"};
const std::set<std::string> kAttacks{"none", "bars", "mean", "peaks", "regression", "crop", "noise", "blur", "jpeg"};

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string number(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value.front() == '-') throw std::invalid_argument(value);
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
}

std::size_t to_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(to_u64(key, value));
}

bool valid_model_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char ch) {
    return std::isalnum(ch) || ch == '_' || ch == '-';
  });
}

}  // namespace

void RunConfig::validate() const {
  if (dataset != "synth" && dataset != "files") throw ValidationError("dataset must be 'synth' or 'files'");
  if (width == 0 || height == 0) throw ValidationError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ValidationError("channels must be 1 or 3");
  if (holdout_count < 1 || fit_count < 1 || eval_count < 1 || calibration_count < 1) {
    throw ValidationError("holdout, fit, eval and calibration counts must be at least 1");
  }
  if (!(target_psnr > 0.0)) throw ValidationError("target_psnr must be positive");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  if (!(ridge_lambda >= 0.0) || !(lasso_lambda >= 0.0)) throw ValidationError("regularization weights must be >= 0");
  if (lasso_max_iterations < 1) throw ValidationError("lasso_max_iterations must be at least 1");
  if (!(log_eps > 0.0)) throw ValidationError("log_eps must be positive");
  if (peak_thresholds.empty()) throw ValidationError("peak_thresholds must not be empty");
  for (double t : peak_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("peak thresholds must lie in [0, 1]");
  }
  if (models.empty()) throw ValidationError("at least one model is required");
  std::set<std::string> names;
  for (const auto& model : models) {
    if (!valid_model_name(model.name)) throw ValidationError("invalid model name '" + model.name + "'");
    if (!names.insert(model.name).second) throw ValidationError("duplicate model '" + model.name + "'");
    if (dataset == "files" && model.directory.empty()) {
      throw ValidationError("model '" + model.name + "' needs model." + model.name + ".dir in files mode");
    }
    if (dataset == "synth") {
      SynthConfig synth{1, width, height, channels, seed, smoothness, 0};
      synth.validate();
      model.artifact.validate(synth);
    }
  }
  if (dataset == "files" && real_dir.empty()) throw ValidationError("files mode needs real_dir");
  for (const auto& d : detectors) {
    if (!kDetectors.count(d)) throw ValidationError("unknown detector '" + d + "'");
  }
  for (const auto& a : attacks) {
    if (!kAttacks.count(a)) throw ValidationError("unknown attack '" + a + "'");
  }
  if (cross_attack != "mean" && cross_attack != "peaks" && cross_attack != "regression") {
    throw ValidationError("cross_attack must be mean, peaks or regression");
  }
  if (!kDetectors.count(cross_detector)) throw ValidationError("unknown cross_detector '" + cross_detector + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("dataset", dataset);
  kv.emplace_back("width", std::to_string(width));
  kv.emplace_back("height", std::to_string(height));
  kv.emplace_back("channels", std::to_string(channels));
  kv.emplace_back("smoothness", number(smoothness));
  kv.emplace_back("real_dir", real_dir.string());
  std::vector<std::string> names;
  for (const auto& m : models) names.push_back(m.name);
  kv.emplace_back("models", join(names));
  for (const auto& m : models) {
    const std::string prefix = "model." + m.name + ".";
    if (dataset == "files") {
      kv.emplace_back(prefix + "dir", m.directory.string());
      continue;
    }
    kv.emplace_back(prefix + "artifact", to_string(m.artifact.mode));
    if (m.artifact.mode == ArtifactMode::upsample) {
      kv.emplace_back(prefix + "upsample_factor", std::to_string(m.artifact.upsample_factor));
      kv.emplace_back(prefix + "upsample_kernel", to_string(m.artifact.kernel));
    } else {
      kv.emplace_back(prefix + "bins", format_bins(m.artifact.bins));
    }
  }
  kv.emplace_back("detectors", join(detectors));
  kv.emplace_back("attacks", join(attacks));
  kv.emplace_back("target_psnr", number(target_psnr));
  kv.emplace_back("tolerance", number(tolerance));
  kv.emplace_back("holdout_count", std::to_string(holdout_count));
  kv.emplace_back("fit_count", std::to_string(fit_count));
  kv.emplace_back("eval_count", std::to_string(eval_count));
  kv.emplace_back("calibration_count", std::to_string(calibration_count));
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("ridge_lambda", number(ridge_lambda));
  kv.emplace_back("lasso_lambda", number(lasso_lambda));
  kv.emplace_back("lasso_max_iterations", std::to_string(lasso_max_iterations));
  std::vector<std::string> ts;
  for (double t : peak_thresholds) ts.push_back(number(t));
  kv.emplace_back("peak_thresholds", join(ts));
  kv.emplace_back("log_eps", number(log_eps));
  kv.emplace_back("cross_attack", cross_attack);
  kv.emplace_back("cross_detector", cross_detector);
  kv.emplace_back("output_dir", output_dir.string());
  return kv;
}

std::string format_run_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : cfg.to_key_values()) out += key + " = " + value + "\n";
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + " has an empty key");
    if (!entries.emplace(key, value).second) throw ValidationError("config key '" + key + "' appears twice");
  }

  RunConfig cfg;
  const auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string value = it->second;
    entries.erase(it);
    return value;
  };

  if (auto v = take("dataset")) cfg.dataset = *v;
  if (auto v = take("width")) cfg.width = to_size("width", *v);
  if (auto v = take("height")) cfg.height = to_size("height", *v);
  if (auto v = take("channels")) cfg.channels = to_size("channels", *v);
  if (auto v = take("smoothness")) cfg.smoothness = to_double("smoothness", *v);
  if (auto v = take("real_dir")) cfg.real_dir = *v;
  if (auto v = take("detectors")) cfg.detectors = split_list(*v);
  if (auto v = take("attacks")) cfg.attacks = split_list(*v);
  if (auto v = take("target_psnr")) cfg.target_psnr = to_double("target_psnr", *v);
  if (auto v = take("tolerance")) cfg.tolerance = to_double("tolerance", *v);
  if (auto v = take("holdout_count")) cfg.holdout_count = to_size("holdout_count", *v);
  if (auto v = take("fit_count")) cfg.fit_count = to_size("fit_count", *v);
  if (auto v = take("eval_count")) cfg.eval_count = to_size("eval_count", *v);
  if (auto v = take("calibration_count")) cfg.calibration_count = to_size("calibration_count", *v);
  if (auto v = take("seed")) cfg.seed = to_u64("seed", *v);
  if (auto v = take("ridge_lambda")) cfg.ridge_lambda = to_double("ridge_lambda", *v);
  if (auto v = take("lasso_lambda")) cfg.lasso_lambda = to_double("lasso_lambda", *v);
  if (auto v = take("lasso_max_iterations")) cfg.lasso_max_iterations = to_size("lasso_max_iterations", *v);
  if (auto v = take("peak_thresholds")) {
    cfg.peak_thresholds.clear();
    for (const auto& item : split_list(*v)) cfg.peak_thresholds.push_back(to_double("peak_thresholds", item));
  }
  if (auto v = take("log_eps")) cfg.log_eps = to_double("log_eps", *v);
  if (auto v = take("cross_attack")) cfg.cross_attack = *v;
  if (auto v = take("cross_detector")) cfg.cross_detector = *v;
  if (auto v = take("output_dir")) cfg.output_dir = *v;

  if (auto v = take("models")) {
    for (const auto& name : split_list(*v)) {
      ModelSource model;
      model.name = name;
      const std::string prefix = "model." + name + ".";
      if (auto d = take(prefix + "dir")) model.directory = *d;
      if (auto a = take(prefix + "artifact")) model.artifact.mode = parse_artifact_mode(*a);
      if (auto b = take(prefix + "bins")) model.artifact.bins = parse_bins(*b);
      if (auto band = take(prefix + "band")) {
        // side:width:amplitude
        std::stringstream fields(*band);
        std::string side, width, amplitude;
        std::getline(fields, side, ':');
        std::getline(fields, width, ':');
        std::getline(fields, amplitude, ':');
        const auto extra = edge_band_bins(Shape{cfg.width, cfg.height, cfg.channels}, parse_edge_side(trim(side)),
                                          to_size(prefix + "band", trim(width)),
                                          to_double(prefix + "band", trim(amplitude)));
        model.artifact.bins.insert(model.artifact.bins.end(), extra.begin(), extra.end());
      }
      if (auto f = take(prefix + "upsample_factor")) model.artifact.upsample_factor = to_size(prefix + "upsample_factor", *f);
      if (auto k = take(prefix + "upsample_kernel")) model.artifact.kernel = parse_upsample_kernel(*k);
      cfg.models.push_back(std::move(model));
    }
  }

  if (!entries.empty()) throw ValidationError("unknown config key '" + entries.begin()->first + "'");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

}  // namespace fpforge
