#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fpforge/error.hpp"
#include "fpforge/evaluation.hpp"
#include "fpforge/imageio.hpp"
#include "fpforge/metrics.hpp"

namespace fpforge {

namespace {

using Json = nlohmann::ordered_json;

std::string fixed(double value, int decimals) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  return buffer;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

Json optional_number(const std::optional<double>& value) {
  if (!value) return nullptr;
  if (std::isinf(*value)) return *value > 0 ? "inf" : "-inf";
  return *value;
}

std::optional<double> read_optional(const Json& node) {
  if (node.is_null()) return std::nullopt;
  if (node.is_string()) {
    const auto text = node.get<std::string>();
    if (text == "inf") return kInfinitePsnr;
    if (text == "-inf") return -kInfinitePsnr;
    throw FormatError(FormatError::Reason::unsupported, "unexpected string '" + text + "' in report");
  }
  return node.get<double>();
}

}  // namespace

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw ValidationError("unknown report format '" + text + "' (csv, json)");
}

std::string render_csv(const RunReport& report) {
  std::string out = "dataset,detector,model,accuracy,attack,success_rate,psnr,params\n";
  for (const auto& row : report.rows) {
    out += csv_field(row.dataset) + ',' + csv_field(row.detector) + ',' + csv_field(row.model) + ',' +
           fixed(row.accuracy, 4) + ',' + csv_field(row.attack) + ',' +
           (row.success_rate ? fixed(*row.success_rate, 4) : "") + ',' + (row.psnr ? fixed(*row.psnr, 4) : "") +
           ',' + csv_field(row.params) + '\n';
  }
  return out;
}

std::string render_json(const RunReport& report) {
  Json root;
  Json config = Json::object();
  for (const auto& [key, value] : report.config) config[key] = value;
  root["config"] = config;
  Json env = Json::object();
  for (const auto& [key, value] : report.environment) env[key] = value;
  root["environment"] = env;
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["dataset"] = row.dataset;
    r["detector"] = row.detector;
    r["model"] = row.model;
    r["accuracy"] = row.accuracy;
    r["attack"] = row.attack;
    r["success_rate"] = optional_number(row.success_rate);
    r["psnr"] = optional_number(row.psnr);
    r["calibration_psnr"] = optional_number(row.calibration_psnr);
    r["params"] = row.params;
    rows.push_back(std::move(r));
  }
  root["rows"] = rows;
  return root.dump(2) + "\n";
}

RunReport parse_json_report(const std::string& text) {
  RunReport report;
  try {
    const Json root = Json::parse(text);
    for (const auto& [key, value] : root.at("config").items()) report.config.emplace_back(key, value.get<std::string>());
    for (const auto& [key, value] : root.at("environment").items()) report.environment[key] = value.get<std::string>();
    for (const auto& r : root.at("rows")) {
      ReportRow row;
      row.dataset = r.at("dataset").get<std::string>();
      row.detector = r.at("detector").get<std::string>();
      row.model = r.at("model").get<std::string>();
      row.accuracy = r.at("accuracy").get<double>();
      row.attack = r.at("attack").get<std::string>();
      row.success_rate = read_optional(r.at("success_rate"));
      row.psnr = read_optional(r.at("psnr"));
      row.calibration_psnr = read_optional(r.value("calibration_psnr", Json()));
      row.params = r.at("params").get<std::string>();
      report.rows.push_back(std::move(row));
    }
  } catch (const Json::exception& e) {
    throw FormatError(FormatError::Reason::unsupported, std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string render_cross_csv(const CrossRemoval& cross) {
  std::string out = "images";
  for (const auto& m : cross.models) out += ",fp_" + m;
  out += '\n';
  for (std::size_t r = 0; r < cross.models.size(); ++r) {
    out += cross.models[r];
    for (std::size_t c = 0; c < cross.models.size(); ++c) out += ',' + fixed(cross.success[r][c], 4);
    out += '\n';
  }
  return out;
}

void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (format == ReportFormat::csv ? render_csv(report) : render_json(report));
  if (!out) throw IoError("write failed for " + path.string());
}

ImageF spectrum_heatmap(std::span<const ImageF> images, double eps) {
  if (images.empty()) throw ValidationError("heatmap needs at least one image");
  const Shape shape = images.front().shape();
  std::vector<double> mean(shape.plane_size(), 0.0);
  for (const auto& image : images) {
    if (!(image.shape() == shape)) throw ValidationError("heatmap images differ in shape");
    const auto spectrum = dct2(image);
    for (std::size_t c = 0; c < shape.channels; ++c) {
      const auto plane = spectrum.plane(c);
      for (std::size_t i = 0; i < plane.size(); ++i) mean[i] += plane[i];
    }
  }
  const double count = static_cast<double>(images.size() * shape.channels);
  ImageF out(Shape{shape.width, shape.height, 1});
  auto& values = out.storage();
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double v = std::clamp(std::log(std::abs(mean[i] / count) + eps), -10.0, 10.0);
    values[i] = std::round((v + 10.0) / 20.0 * 255.0);
  }
  return out;
}

void emit_spectrum_heatmap(std::span<const ImageF> images, const std::filesystem::path& out) {
  save_png(spectrum_heatmap(images), out);
}

}  // namespace fpforge
