#include "gpedge/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpedge/errors.hpp"

namespace gpedge {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    parts.push_back(trim(item));
  }
  return parts;
}

}  // namespace

std::vector<OcclusionSpan> parse_occlusion_spans(const std::string& text) {
  std::vector<OcclusionSpan> spans;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("occlusion span '" + part + "' must be begin:end");
    }
    OcclusionSpan span;
    span.begin = parse_int("occlusions", part.substr(0, colon));
    span.end = parse_int("occlusions", part.substr(colon + 1));
    if (span.end < span.begin) {
      throw ConfigError("occlusion span '" + part + "' ends before it begins");
    }
    spans.push_back(span);
  }
  return spans;
}

std::vector<std::pair<double, double>> parse_point_list(const std::string& text) {
  std::vector<std::pair<double, double>> points;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    const auto comma = token.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("point '" + token + "' must be x,y");
    }
    points.emplace_back(parse_double("endpoints", token.substr(0, comma)),
                        parse_double("endpoints", token.substr(comma + 1)));
  }
  return points;
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::string kernel_family = "matern";
  double nu = 2.5;
  double signal_variance = 5625.0;
  double lengthscale = 20.0;

  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto equals = line.find('=');
    if (equals == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_number) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_number) + ": empty key or value");
    }

    if (key == "kernel") {
      kernel_family = value;
    } else if (key == "nu") {
      nu = parse_double(key, value);
    } else if (key == "signal_variance") {
      signal_variance = parse_double(key, value);
    } else if (key == "lengthscale") {
      lengthscale = parse_double(key, value);
    } else if (key == "noise_variance") {
      config.trace.noise_variance = parse_double(key, value);
    } else if (key == "curves") {
      config.trace.curves = parse_int(key, value);
    } else if (key == "keep_ratio") {
      config.trace.keep_ratio = parse_double(key, value);
    } else if (key == "threshold") {
      config.trace.threshold = parse_double(key, value);
    } else if (key == "bin_width") {
      config.trace.bin_width = parse_double(key, value);
    } else if (key == "density_lengthscale") {
      config.trace.density_lengthscale = parse_double(key, value);
    } else if (key == "threshold_reduction") {
      config.trace.threshold_reduction = parse_double(key, value);
    } else if (key == "threshold_floor") {
      config.trace.threshold_floor = parse_double(key, value);
    } else if (key == "max_iterations") {
      config.trace.max_iterations = parse_int(key, value);
    } else if (key == "seed") {
      config.trace.seed = static_cast<std::uint64_t>(parse_double(key, value));
    } else if (key == "image") {
      config.image_path = value;
    } else if (key == "gradient") {
      config.gradient_path = value;
    } else if (key == "synthetic") {
      config.synthetic = parse_bool(key, value);
    } else if (key == "width") {
      config.synth.cols = parse_int(key, value);
    } else if (key == "height") {
      config.synth.rows = parse_int(key, value);
    } else if (key == "amplitude") {
      config.synth.amplitude = parse_double(key, value);
    } else if (key == "periods") {
      config.synth.periods = parse_double(key, value);
    } else if (key == "noise_level") {
      config.synth.noise_level = parse_double(key, value);
    } else if (key == "occlusions") {
      config.synth.occlusions = parse_occlusion_spans(value);
    } else if (key == "endpoints") {
      config.endpoints = parse_point_list(value);
    } else if (key == "endpoint_noise") {
      config.endpoint_noise = parse_double(key, value);
    } else if (key == "out") {
      config.out_dir = value;
    } else if (key == "polar") {
      config.polar = parse_bool(key, value);
    } else if (key == "polar_center") {
      const auto points = parse_point_list(value);
      if (points.size() != 1) {
        throw ConfigError("polar_center expects a single x,y pair");
      }
      config.polar_center_x = points[0].first;
      config.polar_center_y = points[0].second;
    } else {
      throw ConfigError(origin + ":" + std::to_string(line_number) + ": unknown config key '" +
                        key + "'");
    }
  }

  if (kernel_family == "se" || kernel_family == "squared_exponential") {
    config.trace.kernel = KernelSpec::squared_exponential(signal_variance, lengthscale);
  } else if (kernel_family == "matern") {
    config.trace.kernel = KernelSpec::matern(nu, signal_variance, lengthscale);
  } else {
    throw ConfigError("unknown kernel family '" + kernel_family +
                      "' (expected matern or squared_exponential)");
  }
  config.trace.validate(0);

  if (!config.synthetic && config.image_path.empty() && config.gradient_path.empty()) {
    throw ConfigError("config must set one of: image, gradient, synthetic = true");
  }
  if (config.endpoint_noise && !(*config.endpoint_noise >= 0.0)) {
    throw ConfigError("endpoint_noise must be non-negative");
  }
  if (config.polar && (config.polar_center_x < 0 || config.polar_center_y < 0)) {
    throw ConfigError("polar mode requires polar_center = x,y");
  }
  return config;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config_text(buffer.str(), path);
}

}  // namespace gpedge
