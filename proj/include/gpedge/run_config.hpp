#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpedge/image.hpp"
#include "gpedge/tracer.hpp"

namespace gpedge {

// Parameters of the synthetic sinusoid generator as configured by the CLI.
struct SyntheticParams {
  int rows = 500;
  int cols = 720;
  double amplitude = 75.0;
  double periods = 4.0;
  double noise_level = 0.05;
  std::vector<OcclusionSpan> occlusions = {{385, 430}, {650, 700}};
};

// A full tracing run as described by a key = value config file.
struct RunConfig {
  TraceConfig trace;
  std::string image_path;     // grayscale input image
  std::string gradient_path;  // precomputed gradient override
  bool synthetic = false;
  SyntheticParams synth;
  std::vector<std::pair<double, double>> endpoints;  // (column, row)
  std::optional<double> endpoint_noise;              // per-point override for endpoints
  std::string out_dir = ".";
  bool polar = false;
  double polar_center_x = -1.0;
  double polar_center_y = -1.0;
};

// Parses and validates a config file; unknown keys are rejected.
RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

std::vector<OcclusionSpan> parse_occlusion_spans(const std::string& text);
std::vector<std::pair<double, double>> parse_point_list(const std::string& text);

}  // namespace gpedge
