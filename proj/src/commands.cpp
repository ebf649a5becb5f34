#include "gpedge/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gpedge/errors.hpp"
#include "gpedge/eval.hpp"
#include "gpedge/io.hpp"
#include "gpedge/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gpedge::cli {

namespace {

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir + ": " + ec.message());
  }
}

ObservationSet endpoints_to_observations(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) {
    throw ConfigError("at least two endpoints are required");
  }
  std::vector<std::pair<double, double>> sorted = points;
  std::sort(sorted.begin(), sorted.end());
  ObservationSet obs;
  obs.x.resize(static_cast<Eigen::Index>(sorted.size()));
  obs.y.resize(static_cast<Eigen::Index>(sorted.size()));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    obs.x[static_cast<Eigen::Index>(i)] = sorted[i].first;
    obs.y[static_cast<Eigen::Index>(i)] = sorted[i].second;
  }
  obs.validate();
  return obs;
}

json theta_to_json(const OptimizedHyperparameters& theta) {
  return json{
      {"family", theta.spec.family == KernelFamily::Matern ? "matern" : "squared_exponential"},
      {"nu", theta.spec.nu},
      {"signal_variance", theta.spec.signal_variance},
      {"lengthscale", theta.spec.lengthscale},
      {"noise_variance", theta.noise_variance},
      {"log_marginal", theta.log_marginal},
      {"optimizer_converged", theta.converged}};
}

json result_to_report(const TraceResult& result, double runtime_s) {
  json thresholds = json::array();
  json counts = json::array();
  json best_scores = json::array();
  for (const auto& it : result.history) {
    thresholds.push_back(it.threshold);
    counts.push_back(it.observation_count);
    best_scores.push_back(it.best_curve_score);
  }
  return json{{"iterations", result.iterations},
              {"converged", result.converged},
              {"observation_count", result.observations.size()},
              {"threshold_history", thresholds},
              {"observation_counts", counts},
              {"best_curve_scores", best_scores},
              {"theta_hat", theta_to_json(result.theta_hat)},
              {"runtime_s", runtime_s}};
}

void write_report(const std::string& path, const json& report) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << report.dump(2) << "\n";
}

void draw_band_pixel(RgbImage& overlay, int row, int col, bool band) {
  if (band) {
    overlay.set(row, col, 255, 64, 255);  // band boundary: magenta
  } else {
    overlay.set(row, col, 255, 32, 32);  // mean: red
  }
}

RgbImage render_overlay(const Grid& background, const TraceResult& result) {
  RgbImage overlay = RgbImage::from_gray(background);
  for (Eigen::Index c = 0; c < result.mean.size(); ++c) {
    draw_band_pixel(overlay, static_cast<int>(std::lround(result.lower[c])),
                    static_cast<int>(c), true);
    draw_band_pixel(overlay, static_cast<int>(std::lround(result.upper[c])),
                    static_cast<int>(c), true);
    draw_band_pixel(overlay, static_cast<int>(std::lround(result.mean[c])), static_cast<int>(c),
                    false);
  }
  return overlay;
}

RgbImage render_polar_overlay(const Grid& background, const PolarImage& polar,
                              const TraceResult& result) {
  RgbImage overlay = RgbImage::from_gray(background);
  for (const auto* curve : {&result.lower, &result.upper}) {
    for (const auto& [x, y] : trace_from_polar(polar, *curve)) {
      draw_band_pixel(overlay, static_cast<int>(std::lround(y)), static_cast<int>(std::lround(x)),
                      true);
    }
  }
  for (const auto& [x, y] : trace_from_polar(polar, result.mean)) {
    draw_band_pixel(overlay, static_cast<int>(std::lround(y)), static_cast<int>(std::lround(x)),
                    false);
  }
  return overlay;
}

struct PreparedInput {
  GradientField gradient;
  Grid background;           // what the overlay is drawn on
  PolarImage polar;          // populated in polar mode
  bool polar_mode = false;
};

PreparedInput prepare_input(const RunConfig& config) {
  PreparedInput input;
  if (config.synthetic) {
    const SyntheticCase synthetic =
        make_sinusoid_case(config.synth.rows, config.synth.cols, config.synth.amplitude,
                           config.synth.periods, config.synth.noise_level,
                           config.synth.occlusions, derive_seed(config.trace.seed, 0x67656e));
    input.gradient = synthetic.gradient;
    input.background = synthetic.image;
    return input;
  }

  Grid source;
  bool source_is_gradient = false;
  if (!config.gradient_path.empty()) {
    source = load_grayscale(config.gradient_path);
    source_is_gradient = true;
  } else {
    source = load_grayscale(config.image_path);
  }

  if (config.polar) {
    input.polar_mode = true;
    const int radial = static_cast<int>(source.rows());
    const int angular = static_cast<int>(source.cols());
    input.polar = to_polar(source, config.polar_center_x, config.polar_center_y, radial, angular);
    input.background =
        config.image_path.empty() ? source : load_grayscale(config.image_path);
    input.gradient = source_is_gradient ? GradientField::from_grid(input.polar.values)
                                        : gradient_magnitude(input.polar.values);
    return input;
  }

  input.background = source;
  input.gradient =
      source_is_gradient ? GradientField::from_grid(source) : gradient_magnitude(source);
  return input;
}

}  // namespace

std::vector<double> parse_delta_range(const std::string& text) {
  std::vector<double> deltas;
  const auto parse_one = [&](const std::string& token) {
    try {
      return std::stod(token);
    } catch (const std::exception&) {
      throw ConfigError("malformed delta '" + token + "' in range '" + text + "'");
    }
  };
  const auto first_colon = text.find(':');
  if (first_colon != std::string::npos) {
    // lo:hi:count
    const auto second_colon = text.find(':', first_colon + 1);
    if (second_colon == std::string::npos) {
      throw ConfigError("range '" + text + "' must be lo:hi:count or a comma list");
    }
    const double lo = parse_one(text.substr(0, first_colon));
    const double hi = parse_one(text.substr(first_colon + 1, second_colon - first_colon - 1));
    const int count = static_cast<int>(parse_one(text.substr(second_colon + 1)));
    if (count < 1) {
      throw ConfigError("range count must be at least 1");
    }
    for (int i = 0; i < count; ++i) {
      deltas.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }
    return deltas;
  }
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (!token.empty()) deltas.push_back(parse_one(token));
  }
  if (deltas.empty()) {
    throw ConfigError("empty delta range");
  }
  return deltas;
}

void cmd_generate(const SyntheticParams& params, std::uint64_t seed, const std::string& out_dir) {
  ensure_directory(out_dir);
  const SyntheticCase synthetic =
      make_sinusoid_case(params.rows, params.cols, params.amplitude, params.periods,
                         params.noise_level, params.occlusions, seed);
  save_grayscale((fs::path(out_dir) / "image.pgm").string(), synthetic.image);
  save_grayscale((fs::path(out_dir) / "gradient.pgm").string(), synthetic.gradient.values);
  write_truth_csv((fs::path(out_dir) / "truth.csv").string(), synthetic.truth);
  std::cout << "wrote " << out_dir << "/{image.pgm, gradient.pgm, truth.csv}\n";
}

bool cmd_trace(RunConfig config, const Overrides& overrides) {
  if (overrides.seed) config.trace.seed = *overrides.seed;
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.gradient_path) config.gradient_path = *overrides.gradient_path;
  if (overrides.polar_center) {
    config.polar = true;
    config.polar_center_x = overrides.polar_center->first;
    config.polar_center_y = overrides.polar_center->second;
  }
  ensure_directory(config.out_dir);

  // Sequence mode: trace the same edge through consecutive frames.
  if (!overrides.frames.empty()) {
    std::vector<GradientField> gradients;
    Grid first_background;
    for (std::size_t t = 0; t < overrides.frames.size(); ++t) {
      const Grid frame = load_grayscale(overrides.frames[t]);
      if (t == 0) first_background = frame;
      gradients.push_back(gradient_magnitude(frame));
    }
    ObservationSet init = overrides.init_pixels_path
                              ? read_pixels_csv(*overrides.init_pixels_path)
                              : endpoints_to_observations(config.endpoints);
    NoiseModel init_noise = NoiseModel::uniform(init.size(), config.trace.noise_variance);
    if (config.endpoint_noise) {
      init_noise.per_point[0] = *config.endpoint_noise;
      init_noise.per_point[init.size() - 1] = *config.endpoint_noise;
    }
    const int stride = overrides.stride > 0 ? overrides.stride : 4;
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = trace_sequence(config.trace, gradients, init, init_noise, stride);
    const auto t1 = std::chrono::steady_clock::now();

    json frame_reports = json::array();
    bool all_converged = true;
    for (std::size_t t = 0; t < results.size(); ++t) {
      const auto& result = results[t];
      if (result.failed) {
        frame_reports.push_back(json{{"frame", t}, {"failed", true}, {"error", result.error}});
        all_converged = false;
        continue;
      }
      char name[64];
      std::snprintf(name, sizeof(name), "trace_%03zu.csv", t);
      write_trace_csv((fs::path(config.out_dir) / name).string(), result);
      frame_reports.push_back(result_to_report(result, 0.0));
      all_converged = all_converged && result.converged;
    }
    json report{{"mode", "sequence"},
                {"frames", frame_reports},
                {"stride", stride},
                {"runtime_s", std::chrono::duration<double>(t1 - t0).count()}};
    write_report((fs::path(config.out_dir) / "report.json").string(), report);
    std::cout << "traced " << results.size() << " frames -> " << config.out_dir << "\n";
    return all_converged;
  }

  const PreparedInput input = prepare_input(config);

  ObservationSet init;
  if (overrides.init_pixels_path) {
    init = read_pixels_csv(*overrides.init_pixels_path);
  } else if (!config.endpoints.empty()) {
    init = endpoints_to_observations(config.endpoints);
  } else if (config.synthetic) {
    // synthetic cases carry their own ground truth; anchor at the true endpoints
    const SyntheticCase synthetic =
        make_sinusoid_case(config.synth.rows, config.synth.cols, config.synth.amplitude,
                           config.synth.periods, config.synth.noise_level,
                           config.synth.occlusions, derive_seed(config.trace.seed, 0x67656e));
    init.x.resize(2);
    init.y.resize(2);
    init.x << 0, config.synth.cols - 1;
    init.y << std::round(synthetic.truth[0]), std::round(synthetic.truth[config.synth.cols - 1]);
  } else {
    throw ConfigError("no endpoints: set endpoints = x0,y0 x1,y1 or pass --init-pixels");
  }

  NoiseModel init_noise = NoiseModel::uniform(init.size(), config.trace.noise_variance);
  if (config.endpoint_noise) {
    init_noise.per_point[0] = *config.endpoint_noise;
    init_noise.per_point[init.size() - 1] = *config.endpoint_noise;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const TraceResult result = trace(config.trace, input.gradient, init, init_noise);
  const auto t1 = std::chrono::steady_clock::now();
  const double runtime_s = std::chrono::duration<double>(t1 - t0).count();

  write_trace_csv((fs::path(config.out_dir) / "trace.csv").string(), result);
  json report = result_to_report(result, runtime_s);
  report["mode"] = input.polar_mode ? "polar" : "cartesian";
  write_report((fs::path(config.out_dir) / "report.json").string(), report);

  const RgbImage overlay = input.polar_mode
                               ? render_polar_overlay(input.background, input.polar, result)
                               : render_overlay(input.background, result);
  save_rgb_png((fs::path(config.out_dir) / "overlay.png").string(), overlay);

  std::cout << (result.converged ? "converged" : "NOT converged") << " in " << result.iterations
            << " iterations (" << result.observations.size() << " observations, "
            << runtime_s << " s) -> " << config.out_dir << "\n";
  return result.converged;
}

void cmd_evaluate(const std::string& case_dir, const std::optional<std::string>& config_path,
                  const Overrides& overrides) {
  const fs::path dir(case_dir);
  if (!fs::exists(dir / "gradient.pgm") || !fs::exists(dir / "truth.csv")) {
    throw IoError("case directory " + case_dir + " is missing gradient.pgm or truth.csv");
  }

  const GradientField gradient =
      GradientField::from_grid(load_grayscale((dir / "gradient.pgm").string()));
  const ObservationSet truth_pixels = read_pixels_csv((dir / "truth.csv").string());
  const int rows = gradient.rows();
  const int cols = gradient.cols();
  if (truth_pixels.size() != cols) {
    throw ConfigError("truth.csv does not cover every image column");
  }

  RunConfig config;
  if (config_path) {
    config = parse_run_config(*config_path);
  } else {
    config.trace.kernel = KernelSpec::matern(2.5, 5625.0, 20.0);
  }
  if (overrides.seed) config.trace.seed = *overrides.seed;
  const std::string out_dir = overrides.out_dir.value_or(case_dir);
  ensure_directory(out_dir);

  ObservationSet endpoints;
  endpoints.x.resize(2);
  endpoints.y.resize(2);
  endpoints.x << 0, cols - 1;
  endpoints.y << std::round(truth_pixels.y[0]), std::round(truth_pixels.y[cols - 1]);

  const RegionMask truth_mask = rasterize(truth_pixels.y, rows, cols, RegionSide::Below);

  const auto t0 = std::chrono::steady_clock::now();
  const TraceResult proposed = trace(config.trace, gradient, endpoints);
  const auto t1 = std::chrono::steady_clock::now();
  const double proposed_jaccard =
      jaccard(rasterize(proposed.mean, rows, cols, RegionSide::Below), truth_mask);

  const auto t2 = std::chrono::steady_clock::now();
  const PixelPath path = dijkstra_trace(
      gradient, {0, static_cast<int>(endpoints.y[0])}, {cols - 1, static_cast<int>(endpoints.y[1])});
  const auto t3 = std::chrono::steady_clock::now();
  const double dijkstra_jaccard =
      jaccard(rasterize(path_to_trace(path, cols), rows, cols, RegionSide::Below), truth_mask);

  const std::vector<ComparisonRow> table{
      {"proposed", proposed_jaccard, std::chrono::duration<double>(t1 - t0).count()},
      {"dijkstra", dijkstra_jaccard, std::chrono::duration<double>(t3 - t2).count()}};
  write_comparison_csv((fs::path(out_dir) / "comparison.csv").string(), table);

  std::cout << "method    J (%)    time (s)\n";
  for (const auto& row : table) {
    std::printf("%-9s %6.2f %10.3f\n", row.method.c_str(), 100.0 * row.jaccard, row.time_s);
  }
}

void cmd_sweep(RunConfig config, const std::string& parameter,
               const std::vector<double>& relative_deltas, int seed_count,
               const Overrides& overrides) {
  if (!config.synthetic) {
    throw ConfigError("sweep requires a synthetic case (set synthetic = true)");
  }
  if (!is_sweep_parameter(parameter)) {
    throw ConfigError("unknown sweep parameter '" + parameter + "'");
  }
  if (overrides.seed) config.trace.seed = *overrides.seed;
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  ensure_directory(config.out_dir);

  const SyntheticCase synthetic =
      make_sinusoid_case(config.synth.rows, config.synth.cols, config.synth.amplitude,
                         config.synth.periods, config.synth.noise_level, config.synth.occlusions,
                         derive_seed(config.trace.seed, 0x67656e));
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < std::max(seed_count, 1); ++i) {
    seeds.push_back(derive_seed(config.trace.seed, 0x737764 + i));
  }

  const auto rows = sensitivity_sweep(config.trace, synthetic, parameter, relative_deltas, seeds);
  write_sweep_csv((fs::path(config.out_dir) / "sweep.csv").string(), rows);

  for (const auto& row : rows) {
    if (row.skipped) {
      std::cout << parameter << " delta " << row.delta << ": skipped (" << row.note << ")\n";
    }
  }
  std::cout << "wrote " << config.out_dir << "/sweep.csv (" << rows.size() << " rows)\n";
}

}  // namespace gpedge::cli
