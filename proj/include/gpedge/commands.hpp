#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpedge/run_config.hpp"

namespace gpedge::cli {

// Optional command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> gradient_path;
  std::optional<std::string> init_pixels_path;
  std::optional<std::pair<double, double>> polar_center;
  std::vector<std::string> frames;  // sequence mode
  int stride = 0;                   // 0 = single-frame mode
};

// generate: writes image.pgm, gradient.pgm and truth.csv into out_dir.
void cmd_generate(const SyntheticParams& params, std::uint64_t seed, const std::string& out_dir);

// trace: runs the tracer (polar-wrapped when configured) and writes
// trace.csv, report.json and overlay.png into the output directory.
// Returns false when the trace did not converge (the report is flagged).
bool cmd_trace(RunConfig config, const Overrides& overrides);

// evaluate: traces a generated case directory with the proposed method and
// the Dijkstra baseline, writing comparison.csv and printing the table.
void cmd_evaluate(const std::string& case_dir, const std::optional<std::string>& config_path,
                  const Overrides& overrides);

// sweep: sensitivity analysis over one parameter; writes sweep.csv.
void cmd_sweep(RunConfig config, const std::string& parameter,
               const std::vector<double>& relative_deltas, int seed_count,
               const Overrides& overrides);

std::vector<double> parse_delta_range(const std::string& text);

}  // namespace gpedge::cli
