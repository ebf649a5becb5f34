#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gpedge/image.hpp"
#include "gpedge/tracer.hpp"

namespace gpedge {

struct RegionMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;

  RegionMask() = default;
  RegionMask(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}
  bool at(int row, int col) const { return data[static_cast<std::size_t>(row) * cols + col] != 0; }
  void set(int row, int col, bool value) {
    data[static_cast<std::size_t>(row) * cols + col] = value ? 1 : 0;
  }
  std::int64_t count() const;
};

enum class RegionSide { Below, Above };

// Region mask of the image area below (r >= trace) or above (r <= trace) a
// per-column trace; trace values are clamped to [0, rows-1].
RegionMask rasterize(const Eigen::VectorXd& trace, int rows, int cols, RegionSide side);

// Intersection over union; 1 when both masks are empty.
double jaccard(const RegionMask& a, const RegionMask& b);

// Pixels enclosed by a closed polar trace (radius per angle) about a center;
// used for closed-curve Jaccard scoring.
RegionMask enclosed_mask(const PolarImage& polar, const Eigen::VectorXd& radius_rows, int rows,
                         int cols);

struct PixelPath {
  std::vector<std::pair<int, int>> pixels;  // (x = column, y = row), start to end
  double cost = 0;
};

// Minimum-cost 8-connected path with per-pixel cost (1 - G + delta); the
// start pixel's cost is not counted.
PixelPath dijkstra_trace(const GradientField& gradient, std::pair<int, int> start,
                         std::pair<int, int> end, double delta = 1e-3);

// Reduces a pixel path to one row per column (first visit wins); columns the
// path never reaches take the nearest visited column's row.
Eigen::VectorXd path_to_trace(const PixelPath& path, int cols);

struct SweepRow {
  std::string parameter;
  double delta = 0;      // relative perturbation; value = base * (1 + delta)
  std::uint64_t seed = 0;
  double jaccard = 0;
  double runtime_s = 0;
  bool skipped = false;
  std::string note;
};

// Names accepted by sensitivity_sweep: threshold, curves, keep_ratio,
// bin_width, noise_variance, signal_variance, lengthscale,
// density_lengthscale.
bool is_sweep_parameter(const std::string& name);

// Re-runs the trace on the synthetic case once per (delta, seed) with the
// named parameter perturbed to base * (1 + delta); invalid perturbations are
// skipped with a note.
std::vector<SweepRow> sensitivity_sweep(const TraceConfig& base, const SyntheticCase& test_case,
                                        const std::string& parameter,
                                        const std::vector<double>& relative_deltas,
                                        const std::vector<std::uint64_t>& seeds);

}  // namespace gpedge
