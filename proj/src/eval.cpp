#include "gpedge/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "gpedge/errors.hpp"

namespace gpedge {

std::int64_t RegionMask::count() const {
  std::int64_t total = 0;
  for (const auto v : data) total += v != 0;
  return total;
}

RegionMask rasterize(const Eigen::VectorXd& trace, int rows, int cols, RegionSide side) {
  if (trace.size() != cols) {
    throw ConfigError("trace length does not match the mask width");
  }
  RegionMask mask(rows, cols);
  for (int c = 0; c < cols; ++c) {
    if (!std::isfinite(trace[c])) {
      throw ConfigError("trace contains non-finite values");
    }
    const double t = std::clamp(trace[c], 0.0, rows - 1.0);
    for (int r = 0; r < rows; ++r) {
      const bool inside = side == RegionSide::Below ? r >= t : r <= t;
      mask.set(r, c, inside);
    }
  }
  return mask;
}

double jaccard(const RegionMask& a, const RegionMask& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ConfigError("mask shapes differ");
  }
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool va = a.data[i] != 0;
    const bool vb = b.data[i] != 0;
    inter += va && vb;
    uni += va || vb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

RegionMask enclosed_mask(const PolarImage& polar, const Eigen::VectorXd& radius_rows, int rows,
                         int cols) {
  const int angular_samples = static_cast<int>(polar.values.cols());
  if (radius_rows.size() != angular_samples) {
    throw ConfigError("polar trace length does not match the angular sample count");
  }
  RegionMask mask(rows, cols);
  const double two_pi = 2.0 * M_PI;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double dx = c - polar.center_x;
      const double dy = r - polar.center_y;
      double theta = std::atan2(dy, dx);
      if (theta < 0) theta += two_pi;
      const double a = theta / two_pi * angular_samples;
      const int a0 = static_cast<int>(std::floor(a)) % angular_samples;
      const int a1 = (a0 + 1) % angular_samples;
      const double fa = a - std::floor(a);
      const double boundary =
          ((1 - fa) * radius_rows[a0] + fa * radius_rows[a1]) * polar.radial_step;
      mask.set(r, c, std::hypot(dx, dy) <= boundary);
    }
  }
  return mask;
}

PixelPath dijkstra_trace(const GradientField& gradient, std::pair<int, int> start,
                         std::pair<int, int> end, double delta) {
  const int rows = gradient.rows();
  const int cols = gradient.cols();
  auto in_bounds = [&](int x, int y) { return x >= 0 && x < cols && y >= 0 && y < rows; };
  if (!in_bounds(start.first, start.second) || !in_bounds(end.first, end.second)) {
    throw ConfigError("dijkstra endpoints lie outside the image");
  }

  const auto index = [&](int x, int y) { return y * cols + x; };
  std::vector<double> dist(static_cast<std::size_t>(rows) * cols,
                           std::numeric_limits<double>::infinity());
  std::vector<int> parent(dist.size(), -1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;

  const int source = index(start.first, start.second);
  const int target = index(end.first, end.second);
  dist[source] = 0.0;  // the start pixel's own cost is not counted
  queue.push({0.0, source});

  const int dx8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const int dy8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  while (!queue.empty()) {
    const auto [d, node] = queue.top();
    queue.pop();
    if (d > dist[node]) continue;
    if (node == target) break;
    const int x = node % cols;
    const int y = node / cols;
    for (int k = 0; k < 8; ++k) {
      const int nx = x + dx8[k];
      const int ny = y + dy8[k];
      if (!in_bounds(nx, ny)) continue;
      const int neighbour = index(nx, ny);
      const double step = 1.0 - gradient.values(ny, nx) + delta;
      if (dist[node] + step < dist[neighbour]) {
        dist[neighbour] = dist[node] + step;
        parent[neighbour] = node;
        queue.push({dist[neighbour], neighbour});
      }
    }
  }

  PixelPath path;
  path.cost = dist[target];
  for (int node = target; node != -1; node = parent[node]) {
    path.pixels.emplace_back(node % cols, node / cols);
    if (node == source) break;
  }
  std::reverse(path.pixels.begin(), path.pixels.end());
  return path;
}

Eigen::VectorXd path_to_trace(const PixelPath& path, int cols) {
  Eigen::VectorXd trace = Eigen::VectorXd::Constant(cols, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [x, y] : path.pixels) {
    if (x >= 0 && x < cols && std::isnan(trace[x])) {
      trace[x] = y;  // first visit wins
    }
  }
  // fill never-visited columns from the nearest visited neighbour
  int last = -1;
  for (int c = 0; c < cols; ++c) {
    if (!std::isnan(trace[c])) {
      if (last == -1) {
        for (int back = 0; back < c; ++back) trace[back] = trace[c];
      }
      last = c;
    } else if (last != -1) {
      trace[c] = trace[last];
    }
  }
  if (last == -1) {
    throw ConfigError("path visits no columns");
  }
  return trace;
}

bool is_sweep_parameter(const std::string& name) {
  return name == "threshold" || name == "curves" || name == "keep_ratio" || name == "bin_width" ||
         name == "noise_variance" || name == "signal_variance" || name == "lengthscale" ||
         name == "density_lengthscale";
}

namespace {

// Applies base * (1 + delta) to the named parameter; returns a note when the
// perturbed value is invalid and the run must be skipped.
std::string perturb(TraceConfig& config, const std::string& parameter, double delta) {
  const double factor = 1.0 + delta;
  if (parameter == "threshold") {
    const double v = config.threshold * factor;
    if (v < 0.0 || v > 1.0) return "threshold outside [0, 1]";
    config.threshold = v;
  } else if (parameter == "curves") {
    const int v = static_cast<int>(std::lround(config.curves * factor));
    if (v < 1) return "curves below 1";
    config.curves = v;
  } else if (parameter == "keep_ratio") {
    const double v = config.keep_ratio * factor;
    if (v <= 0.0 || v > 1.0) return "keep_ratio outside (0, 1]";
    if (std::floor(v * config.curves + 1e-9) < 1) return "keep_ratio * curves below 1";
    config.keep_ratio = v;
  } else if (parameter == "bin_width") {
    const double v = config.bin_width * factor;
    if (v < 1.0) return "bin_width below 1 pixel";
    config.bin_width = v;
  } else if (parameter == "noise_variance") {
    const double v = config.noise_variance * factor;
    if (v < 0.0) return "negative noise_variance";
    config.noise_variance = v;
  } else if (parameter == "signal_variance") {
    const double v = config.kernel.signal_variance * factor;
    if (v <= 0.0) return "non-positive signal_variance";
    config.kernel.signal_variance = v;
  } else if (parameter == "lengthscale") {
    const double v = config.kernel.lengthscale * factor;
    if (v <= 0.0) return "non-positive lengthscale";
    config.kernel.lengthscale = v;
  } else if (parameter == "density_lengthscale") {
    const double v = config.density_lengthscale * factor;
    if (v <= 0.0) return "non-positive density_lengthscale";
    config.density_lengthscale = v;
  } else {
    throw ConfigError("unknown sweep parameter: " + parameter);
  }
  return {};
}

}  // namespace

std::vector<SweepRow> sensitivity_sweep(const TraceConfig& base, const SyntheticCase& test_case,
                                        const std::string& parameter,
                                        const std::vector<double>& relative_deltas,
                                        const std::vector<std::uint64_t>& seeds) {
  if (!is_sweep_parameter(parameter)) {
    throw ConfigError("unknown sweep parameter: " + parameter);
  }
  const int rows = test_case.gradient.rows();
  const int cols = test_case.gradient.cols();
  const RegionMask truth_mask = rasterize(test_case.truth, rows, cols, RegionSide::Below);

  ObservationSet endpoints;
  endpoints.x.resize(2);
  endpoints.y.resize(2);
  endpoints.x << 0, cols - 1;
  endpoints.y << std::round(test_case.truth[0]), std::round(test_case.truth[cols - 1]);

  std::vector<SweepRow> table;
  for (const double delta : relative_deltas) {
    for (const std::uint64_t seed : seeds) {
      SweepRow row;
      row.parameter = parameter;
      row.delta = delta;
      row.seed = seed;

      TraceConfig config = base;
      config.seed = seed;
      row.note = perturb(config, parameter, delta);
      if (!row.note.empty()) {
        row.skipped = true;
        row.jaccard = std::numeric_limits<double>::quiet_NaN();
        table.push_back(row);
        continue;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const TraceResult result = trace(config, test_case.gradient, endpoints);
      const auto t1 = std::chrono::steady_clock::now();
      row.runtime_s = std::chrono::duration<double>(t1 - t0).count();
      row.jaccard = jaccard(rasterize(result.mean, rows, cols, RegionSide::Below), truth_mask);
      table.push_back(row);
    }
  }
  return table;
}

}  // namespace gpedge
