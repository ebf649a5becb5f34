#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gpedge {

// Grayscale raster indexed (row, col), intensities in [0, 1].
using Grid = Eigen::MatrixXd;

// Reads an 8-bit grayscale PGM (P2/P5) or PNG; format detected from content.
Grid load_grayscale(const std::string& path);

// Writes 8-bit grayscale; format chosen from the extension (.pgm or .png).
void save_grayscale(const std::string& path, const Grid& image);

struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;  // rows * cols * 3, row-major

  RgbImage() = default;
  RgbImage(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c * 3, 0) {}
  static RgbImage from_gray(const Grid& image);
  void set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

void save_rgb_png(const std::string& path, const RgbImage& image);

// Normalised gradient responses on the pixel grid: values in [0, 1] with
// max = 1 unless the field is identically zero.
struct GradientField {
  Grid values;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  static GradientField from_grid(Grid g);  // rescales so the maximum is 1
};

// Default edge map when the user supplies none: Sobel magnitude smoothed with
// a sigma = 1 px Gaussian, rescaled to max 1.
GradientField gradient_magnitude(const Grid& image);

// Bilinear interpolation at real-valued (x = column, y = row); coordinates
// outside [0, cols-1] x [0, rows-1] return 0.
double bilinear(const Grid& g, double x, double y);
double bilinear(const GradientField& g, double x, double y);

// Resampling of an image about a center so closed edges become injective:
// rows index radius, columns index angle (so a circle maps to a horizontal
// ridge a tracer can follow).
struct PolarImage {
  Grid values;         // radial_samples x angular_samples
  double center_x = 0;
  double center_y = 0;
  double radial_step = 1;  // pixels per radius row
};

PolarImage to_polar(const Grid& image, double center_x, double center_y, int radial_samples,
                    int angular_samples);

// Maps a radius-per-angle trace (in polar row units) back to a closed
// Cartesian curve, one (x, y) point per angle column.
std::vector<std::pair<double, double>> trace_from_polar(const PolarImage& polar,
                                                        const Eigen::VectorXd& radius_rows);

// Inclusive column span [begin, end] where the gradient is erased.
struct OcclusionSpan {
  int begin = 0;
  int end = 0;
};

struct SyntheticCase {
  Grid image;
  GradientField gradient;
  Eigen::VectorXd truth;  // edge row per column; injective along the width
  std::vector<OcclusionSpan> occlusions;
};

// Noisy, occluded sinusoid test case. Ground truth
//   y(x) = rows/2 + amplitude * sin(2 pi periods x / cols)
// drawn as an intensity step, i.i.d. Gaussian pixel noise with standard
// deviation noise_level, gradient zeroed over the occlusion spans.
SyntheticCase make_sinusoid_case(int rows, int cols, double amplitude, double periods,
                                 double noise_level, const std::vector<OcclusionSpan>& occlusions,
                                 std::uint64_t seed);

// The shipped test case: 500 x 720, amplitude 75, four periods, mild noise,
// two occlusions degrading the last two periods.
SyntheticCase default_sinusoid_case(std::uint64_t seed);

}  // namespace gpedge
