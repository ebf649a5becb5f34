#include "gpedge/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <png.h>

#include "gpedge/errors.hpp"
#include "gpedge/rng.hpp"

namespace gpedge {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Skips PGM whitespace and '#' comment lines.
int next_pgm_token(std::istream& in, std::string& token) {
  token.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  return token.empty() ? EOF : 0;
}

int parse_pgm_int(std::istream& in, const std::string& path) {
  std::string token;
  if (next_pgm_token(in, token) == EOF) {
    throw IoError("truncated PGM header in " + path);
  }
  try {
    return std::stoi(token);
  } catch (const std::exception&) {
    throw IoError("malformed PGM header in " + path);
  }
}

Grid load_pgm(std::ifstream& in, const std::string& path, bool binary) {
  const int cols = parse_pgm_int(in, path);
  const int rows = parse_pgm_int(in, path);
  const int maxval = parse_pgm_int(in, path);
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 255) {
    throw IoError("unsupported PGM dimensions or depth in " + path);
  }
  Grid image(rows, cols);
  if (binary) {
    std::vector<std::uint8_t> buffer(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size())) {
      throw IoError("truncated PGM pixel data in " + path);
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        image(r, c) = buffer[static_cast<std::size_t>(r) * cols + c] / static_cast<double>(maxval);
      }
    }
  } else {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        image(r, c) = parse_pgm_int(in, path) / static_cast<double>(maxval);
      }
    }
  }
  return image;
}

Grid load_png_gray(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG " + path + ": " + png.message);
  }
  png.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path + ": " + message);
  }
  Grid image(png.height, png.width);
  for (png_uint_32 r = 0; r < png.height; ++r) {
    for (png_uint_32 c = 0; c < png.width; ++c) {
      image(r, c) = buffer[static_cast<std::size_t>(r) * png.width + c] / 255.0;
    }
  }
  return image;
}

void save_pgm(const std::string& path, const Grid& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(image.size()));
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      buffer[static_cast<std::size_t>(r) * image.cols() + c] = to_byte(image(r, c));
    }
  }
  out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (!out) {
    throw IoError("failed writing " + path);
  }
}

void save_png_gray(const std::string& path, const Grid& image) {
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(image.size()));
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      buffer[static_cast<std::size_t>(r) * image.cols() + c] = to_byte(image(r, c));
    }
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.cols());
  png.height = static_cast<png_uint_32>(image.rows());
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path + ": " + png.message);
  }
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Grid load_grayscale(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2) {
    throw IoError("file too short: " + path);
  }
  if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) {
    return load_pgm(in, path, magic[1] == '5');
  }
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
    in.close();
    return load_png_gray(path);
  }
  throw IoError("unsupported image format in " + path + " (expected PGM P2/P5 or PNG)");
}

void save_grayscale(const std::string& path, const Grid& image) {
  if (has_suffix(path, ".png")) {
    save_png_gray(path, image);
  } else if (has_suffix(path, ".pgm")) {
    save_pgm(path, image);
  } else {
    throw IoError("unsupported output extension for " + path + " (use .pgm or .png)");
  }
}

RgbImage RgbImage::from_gray(const Grid& image) {
  RgbImage rgb(static_cast<int>(image.rows()), static_cast<int>(image.cols()));
  for (int r = 0; r < rgb.rows; ++r) {
    for (int c = 0; c < rgb.cols; ++c) {
      const std::uint8_t v = to_byte(image(r, c));
      rgb.set(r, c, v, v, v);
    }
  }
  return rgb;
}

void RgbImage::set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (row < 0 || row >= rows || col < 0 || col >= cols) return;
  const std::size_t i = (static_cast<std::size_t>(row) * cols + col) * 3;
  data[i] = r;
  data[i + 1] = g;
  data[i + 2] = b;
}

void save_rgb_png(const std::string& path, const RgbImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.cols);
  png.height = static_cast<png_uint_32>(image.rows);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path + ": " + png.message);
  }
}

GradientField GradientField::from_grid(Grid g) {
  const double lo = g.size() > 0 ? g.minCoeff() : 0.0;
  if (lo < 0.0) {
    throw ConfigError("gradient values must be non-negative");
  }
  const double peak = g.size() > 0 ? g.maxCoeff() : 0.0;
  if (peak > 0.0) {
    g /= peak;
  }
  return GradientField{std::move(g)};
}

GradientField gradient_magnitude(const Grid& image) {
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  if (rows == 0 || cols == 0) {
    throw ConfigError("gradient of an empty image");
  }
  auto at = [&](int r, int c) {
    return image(std::clamp(r, 0, rows - 1), std::clamp(c, 0, cols - 1));
  };

  Grid magnitude(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double gx = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
      magnitude(r, c) = std::hypot(gx, gy);
    }
  }

  // separable Gaussian, sigma = 1 px, radius 3
  constexpr int radius = 3;
  double weights[2 * radius + 1];
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    weights[i + radius] = std::exp(-0.5 * i * i);
    total += weights[i + radius];
  }
  for (double& w : weights) w /= total;

  Grid tmp(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += weights[i + radius] * magnitude(r, std::clamp(c + i, 0, cols - 1));
      }
      tmp(r, c) = acc;
    }
  }
  Grid smoothed(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += weights[i + radius] * tmp(std::clamp(r + i, 0, rows - 1), c);
      }
      smoothed(r, c) = acc;
    }
  }
  return GradientField::from_grid(std::move(smoothed));
}

double bilinear(const Grid& g, double x, double y) {
  const int rows = static_cast<int>(g.rows());
  const int cols = static_cast<int>(g.cols());
  if (rows == 0 || cols == 0) return 0.0;
  if (x < 0.0 || y < 0.0 || x > cols - 1.0 || y > rows - 1.0) return 0.0;

  const int x0 = cols == 1 ? 0 : std::min(static_cast<int>(std::floor(x)), cols - 2);
  const int y0 = rows == 1 ? 0 : std::min(static_cast<int>(std::floor(y)), rows - 2);
  const int x1 = cols == 1 ? 0 : x0 + 1;
  const int y1 = rows == 1 ? 0 : y0 + 1;
  const double fx = x - x0;
  const double fy = y - y0;
  return (1 - fy) * ((1 - fx) * g(y0, x0) + fx * g(y0, x1)) +
         fy * ((1 - fx) * g(y1, x0) + fx * g(y1, x1));
}

double bilinear(const GradientField& g, double x, double y) { return bilinear(g.values, x, y); }

PolarImage to_polar(const Grid& image, double center_x, double center_y, int radial_samples,
                    int angular_samples) {
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  if (center_x < 0 || center_x > cols - 1 || center_y < 0 || center_y > rows - 1) {
    throw ConfigError("polar center lies outside the image");
  }
  if (radial_samples < 2 || angular_samples < 2) {
    throw ConfigError("polar transform needs at least 2 samples per axis");
  }
  // reach the farthest corner so the whole image is covered
  double r_max = 0.0;
  for (const double cx : {0.0, cols - 1.0}) {
    for (const double cy : {0.0, rows - 1.0}) {
      r_max = std::max(r_max, std::hypot(cx - center_x, cy - center_y));
    }
  }
  PolarImage polar;
  polar.center_x = center_x;
  polar.center_y = center_y;
  polar.radial_step = r_max / (radial_samples - 1);
  polar.values.resize(radial_samples, angular_samples);
  for (int a = 0; a < angular_samples; ++a) {
    const double theta = 2.0 * M_PI * a / angular_samples;
    const double dx = std::cos(theta);
    const double dy = std::sin(theta);
    for (int ri = 0; ri < radial_samples; ++ri) {
      const double r = ri * polar.radial_step;
      polar.values(ri, a) = bilinear(image, center_x + r * dx, center_y + r * dy);
    }
  }
  return polar;
}

std::vector<std::pair<double, double>> trace_from_polar(const PolarImage& polar,
                                                        const Eigen::VectorXd& radius_rows) {
  const int angular_samples = static_cast<int>(polar.values.cols());
  if (radius_rows.size() != angular_samples) {
    throw ConfigError("polar trace length does not match the angular sample count");
  }
  std::vector<std::pair<double, double>> curve(angular_samples);
  for (int a = 0; a < angular_samples; ++a) {
    const double theta = 2.0 * M_PI * a / angular_samples;
    const double r = radius_rows[a] * polar.radial_step;
    curve[a] = {polar.center_x + r * std::cos(theta), polar.center_y + r * std::sin(theta)};
  }
  return curve;
}

SyntheticCase make_sinusoid_case(int rows, int cols, double amplitude, double periods,
                                 double noise_level, const std::vector<OcclusionSpan>& occlusions,
                                 std::uint64_t seed) {
  if (rows < 8 || cols < 8) {
    throw ConfigError("synthetic case must be at least 8x8");
  }
  const double mid = rows / 2.0;
  if (amplitude < 0 || mid - amplitude < 1.0 || mid + amplitude > rows - 2.0) {
    throw ConfigError("sinusoid amplitude does not fit inside the image height");
  }

  SyntheticCase result;
  result.truth.resize(cols);
  for (int c = 0; c < cols; ++c) {
    result.truth[c] = mid + amplitude * std::sin(2.0 * M_PI * periods * c / cols);
  }

  constexpr double hi = 0.85;  // intensity above the edge
  constexpr double lo = 0.15;
  result.image.resize(rows, cols);
  for (int c = 0; c < cols; ++c) {
    const double t = result.truth[c];
    for (int r = 0; r < rows; ++r) {
      const double above = std::clamp(t - r + 0.5, 0.0, 1.0);  // sub-pixel coverage
      result.image(r, c) = lo + (hi - lo) * above;
    }
  }
  if (noise_level > 0.0) {
    auto engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, noise_level);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) {
        result.image(r, c) = std::clamp(result.image(r, c) + normal(engine), 0.0, 1.0);
      }
    }
  }

  result.gradient = gradient_magnitude(result.image);
  for (const auto& span : occlusions) {
    const int begin = std::clamp(span.begin, 0, cols - 1);
    const int end = std::clamp(span.end, 0, cols - 1);
    if (end < begin) {
      throw ConfigError("occlusion span end precedes begin");
    }
    result.gradient.values.middleCols(begin, end - begin + 1).setZero();
  }
  result.occlusions = occlusions;
  return result;
}

SyntheticCase default_sinusoid_case(std::uint64_t seed) {
  return make_sinusoid_case(500, 720, 75.0, 4.0, 0.05, {{385, 430}, {650, 700}}, seed);
}

}  // namespace gpedge
