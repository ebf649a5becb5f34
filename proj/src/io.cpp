#include "gpedge/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gpedge/errors.hpp"

namespace gpedge {

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  return out;
}

std::string format_double(double v, int precision = 6) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", precision, v);
  return buffer;
}

}  // namespace

void write_trace_csv(const std::string& path, const TraceResult& result) {
  auto out = open_output(path);
  out << "column,mean,lower,upper\n";
  for (Eigen::Index c = 0; c < result.mean.size(); ++c) {
    out << c << "," << format_double(result.mean[c]) << "," << format_double(result.lower[c])
        << "," << format_double(result.upper[c]) << "\n";
  }
  if (!out) {
    throw IoError("failed writing " + path);
  }
}

void write_truth_csv(const std::string& path, const Eigen::VectorXd& truth) {
  auto out = open_output(path);
  out << "column,row\n";
  for (Eigen::Index c = 0; c < truth.size(); ++c) {
    out << c << "," << format_double(truth[c]) << "\n";
  }
  if (!out) {
    throw IoError("failed writing " + path);
  }
}

ObservationSet read_pixels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::vector<double> xs, ys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!line.empty() && !std::isdigit(static_cast<unsigned char>(line[0])) && line[0] != '-') {
      continue;  // header
    }
    std::istringstream row(line);
    double x, y;
    char comma;
    if (!(row >> x >> comma >> y) || comma != ',') {
      throw IoError("malformed pixel row in " + path + ": " + line);
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.empty()) {
    throw IoError("no pixels found in " + path);
  }
  ObservationSet obs;
  obs.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  obs.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  obs.validate();
  return obs;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  auto out = open_output(path);
  out << "parameter,delta,seed,jaccard,runtime_s\n";
  for (const auto& row : rows) {
    out << row.parameter << "," << format_double(row.delta, 4) << "," << row.seed << ","
        << (row.skipped ? "nan" : format_double(row.jaccard)) << ","
        << format_double(row.runtime_s, 3) << "\n";
  }
  if (!out) {
    throw IoError("failed writing " + path);
  }
}

void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows) {
  auto out = open_output(path);
  out << "method,jaccard,time_s\n";
  for (const auto& row : rows) {
    out << row.method << "," << format_double(row.jaccard) << "," << format_double(row.time_s, 3)
        << "\n";
  }
  if (!out) {
    throw IoError("failed writing " + path);
  }
}

}  // namespace gpedge
