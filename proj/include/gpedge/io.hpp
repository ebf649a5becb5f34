#pragma once

#include <string>

#include "gpedge/eval.hpp"
#include "gpedge/tracer.hpp"

namespace gpedge {

// trace CSV: header "column,mean,lower,upper", one row per column.
void write_trace_csv(const std::string& path, const TraceResult& result);

// truth / pixel-list CSV: header "column,row".
void write_truth_csv(const std::string& path, const Eigen::VectorXd& truth);
ObservationSet read_pixels_csv(const std::string& path);

// sweep CSV: header "parameter,delta,seed,jaccard,runtime_s" (skipped rows
// carry nan).
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

struct ComparisonRow {
  std::string method;
  double jaccard = 0;
  double time_s = 0;
};

// comparison CSV mirroring the (J %, Time s) layout: "method,jaccard,time_s".
void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows);

}  // namespace gpedge
