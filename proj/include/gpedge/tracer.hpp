#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpedge/gp.hpp"
#include "gpedge/image.hpp"

namespace gpedge {

struct TraceConfig {
  KernelSpec kernel;
  double noise_variance = 1.0;       // sigma_y^2 applied to accepted pixels
  int curves = 500;                  // L, posterior curves per iteration
  double keep_ratio = 0.1;           // epsilon in (0, 1]
  double threshold = 0.5;            // initial score threshold T in [0, 1]
  double bin_width = 5.0;            // sub-interval length, pixels >= 1
  double density_lengthscale = 1.0;  // lengthscale of the frequency density kernel
  double threshold_reduction = 0.9;  // multiplier applied when |D| stalls
  double threshold_floor = 0.01;
  int max_iterations = 50;
  std::uint64_t seed = 0;

  void validate(int cols) const;
  int bin_count(int cols) const;  // ceil(cols / bin_width)
};

// Weighted frequency density of where the optimal posterior curves pass.
struct FrequencyDensity {
  Grid grid;            // rescaled so max = 1 (unless identically 0)
  double raw_max = 0;   // normalisation record: peak before rescale
  double raw_mass = 0;  // total deposited point weight (1 up to round-off)
};

struct IterationStats {
  int observation_count = 0;
  double threshold = 0;
  double best_curve_score = 0;
  bool refit = false;  // false when the threshold hit its floor without growth
};

struct TraceResult {
  Eigen::VectorXd mean;   // edge height per column
  Eigen::VectorXd lower;  // 95% band
  Eigen::VectorXd upper;
  ObservationSet observations;
  NoiseModel observation_noise;
  OptimizedHyperparameters theta_hat;
  int iterations = 0;
  bool converged = false;
  bool failed = false;        // used by sequence tracing
  std::string error;
  std::vector<IterationStats> history;
};

// Gradient score of one posterior curve: Simpson-rule estimate of the line
// integral of G along the curve divided by its finite-difference arc length.
// Curves are parameterised by column, ds = sqrt(1 + (dy/dx)^2) dx; samples
// outside the image contribute 0.
double score_curve(const Eigen::VectorXd& curve, const GradientField& gradient);

// Scores every curve of the batch in place.
void score_batch(PosteriorBatch& batch, const GradientField& gradient);

// Indices of the floor(keep_ratio * L) highest-scoring curves, sorted by
// descending score with ties broken by curve index. Throws LostEdgeError when
// every curve scores zero.
std::vector<int> select_optimal(const PosteriorBatch& batch, double keep_ratio);

// Deposits an isotropic 2D Gaussian (truncated at radius 4 * lengthscale) at
// every point of every curve, weighted per curve by its share of the total
// score; the grid is then rescaled to max 1.
FrequencyDensity build_density(const Eigen::MatrixXd& curves, const Eigen::VectorXd& scores,
                               int rows, int cols, double lengthscale);

// Pixel scores s = (phi * G + phi + G) / 3, elementwise in [0, 1].
Grid score_pixels(const FrequencyDensity& density, const GradientField& gradient);

// Observation set carried through the iteration loop: pixel coordinates with
// their per-point noise, kept sorted by column.
struct TraceObservations {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> noise;

  int size() const { return static_cast<int>(x.size()); }
  ObservationSet as_observation_set() const;
  NoiseModel as_noise_model() const;
};

// One accept-discard pass: thresholds the score grid, takes the argmax pixel
// per column sub-interval, pools with the re-scored previous observations and
// suppresses to one observation per sub-interval. The first and last previous
// observations (the boundary anchors) are exempt from the threshold so the
// edge endpoints always retain an observation. Ties break by lower column,
// then higher gradient response.
TraceObservations accept_discard(const Grid& scores, double threshold, double bin_width,
                                 const TraceObservations& previous,
                                 const GradientField& gradient, double new_point_noise);

// The full iterative trace: sample L curves, select the optimal proportion,
// build the frequency density, score pixels, accept-discard, refit, until
// every sub-interval holds an observation; then optimise hyperparameters and
// emit the optimised posterior mean with its 95% credible band.
TraceResult trace(const TraceConfig& config, const GradientField& gradient,
                  const ObservationSet& init, const NoiseModel& init_noise);

// Convenience overload: every init point gets config.noise_variance.
TraceResult trace(const TraceConfig& config, const GradientField& gradient,
                  const ObservationSet& init);

// Traces the same edge through consecutive frames, seeding each frame with
// every stride-th observation of the previous successful result (endpoints
// always included). A failed frame is flagged and the next frame re-seeds
// from the last success.
std::vector<TraceResult> trace_sequence(const TraceConfig& config,
                                        const std::vector<GradientField>& frames,
                                        const ObservationSet& init, const NoiseModel& init_noise,
                                        int stride);

}  // namespace gpedge
