#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "gpedge/kernels.hpp"

namespace gpedge {

// Observation noise variances, one entry per observation. A uniform model is
// a constant vector; individual entries may be overridden (e.g. trusted edge
// endpoints pinned with a very low variance).
struct NoiseModel {
  Eigen::VectorXd per_point;

  static NoiseModel uniform(int count, double variance);
  void validate(int count) const;
};

// The fitted edge pixels D = {X, y}: column indices (strictly increasing)
// paired with row heights, both in pixels.
struct ObservationSet {
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  int size() const { return static_cast<int>(x.size()); }
  void validate() const;
};

struct PosteriorPredictive {
  Eigen::VectorXd xstar;
  Eigen::VectorXd mean;         // one entry per xstar
  Eigen::MatrixXd covariance;   // symmetric, PSD up to round-off
};

// L sampled posterior curves (row per curve, column per xstar input) together
// with their gradient scores once the tracer has evaluated them.
struct PosteriorBatch {
  Eigen::MatrixXd curves;
  Eigen::VectorXd scores;  // empty until scored

  int count() const { return static_cast<int>(curves.rows()); }
};

// Posterior predictive distribution of the latent function at xstar given the
// observations; with an empty observation set this is the prior (zero mean,
// covariance K**).
PosteriorPredictive posterior(const ObservationSet& obs, const NoiseModel& noise,
                              const KernelSpec& spec, const Eigen::VectorXd& xstar);

// Draws `count` i.i.d. curves from N(mean, covariance). Deterministic in the
// seed; curve l consumes a sub-stream derived from (seed, l), so results do
// not depend on evaluation order.
PosteriorBatch sample_posterior(const PosteriorPredictive& ppd, int count, std::uint64_t seed);

struct LogMarginal {
  double value;
  // Gradient with respect to {signal_variance, lengthscale, noise_variance};
  // the noise component is the derivative of a uniform shift of all
  // per-point variances.
  Eigen::Vector3d gradient;
};

LogMarginal log_marginal_likelihood(const ObservationSet& obs, const NoiseModel& noise,
                                    const KernelSpec& spec);

struct OptimizeOptions {
  int restarts = 5;
  int max_iterations = 100;
  double gradient_tolerance = 1e-5;
  double noise_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct OptimizedHyperparameters {
  KernelSpec spec;
  double noise_variance = 0.0;  // optimised shared noise
  double log_marginal = 0.0;
  bool converged = false;       // false when every restart stalled early
};

// Maximises the log marginal likelihood by gradient ascent with backtracking
// line search in log-parameter space, multi-started around (spec0,
// shared_noise0). Observations whose per-point variance equals shared_noise0
// track the optimised shared noise; other entries are treated as fixed
// overrides. With a single observation the problem is unidentifiable and the
// initial parameters are returned unchanged.
OptimizedHyperparameters optimize_hyperparameters(const ObservationSet& obs,
                                                  const NoiseModel& noise0, double shared_noise0,
                                                  const KernelSpec& spec0,
                                                  const OptimizeOptions& opts = {});

}  // namespace gpedge
