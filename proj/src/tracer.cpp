#include "gpedge/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpedge/errors.hpp"
#include "gpedge/rng.hpp"

namespace gpedge {

void TraceConfig::validate(int cols) const {
  kernel.validate();
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw ConfigError("noise_variance must be finite and non-negative");
  }
  if (curves < 1) {
    throw ConfigError("curves must be at least 1");
  }
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) {
    throw ConfigError("keep_ratio must lie in (0, 1]");
  }
  if (static_cast<int>(std::floor(keep_ratio * curves + 1e-9)) < 1) {
    throw ConfigError("keep_ratio * curves must be at least 1 after truncation");
  }
  if (threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("threshold must lie in [0, 1]");
  }
  if (!(bin_width >= 1.0)) {
    throw ConfigError("bin_width must be at least 1 pixel");
  }
  if (!(density_lengthscale > 0.0)) {
    throw ConfigError("density_lengthscale must be positive");
  }
  if (!(threshold_reduction > 0.0) || threshold_reduction >= 1.0) {
    throw ConfigError("threshold_reduction must lie in (0, 1)");
  }
  if (!(threshold_floor > 0.0)) {
    throw ConfigError("threshold_floor must be positive");
  }
  if (max_iterations < 1) {
    throw ConfigError("max_iterations must be at least 1");
  }
  if (cols > 0 && bin_count(cols) < 2) {
    throw ConfigError("bin_width leaves fewer than 2 sub-intervals");
  }
}

int TraceConfig::bin_count(int cols) const {
  return static_cast<int>(std::ceil(cols / bin_width));
}

namespace {

// Composite Simpson over equally spaced samples (h = 1); a trailing odd
// interval is closed with the trapezoid rule.
double simpson(const std::vector<double>& f) {
  const int n = static_cast<int>(f.size()) - 1;  // interval count
  double total = 0.0;
  int even_end = (n % 2 == 0) ? n : n - 1;
  for (int i = 0; i + 2 <= even_end; i += 2) {
    total += (f[i] + 4.0 * f[i + 1] + f[i + 2]) / 3.0;
  }
  if (n % 2 != 0) {
    total += 0.5 * (f[n - 1] + f[n]);
  }
  return total;
}

}  // namespace

double score_curve(const Eigen::VectorXd& curve, const GradientField& gradient) {
  const int n = static_cast<int>(curve.size());
  if (n < 3) {
    throw ConfigError("curve scoring needs at least 3 samples");
  }
  std::vector<double> response(n), arc(n);
  for (int i = 0; i < n; ++i) {
    double slope;
    if (i == 0) {
      slope = curve[1] - curve[0];
    } else if (i == n - 1) {
      slope = curve[n - 1] - curve[n - 2];
    } else {
      slope = 0.5 * (curve[i + 1] - curve[i - 1]);
    }
    arc[i] = std::sqrt(1.0 + slope * slope);
    response[i] = bilinear(gradient, static_cast<double>(i), curve[i]) * arc[i];
  }
  return simpson(response) / simpson(arc);
}

void score_batch(PosteriorBatch& batch, const GradientField& gradient) {
  batch.scores.resize(batch.count());
  for (int l = 0; l < batch.count(); ++l) {
    batch.scores[l] = score_curve(batch.curves.row(l).transpose(), gradient);
  }
}

std::vector<int> select_optimal(const PosteriorBatch& batch, double keep_ratio) {
  if (batch.scores.size() != batch.count()) {
    throw ConfigError("batch must be scored before selection");
  }
  if (batch.count() < 1) {
    throw ConfigError("empty posterior batch");
  }
  if (batch.scores.maxCoeff() <= 0.0) {
    throw LostEdgeError(
        "every posterior curve scored zero gradient response; the edge was lost "
        "(consider a larger signal_variance or endpoints closer to the edge)");
  }
  const int keep = std::max(1, static_cast<int>(std::floor(keep_ratio * batch.count() + 1e-9)));
  std::vector<int> order(batch.count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return batch.scores[a] > batch.scores[b]; });
  order.resize(std::min(keep, batch.count()));
  return order;
}

FrequencyDensity build_density(const Eigen::MatrixXd& curves, const Eigen::VectorXd& scores,
                               int rows, int cols, double lengthscale) {
  if (curves.rows() == 0 || curves.rows() != scores.size()) {
    throw ConfigError("density needs one score per curve");
  }
  const int n_curves = static_cast<int>(curves.rows());
  const int n_points = static_cast<int>(curves.cols());
  const double score_total = scores.sum();

  FrequencyDensity density;
  density.grid = Grid::Zero(rows, cols);

  // Per-point weights: curve l's share of the total score, split over its
  // points so everything deposited sums to 1.
  Eigen::VectorXd point_weight(n_curves);
  for (int l = 0; l < n_curves; ++l) {
    point_weight[l] = score_total > 0.0 ? scores[l] / (score_total * n_points)
                                        : 1.0 / (static_cast<double>(n_curves) * n_points);
  }

  const double radius = 4.0 * lengthscale;
  const double inv_2l2 = 1.0 / (2.0 * lengthscale * lengthscale);
  const double norm = 1.0 / (2.0 * M_PI * lengthscale * lengthscale);
  double mass = 0.0;
  for (int l = 0; l < n_curves; ++l) {
    const double w = point_weight[l];
    for (int i = 0; i < n_points; ++i) {
      const double x = static_cast<double>(i);
      const double y = curves(l, i);
      mass += w;
      const int c0 = std::max(0, static_cast<int>(std::ceil(x - radius)));
      const int c1 = std::min(cols - 1, static_cast<int>(std::floor(x + radius)));
      const int r0 = std::max(0, static_cast<int>(std::ceil(y - radius)));
      const int r1 = std::min(rows - 1, static_cast<int>(std::floor(y + radius)));
      for (int c = c0; c <= c1; ++c) {
        const double dx = c - x;
        for (int r = r0; r <= r1; ++r) {
          const double dy = r - y;
          const double d2 = dx * dx + dy * dy;
          if (d2 <= radius * radius) {
            density.grid(r, c) += w * norm * std::exp(-d2 * inv_2l2);
          }
        }
      }
    }
  }
  density.raw_mass = mass;
  density.raw_max = density.grid.maxCoeff();
  if (density.raw_max > 0.0) {
    density.grid /= density.raw_max;
  }
  return density;
}

Grid score_pixels(const FrequencyDensity& density, const GradientField& gradient) {
  if (density.grid.rows() != gradient.values.rows() ||
      density.grid.cols() != gradient.values.cols()) {
    throw std::logic_error("frequency density and gradient shapes differ");
  }
  return ((density.grid.array() * gradient.values.array()) + density.grid.array() +
          gradient.values.array()) /
         3.0;
}

ObservationSet TraceObservations::as_observation_set() const {
  ObservationSet obs;
  obs.x = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  obs.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return obs;
}

NoiseModel TraceObservations::as_noise_model() const {
  NoiseModel model;
  model.per_point =
      Eigen::Map<const Eigen::VectorXd>(noise.data(), static_cast<Eigen::Index>(noise.size()));
  return model;
}

namespace {

struct Candidate {
  double score = -1.0;
  double x = 0;
  double y = 0;
  double gradient = 0;
  double noise = 0;
  bool valid = false;

  // score desc, then column asc, then gradient desc, then row asc
  bool beats(const Candidate& other) const {
    if (!other.valid) return true;
    if (score != other.score) return score > other.score;
    if (x != other.x) return x < other.x;
    if (gradient != other.gradient) return gradient > other.gradient;
    return y < other.y;
  }
};

}  // namespace

TraceObservations accept_discard(const Grid& scores, double threshold, double bin_width,
                                 const TraceObservations& previous,
                                 const GradientField& gradient, double new_point_noise) {
  const int rows = static_cast<int>(scores.rows());
  const int cols = static_cast<int>(scores.cols());
  const int bins = static_cast<int>(std::ceil(cols / bin_width));
  auto bin_of = [&](double column) {
    return std::min(static_cast<int>(std::floor(column / bin_width)), bins - 1);
  };

  std::vector<Candidate> best(bins);

  // Highest-scoring pixel per sub-interval among those passing the threshold.
  for (int c = 0; c < cols; ++c) {
    const int b = bin_of(c);
    for (int r = 0; r < rows; ++r) {
      const double s = scores(r, c);
      if (s < threshold) continue;
      Candidate cand{s, static_cast<double>(c), static_cast<double>(r), gradient.values(r, c),
                     new_point_noise, true};
      if (cand.beats(best[b])) {
        best[b] = cand;
      }
    }
  }

  // Pool the re-scored previous observations. The first and last observations
  // anchor the edge endpoints and bypass the threshold.
  for (int i = 0; i < previous.size(); ++i) {
    const double px = previous.x[i];
    const double py = previous.y[i];
    const double s = bilinear(scores, px, py);
    const bool anchor = (i == 0 || i == previous.size() - 1);
    if (!anchor && s < threshold) {
      continue;  // discarded
    }
    Candidate cand{s, px, py, bilinear(gradient, px, py), previous.noise[i], true};
    const int b = bin_of(px);
    if (cand.beats(best[b])) {
      best[b] = cand;
    }
  }

  TraceObservations next;
  for (int b = 0; b < bins; ++b) {
    if (!best[b].valid) continue;
    next.x.push_back(best[b].x);
    next.y.push_back(best[b].y);
    next.noise.push_back(best[b].noise);
  }
  return next;
}

namespace {

TraceObservations to_trace_observations(const ObservationSet& init, const NoiseModel& noise) {
  init.validate();
  noise.validate(init.size());
  TraceObservations obs;
  for (int i = 0; i < init.size(); ++i) {
    obs.x.push_back(init.x[i]);
    obs.y.push_back(init.y[i]);
    obs.noise.push_back(noise.per_point[i]);
  }
  return obs;
}

}  // namespace

TraceResult trace(const TraceConfig& config, const GradientField& gradient,
                  const ObservationSet& init, const NoiseModel& init_noise) {
  const int rows = gradient.rows();
  const int cols = gradient.cols();
  config.validate(cols);
  if (init.size() < 2) {
    throw ConfigError("tracing needs at least the two edge endpoints");
  }

  Eigen::VectorXd xstar(cols);
  for (int c = 0; c < cols; ++c) xstar[c] = c;

  TraceObservations observations = to_trace_observations(init, init_noise);
  const int bins = config.bin_count(cols);
  double threshold = config.threshold;

  TraceResult result;
  PosteriorPredictive ppd =
      posterior(observations.as_observation_set(), observations.as_noise_model(), config.kernel,
                xstar);

  int iteration = 0;
  while (observations.size() != bins && iteration < config.max_iterations) {
    ++iteration;
    PosteriorBatch batch =
        sample_posterior(ppd, config.curves, derive_seed(config.seed, iteration));
    score_batch(batch, gradient);
    std::vector<int> optimal;
    try {
      optimal = select_optimal(batch, config.keep_ratio);
    } catch (const LostEdgeError& err) {
      throw LostEdgeError(std::string(err.what()) + " [iteration " + std::to_string(iteration) +
                          ", |D| = " + std::to_string(observations.size()) + " of " +
                          std::to_string(bins) + ", T = " + std::to_string(threshold) + "]");
    }

    Eigen::MatrixXd kept(optimal.size(), cols);
    Eigen::VectorXd kept_scores(optimal.size());
    for (std::size_t i = 0; i < optimal.size(); ++i) {
      kept.row(static_cast<Eigen::Index>(i)) = batch.curves.row(optimal[i]);
      kept_scores[static_cast<Eigen::Index>(i)] = batch.scores[optimal[i]];
    }

    const FrequencyDensity density =
        build_density(kept, kept_scores, rows, cols, config.density_lengthscale);
    const Grid pixel_scores = score_pixels(density, gradient);

    TraceObservations next = accept_discard(pixel_scores, threshold, config.bin_width,
                                            observations, gradient, config.noise_variance);
    // Algorithm step 10: while the set fails to grow, relax the threshold and
    // redo the accept-discard steps.
    while (next.size() <= observations.size() && threshold > config.threshold_floor) {
      threshold = std::max(threshold * config.threshold_reduction, config.threshold_floor);
      next = accept_discard(pixel_scores, threshold, config.bin_width, observations, gradient,
                            config.noise_variance);
    }

    IterationStats stats;
    stats.threshold = threshold;
    stats.best_curve_score = kept_scores.size() > 0 ? kept_scores[0] : 0.0;
    if (next.size() > observations.size()) {
      // refit on the grown observation set
      observations = std::move(next);
      ppd = posterior(observations.as_observation_set(), observations.as_noise_model(),
                      config.kernel, xstar);
      stats.refit = true;
    }
    // Threshold at its floor without growth: keep the previous fit and draw a
    // fresh batch next iteration rather than refitting on a shrunken set.
    stats.observation_count = observations.size();
    result.history.push_back(stats);
  }

  result.iterations = iteration;
  result.converged = observations.size() == bins;

  // Final retrain with optimised hyperparameters.
  ObservationSet final_obs = observations.as_observation_set();
  NoiseModel final_noise = observations.as_noise_model();
  result.theta_hat =
      optimize_hyperparameters(final_obs, final_noise, config.noise_variance, config.kernel,
                               OptimizeOptions{.seed = derive_seed(config.seed, 0x746865)});

  NoiseModel optimised_noise = final_noise;
  for (Eigen::Index i = 0; i < optimised_noise.per_point.size(); ++i) {
    if (optimised_noise.per_point[i] == config.noise_variance) {
      optimised_noise.per_point[i] = result.theta_hat.noise_variance;
    }
  }
  const PosteriorPredictive final_ppd =
      posterior(final_obs, optimised_noise, result.theta_hat.spec, xstar);

  result.mean = final_ppd.mean;
  const Eigen::VectorXd half_width =
      1.96 * final_ppd.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  result.lower = final_ppd.mean - half_width;
  result.upper = final_ppd.mean + half_width;
  result.observations = std::move(final_obs);
  result.observation_noise = std::move(final_noise);
  return result;
}

TraceResult trace(const TraceConfig& config, const GradientField& gradient,
                  const ObservationSet& init) {
  return trace(config, gradient, init, NoiseModel::uniform(init.size(), config.noise_variance));
}

std::vector<TraceResult> trace_sequence(const TraceConfig& config,
                                        const std::vector<GradientField>& frames,
                                        const ObservationSet& init, const NoiseModel& init_noise,
                                        int stride) {
  if (frames.empty()) {
    throw ConfigError("sequence tracing needs at least one frame");
  }
  if (stride < 1) {
    throw ConfigError("stride must be at least 1");
  }
  for (std::size_t t = 1; t < frames.size(); ++t) {
    if (frames[t].rows() != frames[0].rows() || frames[t].cols() != frames[0].cols()) {
      throw ConfigError("sequence frames must share dimensions");
    }
  }

  std::vector<TraceResult> results;
  ObservationSet seed_obs = init;
  NoiseModel seed_noise = init_noise;
  const TraceResult* last_success = nullptr;

  for (std::size_t t = 0; t < frames.size(); ++t) {
    TraceConfig frame_config = config;
    frame_config.seed = derive_seed(config.seed, 0x736571 + t);
    TraceResult frame_result;
    try {
      frame_result = trace(frame_config, frames[t], seed_obs, seed_noise);
    } catch (const std::exception& err) {
      frame_result.failed = true;
      frame_result.error = err.what();
      results.push_back(std::move(frame_result));
      continue;  // next frame re-seeds from the last success
    }
    results.push_back(std::move(frame_result));
    last_success = &results.back();

    // Propagate every stride-th observation (endpoints always included).
    const ObservationSet& src = last_success->observations;
    std::vector<double> px, py;
    for (int i = 0; i < src.size(); i += stride) {
      px.push_back(src.x[i]);
      py.push_back(src.y[i]);
    }
    if (px.empty() || px.back() != src.x[src.size() - 1]) {
      px.push_back(src.x[src.size() - 1]);
      py.push_back(src.y[src.size() - 1]);
    }
    seed_obs.x = Eigen::Map<Eigen::VectorXd>(px.data(), static_cast<Eigen::Index>(px.size()));
    seed_obs.y = Eigen::Map<Eigen::VectorXd>(py.data(), static_cast<Eigen::Index>(py.size()));
    seed_noise = NoiseModel::uniform(static_cast<int>(px.size()), config.noise_variance);
  }
  return results;
}

}  // namespace gpedge
