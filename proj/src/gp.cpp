#include "gpedge/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "gpedge/errors.hpp"
#include "gpedge/rng.hpp"

namespace gpedge {

namespace {

// Base jitter added to every observation Gram diagonal, escalated x10 on
// Cholesky failure up to the relative cap.
constexpr double kBaseJitterRel = 1e-8;
constexpr double kMaxJitterRel = 1e-2;

Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& a, double signal_variance,
                                                 const char* label) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double rel = kBaseJitterRel; rel <= kMaxJitterRel * 1.5; rel *= 10.0) {
    Eigen::MatrixXd jittered = a;
    jittered.diagonal().array() += rel * signal_variance;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) {
      return llt;
    }
  }
  throw NumericalError(std::string("Cholesky factorisation of ") + label +
                       " failed after jitter escalation");
}

}  // namespace

NoiseModel NoiseModel::uniform(int count, double variance) {
  NoiseModel noise;
  noise.per_point = Eigen::VectorXd::Constant(count, variance);
  noise.validate(count);
  return noise;
}

void NoiseModel::validate(int count) const {
  if (per_point.size() != count) {
    throw ConfigError("noise model size does not match observation count");
  }
  for (Eigen::Index i = 0; i < per_point.size(); ++i) {
    if (!(per_point[i] >= 0.0) || !std::isfinite(per_point[i])) {
      throw ConfigError("noise variances must be finite and non-negative");
    }
  }
}

void ObservationSet::validate() const {
  if (x.size() != y.size()) {
    throw ConfigError("observation inputs and targets differ in length");
  }
  for (Eigen::Index i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) {
      throw ConfigError("observation inputs must be strictly increasing");
    }
  }
}

PosteriorPredictive posterior(const ObservationSet& obs, const NoiseModel& noise,
                              const KernelSpec& spec, const Eigen::VectorXd& xstar) {
  spec.validate();
  obs.validate();

  PosteriorPredictive ppd;
  ppd.xstar = xstar;
  ppd.covariance = gram(spec, xstar, xstar);
  ppd.mean = Eigen::VectorXd::Zero(xstar.size());
  if (obs.size() == 0) {
    return ppd;  // prior: zero mean, K**
  }
  noise.validate(obs.size());

  Eigen::MatrixXd a = gram(spec, obs.x, obs.x);
  a.diagonal() += noise.per_point;
  const auto llt = cholesky_with_jitter(a, spec.signal_variance, "K + diag(noise)");

  const Eigen::MatrixXd kstar = gram(spec, obs.x, xstar);  // m x n*
  ppd.mean = kstar.transpose() * llt.solve(obs.y);
  const Eigen::MatrixXd v = llt.matrixL().solve(kstar);
  ppd.covariance.noalias() -= v.transpose() * v;
  ppd.covariance = 0.5 * (ppd.covariance + ppd.covariance.transpose()).eval();
  return ppd;
}

PosteriorBatch sample_posterior(const PosteriorPredictive& ppd, int count, std::uint64_t seed) {
  if (count < 1) {
    throw ConfigError("sample count must be at least 1");
  }
  const Eigen::Index n = ppd.mean.size();
  PosteriorBatch batch;
  batch.curves.resize(count, n);

  // A zero covariance collapses every draw onto the mean exactly.
  if (ppd.covariance.size() == 0 || ppd.covariance.cwiseAbs().maxCoeff() == 0.0) {
    batch.curves = ppd.mean.transpose().replicate(count, 1);
    return batch;
  }

  // Pivoted LDL^T handles the PSD (often rank-deficient) posterior covariance;
  // negative pivots from round-off are clamped to zero.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ppd.covariance);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("LDLT factorisation of the posterior covariance failed");
  }
  const Eigen::VectorXd droot = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd transform = ldlt.matrixL();
  transform = transform * droot.asDiagonal();
  transform = ldlt.transpositionsP().transpose() * transform;

  Eigen::MatrixXd z(n, count);
  for (int l = 0; l < count; ++l) {
    auto engine = make_engine(derive_seed(seed, static_cast<std::uint64_t>(l)));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      z(i, l) = normal(engine);
    }
  }
  batch.curves = (ppd.mean.replicate(1, count) + transform * z).transpose();
  return batch;
}

namespace {

struct LmlTerms {
  double value;
  Eigen::MatrixXd w;  // alpha alpha^T - A^{-1}
};

LmlTerms lml_terms(const ObservationSet& obs, const Eigen::VectorXd& noise_diag,
                   const KernelSpec& spec) {
  const int m = obs.size();
  Eigen::MatrixXd a = gram(spec, obs.x, obs.x);
  a.diagonal() += noise_diag;
  const auto llt = cholesky_with_jitter(a, spec.signal_variance, "K + diag(noise)");

  const Eigen::VectorXd alpha = llt.solve(obs.y);
  double log_det = 0.0;
  for (int i = 0; i < m; ++i) {
    log_det += std::log(llt.matrixLLT()(i, i));
  }
  LmlTerms terms;
  terms.value = -0.5 * obs.y.dot(alpha) - log_det - 0.5 * m * std::log(2.0 * M_PI);
  terms.w = alpha * alpha.transpose() -
            llt.solve(Eigen::MatrixXd::Identity(m, m));
  return terms;
}

}  // namespace

LogMarginal log_marginal_likelihood(const ObservationSet& obs, const NoiseModel& noise,
                                    const KernelSpec& spec) {
  spec.validate();
  obs.validate();
  if (obs.size() < 1) {
    throw ConfigError("log marginal likelihood requires at least one observation");
  }
  noise.validate(obs.size());

  const LmlTerms terms = lml_terms(obs, noise.per_point, spec);
  const Eigen::MatrixXd k = gram(spec, obs.x, obs.x);
  const Eigen::MatrixXd dk_len = gram_dlengthscale(spec, obs.x, obs.x);

  LogMarginal result;
  result.value = terms.value;
  // d/dtheta = 1/2 tr((alpha alpha^T - A^{-1}) dA/dtheta)
  result.gradient[0] = 0.5 * (terms.w.array() * (k / spec.signal_variance).array()).sum();
  result.gradient[1] = 0.5 * (terms.w.array() * dk_len.array()).sum();
  result.gradient[2] = 0.5 * terms.w.trace();
  return result;
}

namespace {

// Objective for the optimiser: LML as a function of log-parameters, with the
// shared-noise gradient restricted to the entries that track it.
struct LogSpaceObjective {
  const ObservationSet& obs;
  Eigen::VectorXd fixed_noise;   // override entries; -1 marks shared entries
  Eigen::VectorXd shared_mask;   // 1 where the shared noise applies

  double value(const Eigen::Vector3d& z) const {
    KernelSpec spec = base;
    spec.signal_variance = std::exp(z[0]);
    spec.lengthscale = std::exp(z[1]);
    const double sy2 = std::exp(z[2]);
    const Eigen::VectorXd diag =
        fixed_noise.cwiseMax(0.0) + shared_mask * sy2;
    return lml_terms(obs, diag, spec).value;
  }

  double value_and_gradient(const Eigen::Vector3d& z, Eigen::Vector3d& grad) const {
    KernelSpec spec = base;
    spec.signal_variance = std::exp(z[0]);
    spec.lengthscale = std::exp(z[1]);
    const double sy2 = std::exp(z[2]);
    const Eigen::VectorXd diag = fixed_noise.cwiseMax(0.0) + shared_mask * sy2;

    const LmlTerms terms = lml_terms(obs, diag, spec);
    const Eigen::MatrixXd k = gram(spec, obs.x, obs.x);
    const Eigen::MatrixXd dk_len = gram_dlengthscale(spec, obs.x, obs.x);

    const double g_sf2 = 0.5 * (terms.w.array() * (k / spec.signal_variance).array()).sum();
    const double g_len = 0.5 * (terms.w.array() * dk_len.array()).sum();
    const double g_sy2 = 0.5 * (terms.w.diagonal().array() * shared_mask.array()).sum();

    // chain rule into log space
    grad[0] = g_sf2 * spec.signal_variance;
    grad[1] = g_len * spec.lengthscale;
    grad[2] = g_sy2 * sy2;
    return terms.value;
  }

  KernelSpec base;
};

constexpr double kLogLow = -23.0;  // ~1e-10
constexpr double kLogHigh = 23.0;  // ~1e10

Eigen::Vector3d clamp_log(Eigen::Vector3d z, double log_noise_floor) {
  z[0] = std::clamp(z[0], kLogLow, kLogHigh);
  z[1] = std::clamp(z[1], kLogLow, kLogHigh);
  z[2] = std::clamp(z[2], log_noise_floor, kLogHigh);
  return z;
}

}  // namespace

OptimizedHyperparameters optimize_hyperparameters(const ObservationSet& obs,
                                                  const NoiseModel& noise0, double shared_noise0,
                                                  const KernelSpec& spec0,
                                                  const OptimizeOptions& opts) {
  spec0.validate();
  obs.validate();
  if (obs.size() == 0) {
    throw ConfigError("hyperparameter optimisation requires observations");
  }
  noise0.validate(obs.size());

  OptimizedHyperparameters result;
  result.spec = spec0;
  result.noise_variance = shared_noise0;
  if (obs.size() == 1) {
    // Unidentifiable; keep the user's parameters.
    result.log_marginal = log_marginal_likelihood(obs, noise0, spec0).value;
    result.converged = true;
    return result;
  }

  LogSpaceObjective objective{obs, Eigen::VectorXd(), Eigen::VectorXd(), spec0};
  objective.fixed_noise = Eigen::VectorXd::Constant(obs.size(), -1.0);
  objective.shared_mask = Eigen::VectorXd::Zero(obs.size());
  for (int i = 0; i < obs.size(); ++i) {
    if (noise0.per_point[i] == shared_noise0) {
      objective.shared_mask[i] = 1.0;
    } else {
      objective.fixed_noise[i] = noise0.per_point[i];
    }
  }

  const double log_floor = std::log(opts.noise_floor);
  const Eigen::Vector3d z0 = clamp_log(
      {std::log(spec0.signal_variance), std::log(spec0.lengthscale),
       std::log(std::max(shared_noise0, opts.noise_floor))},
      log_floor);

  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_z = z0;
  bool any_converged = false;

  auto engine = make_engine(derive_seed(opts.seed, 0x6f7074));
  std::uniform_real_distribution<double> jitter(-0.7, 0.7);

  for (int restart = 0; restart < std::max(opts.restarts, 1); ++restart) {
    Eigen::Vector3d z = z0;
    if (restart > 0) {
      for (int i = 0; i < 3; ++i) {
        z[i] += jitter(engine);
      }
      z = clamp_log(z, log_floor);
    }

    Eigen::Vector3d grad;
    double value;
    try {
      value = objective.value_and_gradient(z, grad);
    } catch (const NumericalError&) {
      continue;
    }
    if (value > best_value) {
      best_value = value;
      best_z = z;
    }

    bool restart_converged = false;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
      const double scale = std::max(1.0, std::abs(value));
      if (grad.cwiseAbs().maxCoeff() < opts.gradient_tolerance * scale) {
        restart_converged = true;
        break;
      }
      // ascent direction capped to a 0.8 step in log space
      Eigen::Vector3d direction = grad;
      const double dmax = direction.cwiseAbs().maxCoeff();
      if (dmax > 0.8) {
        direction *= 0.8 / dmax;
      }

      double step = 1.0;
      bool accepted = false;
      const double slope = grad.dot(direction);
      while (step >= 1e-10) {
        const Eigen::Vector3d z_try = clamp_log(z + step * direction, log_floor);
        double v_try;
        try {
          v_try = objective.value(z_try);
        } catch (const NumericalError&) {
          step *= 0.5;
          continue;
        }
        if (std::isfinite(v_try) && v_try > value + 1e-4 * step * slope) {
          z = z_try;
          value = v_try;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        // No ascent direction left at line-search resolution.
        restart_converged = true;
        break;
      }
      try {
        value = objective.value_and_gradient(z, grad);
      } catch (const NumericalError&) {
        break;
      }
      if (value > best_value) {
        best_value = value;
        best_z = z;
      }
    }
    if (value > best_value) {
      best_value = value;
      best_z = z;
    }
    any_converged = any_converged || restart_converged;
  }

  result.spec.signal_variance = std::exp(best_z[0]);
  result.spec.lengthscale = std::exp(best_z[1]);
  result.noise_variance = std::max(std::exp(best_z[2]), opts.noise_floor);
  result.log_marginal = best_value;
  result.converged = any_converged;
  return result;
}

}  // namespace gpedge
