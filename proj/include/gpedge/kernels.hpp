#pragma once

#include <Eigen/Core>

namespace gpedge {

enum class KernelFamily { SquaredExponential, Matern };

// Stationary isotropic covariance function k(r), r = |x_i - x_j|.
// Squared exponential: k(r) = sf2 * exp(-r^2 / (2 l^2))
// Matern (nu = 3/2):    k(r) = sf2 * (1 + u) * exp(-u),            u = sqrt(3) r / l
// Matern (nu = 5/2):    k(r) = sf2 * (1 + u + u^2/3) * exp(-u),    u = sqrt(5) r / l
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  double nu = 2.5;               // Matern smoothness; 1.5 or 2.5
  double signal_variance = 1.0;  // sf2, squared pixels
  double lengthscale = 1.0;      // l, pixels

  void validate() const;  // throws ConfigError on non-positive hyperparameters

  static KernelSpec squared_exponential(double signal_variance, double lengthscale);
  static KernelSpec matern(double nu, double signal_variance, double lengthscale);
};

double kernel_eval(const KernelSpec& spec, double r);

// Partial derivative of k(r) with respect to the lengthscale; the derivative
// with respect to signal_variance is simply k(r) / signal_variance.
double kernel_eval_dlengthscale(const KernelSpec& spec, double r);

// Pairwise kernel matrix, entry (i, j) = k(|a_i - b_j|).
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Elementwise d/dlengthscale of gram(spec, a, b).
Eigen::MatrixXd gram_dlengthscale(const KernelSpec& spec, const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b);

}  // namespace gpedge
