#include "gpedge/kernels.hpp"

#include <cmath>

#include "gpedge/errors.hpp"

namespace gpedge {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;
}  // namespace

void KernelSpec::validate() const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw ConfigError("kernel signal_variance must be positive and finite");
  }
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw ConfigError("kernel lengthscale must be positive and finite");
  }
  if (family == KernelFamily::Matern && nu != 1.5 && nu != 2.5) {
    throw ConfigError("Matern smoothness nu must be 1.5 or 2.5");
  }
}

KernelSpec KernelSpec::squared_exponential(double signal_variance, double lengthscale) {
  KernelSpec spec{KernelFamily::SquaredExponential, 2.5, signal_variance, lengthscale};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::matern(double nu, double signal_variance, double lengthscale) {
  KernelSpec spec{KernelFamily::Matern, nu, signal_variance, lengthscale};
  spec.validate();
  return spec;
}

double kernel_eval(const KernelSpec& spec, double r) {
  const double sf2 = spec.signal_variance;
  const double l = spec.lengthscale;
  if (spec.family == KernelFamily::SquaredExponential) {
    const double s = r / l;
    return sf2 * std::exp(-0.5 * s * s);
  }
  if (spec.nu == 1.5) {
    const double u = kSqrt3 * r / l;
    return sf2 * (1.0 + u) * std::exp(-u);
  }
  const double u = kSqrt5 * r / l;
  return sf2 * (1.0 + u + u * u / 3.0) * std::exp(-u);
}

double kernel_eval_dlengthscale(const KernelSpec& spec, double r) {
  const double sf2 = spec.signal_variance;
  const double l = spec.lengthscale;
  if (spec.family == KernelFamily::SquaredExponential) {
    const double s = r / l;
    return sf2 * std::exp(-0.5 * s * s) * s * s / l;
  }
  if (spec.nu == 1.5) {
    const double u = kSqrt3 * r / l;
    return sf2 * u * u * std::exp(-u) / l;
  }
  const double u = kSqrt5 * r / l;
  return sf2 * (u * u / 3.0) * (1.0 + u) * std::exp(-u) / l;
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::MatrixXd k(a.size(), b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      k(i, j) = kernel_eval(spec, std::abs(a[i] - b[j]));
    }
  }
  return k;
}

Eigen::MatrixXd gram_dlengthscale(const KernelSpec& spec, const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b) {
  Eigen::MatrixXd k(a.size(), b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      k(i, j) = kernel_eval_dlengthscale(spec, std::abs(a[i] - b[j]));
    }
  }
  return k;
}

}  // namespace gpedge
