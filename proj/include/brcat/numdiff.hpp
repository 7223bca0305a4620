#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>

namespace brcat {

// Per-coordinate steps: eps^(1/3) for first differences, eps^(1/4) for second
// differences, each scaled by max(1, |theta_t|).
inline double numdiff_step(double theta_t) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, std::fabs(theta_t));
}

inline double numdiff_step2(double theta_t) {
  static const double h0 = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  return h0 * std::max(1.0, std::fabs(theta_t));
}

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

// Central-difference gradient.
inline Eigen::VectorXd numeric_gradient(const ScalarFn& f, const Eigen::VectorXd& theta) {
  const int v = static_cast<int>(theta.size());
  Eigen::VectorXd g(v);
  Eigen::VectorXd t = theta;
  for (int i = 0; i < v; ++i) {
    const double h = numdiff_step(theta[i]);
    t[i] = theta[i] + h;
    const double fp = f(t);
    t[i] = theta[i] - h;
    const double fm = f(t);
    t[i] = theta[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("numeric_gradient: non-finite function value on stencil");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Central-difference Hessian, symmetrized as (H + H^T)/2.
inline Eigen::MatrixXd numeric_hessian(const ScalarFn& f, const Eigen::VectorXd& theta) {
  const int v = static_cast<int>(theta.size());
  Eigen::MatrixXd H(v, v);
  const double f0 = f(theta);
  if (!std::isfinite(f0)) throw std::runtime_error("numeric_hessian: non-finite f at center");
  Eigen::VectorXd t = theta;
  for (int i = 0; i < v; ++i) {
    const double hi = numdiff_step2(theta[i]);
    t[i] = theta[i] + hi;
    const double fp = f(t);
    t[i] = theta[i] - hi;
    const double fm = f(t);
    t[i] = theta[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("numeric_hessian: non-finite function value on stencil");
    H(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (int j = i + 1; j < v; ++j) {
      const double hj = numdiff_step2(theta[j]);
      double fpp, fpm, fmp, fmm;
      t[i] = theta[i] + hi;
      t[j] = theta[j] + hj;
      fpp = f(t);
      t[j] = theta[j] - hj;
      fpm = f(t);
      t[i] = theta[i] - hi;
      fmm = f(t);
      t[j] = theta[j] + hj;
      fmp = f(t);
      t[i] = theta[i];
      t[j] = theta[j];
      if (!std::isfinite(fpp) || !std::isfinite(fpm) || !std::isfinite(fmp) || !std::isfinite(fmm))
        throw std::runtime_error("numeric_hessian: non-finite function value on stencil");
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
    }
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace brcat
