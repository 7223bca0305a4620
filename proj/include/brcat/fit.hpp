#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "brcat/likelihood.hpp"
#include "brcat/model.hpp"

namespace brcat {

enum class Method { ML, MBR, MdBR };

std::string method_name(Method m);

struct FitOptions {
  Method method = Method::MBR;
  int max_iter = 100;
  double tol = 1e-8;  // sup-norm of the estimating function
  std::optional<Eigen::VectorXd> start;  // in the solving parameterization
  int max_step_halvings = 20;
  double divergence_threshold = 20.0;  // |coefficient| beyond which a plateaued ML fit is flagged
};

struct IterationRecord {
  Eigen::VectorXd theta;
  double objective;
  double norm;
};

// Thrown when the iteration hits max_iter without either converging or being
// classified as a divergent (boundary) ML fit.
struct FitError : std::runtime_error {
  FitError(const std::string& msg, std::vector<IterationRecord> tr)
      : std::runtime_error(msg), trace(std::move(tr)) {}
  std::vector<IterationRecord> trace;
};

struct FitResult {
  ModelSpec spec;
  Method method = Method::MBR;
  Parameterization solved_in = Parameterization::ACL;

  Eigen::VectorXd estimate;  // in solved_in coordinates
  std::vector<std::string> names;
  std::optional<ParamVector> theta_acl;  // absent for custom reparameterizations
  std::optional<ParamVector> theta_bcl;

  Eigen::MatrixXd vcov;  // inverse expected information at the estimate
  Eigen::VectorXd se;

  bool converged = false;
  int iterations = 0;
  double estimating_fn_norm = 0.0;
  double objective = 0.0;      // monitored objective at the estimate
  double loglik = 0.0;         // log-likelihood including multinomial constants
  double loglik_kernel = 0.0;  // without the additive constants

  // Per parameter: 0 finite, +1 diverging to +inf, -1 diverging to -inf.
  std::vector<int> divergence_flags;
  std::vector<IterationRecord> trace;

  bool any_divergence() const;
  ParamVector params() const;  // estimate tagged with solved_in
};

// Quasi-Fisher scoring on the adjusted score in the model's reporting
// parameterization: theta <- theta + i^{-1} U with U the method's estimating
// function. ML fits on separated data are returned with divergence flags once
// the objective plateaus while coefficients grow past the threshold.
FitResult fit(const ModelMatrix& mm, const Dataset& d, const FitOptions& opts);

// Mean-BR estimation through the surrogate Poisson log-linear model: rescale
// means to the multinomial totals, add half a leverage to the counts, re-fit
// the Poisson model by ML, and iterate to a fixed point; then map the
// baseline-category estimates back. Independent route to the same root as
// fit() with Method::MBR.
FitResult fit_mbr_poisson(const ModelMatrix& mm, const Dataset& d, const FitOptions& opts);

// Fits the model with parameters phi = T theta (reporting parameterization).
// For Method::MdBR this is how median-BR estimates of linear combinations are
// obtained; they generally differ from T times the untransformed estimate.
FitResult refit_under_contrast(const ModelMatrix& mm, const Dataset& d, const Eigen::MatrixXd& T,
                               const FitOptions& opts);

}  // namespace brcat
