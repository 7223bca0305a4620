#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "brcat/model.hpp"

namespace brcat {

// Raised when the expected information has no Cholesky factor. Near-singular
// information along a divergence ray is diagnostic of separation, so this is
// surfaced rather than clamped.
struct SingularInfoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Expected information with cached Cholesky-based inverse and log-determinant.
// For this family the observed and expected information coincide.
class InfoMatrix {
 public:
  explicit InfoMatrix(Eigen::MatrixXd m);

  const Eigen::MatrixXd& matrix() const { return i_; }
  const Eigen::MatrixXd& inverse() const;
  double log_det() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  void factor() const;
  Eigen::MatrixXd i_;
  mutable Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable bool factored_ = false;
  mutable bool have_inverse_ = false;
  mutable Eigen::MatrixXd inverse_;
};

// Mean and median bias adjustment ingredients at a given parameter value:
// A is the mean adjustment, modification = i(theta) F(theta) is the vector
// subtracted from the mean-adjusted score for median adjustment, and p_tensor
// holds the third-cumulant contractions P_t (symmetric v x v each).
struct AdjustmentTerms {
  Eigen::VectorXd A;
  Eigen::VectorXd modification;
  std::vector<Eigen::MatrixXd> p_tensor;
};

// Multinomial log-likelihood kernel sum_ij y_ij log pi_ij; the additive
// log multinomial coefficients are NOT included here.
double log_likelihood(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta);

// Data-only additive constant: sum_i log( m_i! / prod_j y_ij! ).
double log_multinomial_constants(const Dataset& d);

// Kernel plus constants; comparable with saturated-count log-likelihoods
// reported by standard software.
double log_likelihood_full(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta);

// Exact analytic gradient of log_likelihood in theta's parameterization.
Eigen::VectorXd score(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta);

Eigen::MatrixXd expected_info_matrix(const ModelMatrix& mm, const Dataset& d,
                                     const ParamVector& theta);
InfoMatrix expected_info(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta);

// log_likelihood + power * log det i(theta). Power 1/2 is the mean-bias-
// reduction objective; power 1/6 is the one-parameter median-BR objective.
double penalized_log_likelihood(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta,
                                double power = 0.5);

// P_t(theta) = E(S S' S_t): exact third-cumulant contraction, one symmetric
// matrix per parameter index.
std::vector<Eigen::MatrixXd> p_tensor(const ModelMatrix& mm, const Dataset& d,
                                      const ParamVector& theta);

// Mean-BR adjustment A with A_t = trace(i^{-1} P_t)/2 (the Q term vanishes for
// this canonical family).
Eigen::VectorXd mean_adjustment(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta);

// Median-BR modification i(theta) F(theta).
Eigen::VectorXd median_modification(const ModelMatrix& mm, const Dataset& d,
                                    const ParamVector& theta);

AdjustmentTerms adjustment_terms(const ModelMatrix& mm, const Dataset& d,
                                 const ParamVector& theta);

// X' y under the block design of the requested parameterization. Defaults to
// the model's reporting parameterization.
Eigen::VectorXd sufficient_statistics(const ModelMatrix& mm, const Dataset& d);
Eigen::VectorXd sufficient_statistics(const ModelMatrix& mm, const Dataset& d,
                                      Parameterization pz);

}  // namespace brcat
