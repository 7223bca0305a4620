#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "brcat/fit.hpp"
#include "brcat/numdiff.hpp"

namespace brcat {

// First-order mean bias of h(theta) at a mean-BR fit:
// trace{ i(theta)^{-1} Hess h(theta) } / 2, Hessian by central differences.
// The corrected estimator is h(estimate) - transform_bias(...).
double transform_bias(const FitResult& fit, const ScalarFn& h);

struct OddsRatioEstimates {
  double zeta_hat;    // exp(beta)
  double zeta_star;   // exp(beta) (1 - v_jj/2); can go negative when v_jj > 2
  double zeta_2star;  // exp(beta) / (1 + v_jj/2)
  double zeta_3star;  // exp(beta - v_jj/2)
  double se_hat, se_star, se_2star, se_3star;
  bool star_nonsensical = false;  // zeta_star < 0
};

// Bias-corrected odds-ratio estimators for coefficient j of a mean-BR fit.
OddsRatioEstimates odds_ratio_estimates(const FitResult& fit, int j);

struct SuperiorityResult {
  double delta = 0.0;   // P(group1 higher) - P(group2 higher), in [-1, 1]
  double gamma = 0.0;   // (delta + 1)/2: P(higher) with ties split evenly
  double b_star = 0.0;  // first-order bias of the plug-in delta
  double delta_corrected = 0.0;
  double gamma_corrected = 0.0;
  double se_delta = 0.0;
  double se_gamma = 0.0;
  Eigen::VectorXd w;  // covariate setting (group slot ignored)
  bool corrected = false;
};

// Ordinal superiority of group z=1 over z=0 at covariate setting w.
// `group_index` names the 0/1 covariate column; `corrected` subtracts the
// first-order bias (mean-BR fits only). Standard errors by the delta method
// with numeric gradients.
SuperiorityResult superiority(const FitResult& fit, const ModelMatrix& mm, const Dataset& d,
                              const Eigen::VectorXd& w, int group_index, bool corrected);

// Average of the per-row measures over the dataset's covariate settings.
SuperiorityResult summary_superiority(const FitResult& fit, const ModelMatrix& mm,
                                      const Dataset& d, int group_index, bool corrected);

struct WaldReport {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  Eigen::MatrixXd contrast;
};

// W = (C theta)' {C vcov C'}^{-1} (C theta) against chi-squared with q = rows(C).
WaldReport wald_test(const FitResult& fit, const Eigen::MatrixXd& C);

// Contrast expressing equal per-logit slopes for every covariate of a
// per-logit-slopes model: p(k-2) rows over v = (k-1)(p+1) parameters.
Eigen::MatrixXd parallel_contrast(int k, int p);

struct ZTableRow {
  std::string name;
  double estimate, se, z, p;
  int divergence;  // -1 / 0 / +1
};

std::vector<ZTableRow> z_table(const FitResult& fit);

}  // namespace brcat
