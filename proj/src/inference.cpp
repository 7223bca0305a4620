#include "brcat/inference.hpp"

#include <cmath>

#include "brcat/stats.hpp"

namespace brcat {

double transform_bias(const FitResult& fit, const ScalarFn& h) {
  if (fit.method != Method::MBR)
    throw ModelError("transform_bias: the bias approximation applies to mean-BR fits");
  const Eigen::MatrixXd H = numeric_hessian(h, fit.estimate);
  return 0.5 * (fit.vcov * H).trace();
}

OddsRatioEstimates odds_ratio_estimates(const FitResult& fit, int j) {
  if (fit.method != Method::MBR)
    throw ModelError("odds_ratio_estimates: requires a mean-BR fit");
  if (j < 0 || j >= fit.estimate.size()) throw ModelError("odds_ratio_estimates: bad index");
  const double beta = fit.estimate[j];
  const double vjj = fit.vcov(j, j);
  const double se = fit.se[j];
  const double e = std::exp(beta);
  OddsRatioEstimates z;
  z.zeta_hat = e;
  z.zeta_star = e * (1.0 - 0.5 * vjj);
  z.zeta_2star = e / (1.0 + 0.5 * vjj);
  z.zeta_3star = std::exp(beta - 0.5 * vjj);
  z.se_hat = e * se;
  z.se_star = std::fabs(z.zeta_star) * se;
  z.se_2star = z.zeta_2star * se;
  z.se_3star = z.zeta_3star * se;
  z.star_nonsensical = z.zeta_star < 0.0;
  return z;
}

namespace {

void check_group_binary(const Dataset& d, int group_index) {
  if (group_index < 0 || group_index >= d.p())
    throw ModelError("superiority: group covariate index out of range");
  for (int i = 0; i < d.n(); ++i) {
    const double z = d.x(i, group_index);
    if (z != 0.0 && z != 1.0)
      throw ModelError("superiority: group covariate must be coded 0/1, found " +
                       std::to_string(z));
  }
}

// Delta(w; theta): probability-scale comparison of group z=1 against z=0 from
// the model's category probabilities, ties contributing to neither sum.
double delta_measure(const ModelMatrix& mm, const Eigen::VectorXd& w, int group_index,
                     const Eigen::VectorXd& theta, Parameterization pz) {
  Eigen::VectorXd x1 = w, x0 = w;
  x1[group_index] = 1.0;
  x0[group_index] = 0.0;
  const ParamVector pv{theta, pz, {}};
  const Eigen::VectorXd pi1 = probabilities_at(mm, x1, pv);
  const Eigen::VectorXd pi0 = probabilities_at(mm, x0, pv);
  double acc = 0.0;
  for (int r = 0; r < pi1.size(); ++r)
    for (int s = 0; s < pi0.size(); ++s) {
      if (r > s) acc += pi1[r] * pi0[s];
      if (r < s) acc -= pi1[r] * pi0[s];
    }
  return acc;
}

SuperiorityResult assemble(const FitResult& fit, double delta, double b_star,
                           const Eigen::VectorXd& grad, const Eigen::VectorXd& w,
                           bool corrected) {
  SuperiorityResult r;
  r.delta = delta;
  r.gamma = 0.5 * (delta + 1.0);
  r.b_star = b_star;
  r.delta_corrected = delta - b_star;
  r.gamma_corrected = 0.5 * (r.delta_corrected + 1.0);
  r.se_delta = std::sqrt(grad.dot(fit.vcov * grad));
  r.se_gamma = 0.5 * r.se_delta;
  r.w = w;
  r.corrected = corrected;
  return r;
}

}  // namespace

SuperiorityResult superiority(const FitResult& fit, const ModelMatrix& mm, const Dataset& d,
                              const Eigen::VectorXd& w, int group_index, bool corrected) {
  check_group_binary(d, group_index);
  if (corrected && fit.method != Method::MBR)
    throw ModelError("superiority: bias correction requires a mean-BR fit");
  const Parameterization pz = fit.solved_in;
  auto f = [&](const Eigen::VectorXd& th) { return delta_measure(mm, w, group_index, th, pz); };
  const double delta = f(fit.estimate);
  const Eigen::VectorXd grad = numeric_gradient(f, fit.estimate);
  double b_star = 0.0;
  if (corrected) {
    const Eigen::MatrixXd H = numeric_hessian(f, fit.estimate);
    b_star = 0.5 * (fit.vcov * H).trace();
  }
  return assemble(fit, delta, b_star, grad, w, corrected);
}

SuperiorityResult summary_superiority(const FitResult& fit, const ModelMatrix& mm,
                                      const Dataset& d, int group_index, bool corrected) {
  check_group_binary(d, group_index);
  if (corrected && fit.method != Method::MBR)
    throw ModelError("superiority: bias correction requires a mean-BR fit");
  const Parameterization pz = fit.solved_in;
  auto fbar = [&](const Eigen::VectorXd& th) {
    double acc = 0.0;
    for (int i = 0; i < d.n(); ++i)
      acc += delta_measure(mm, d.x.row(i).transpose(), group_index, th, pz);
    return acc / d.n();
  };
  const double delta = fbar(fit.estimate);
  const Eigen::VectorXd grad = numeric_gradient(fbar, fit.estimate);
  double b_star = 0.0;
  if (corrected) {
    const Eigen::MatrixXd H = numeric_hessian(fbar, fit.estimate);
    b_star = 0.5 * (fit.vcov * H).trace();
  }
  SuperiorityResult r = assemble(fit, delta, b_star, grad, Eigen::VectorXd(), corrected);
  return r;
}

WaldReport wald_test(const FitResult& fit, const Eigen::MatrixXd& C) {
  const int q = static_cast<int>(C.rows());
  if (C.cols() != fit.estimate.size())
    throw ModelError("wald_test: contrast has " + std::to_string(C.cols()) +
                     " columns, model has " + std::to_string(fit.estimate.size()));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
  if (lu.rank() < q) throw ModelError("wald_test: contrast matrix is not of full row rank");
  const Eigen::VectorXd ct = C * fit.estimate;
  const Eigen::MatrixXd mid = C * fit.vcov * C.transpose();
  WaldReport rep;
  rep.statistic = ct.dot(mid.llt().solve(ct));
  rep.df = q;
  rep.p_value = chisq_upper_tail(rep.statistic, q);
  rep.contrast = C;
  return rep;
}

Eigen::MatrixXd parallel_contrast(int k, int p) {
  if (k < 3) throw ModelError("parallel_contrast: needs at least 3 categories");
  const int v = (k - 1) * (p + 1);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p * (k - 2), v);
  int row = 0;
  for (int l = 0; l < p; ++l)
    for (int j = 0; j < k - 2; ++j, ++row) {
      C(row, (k - 1) + j * p + l) = 1.0;
      C(row, (k - 1) + (k - 2) * p + l) = -1.0;
    }
  return C;
}

std::vector<ZTableRow> z_table(const FitResult& fit) {
  std::vector<ZTableRow> rows;
  for (int t = 0; t < fit.estimate.size(); ++t) {
    ZTableRow r;
    r.name = t < static_cast<int>(fit.names.size()) ? fit.names[t] : "theta_" + std::to_string(t);
    r.estimate = fit.estimate[t];
    r.se = fit.se[t];
    r.z = (r.se > 0.0) ? r.estimate / r.se : 0.0;
    r.p = two_sided_normal_p(r.z);
    r.divergence = fit.divergence_flags.empty() ? 0 : fit.divergence_flags[t];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace brcat
