#include "brcat/likelihood.hpp"

#include <cmath>

namespace brcat {

InfoMatrix::InfoMatrix(Eigen::MatrixXd m) : i_(std::move(m)) {}

void InfoMatrix::factor() const {
  if (factored_) return;
  llt_.compute(i_);
  if (llt_.info() != Eigen::Success)
    throw SingularInfoError("information matrix is (numerically) singular");
  factored_ = true;
}

const Eigen::MatrixXd& InfoMatrix::inverse() const {
  factor();
  if (!have_inverse_) {
    inverse_ = llt_.solve(Eigen::MatrixXd::Identity(i_.rows(), i_.cols()));
    have_inverse_ = true;
  }
  return inverse_;
}

double InfoMatrix::log_det() const {
  factor();
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd InfoMatrix::solve(const Eigen::VectorXd& rhs) const {
  factor();
  return llt_.solve(rhs);
}

namespace {

// Stacked linear predictors reshaped to n x (k-1).
Eigen::MatrixXd linear_predictors(const ModelMatrix& mm, const ParamVector& theta) {
  const Eigen::VectorXd eta = mm.design(theta.param) * theta.values;
  return Eigen::Map<const Eigen::MatrixXd>(eta.data(), mm.k - 1, mm.n).transpose();
}

// Third central cumulant of a multinomial over its first k-1 categories:
// kappa_abc = m (d_abc pi_a - d_ab pi_a pi_c - d_ac pi_a pi_b - d_bc pi_b pi_c
//              + 2 pi_a pi_b pi_c).
double multinomial_kappa3(double m, const Eigen::VectorXd& pi, int a, int b, int c) {
  double val = 2.0 * pi[a] * pi[b] * pi[c];
  if (a == b && b == c) val += pi[a];
  if (a == b) val -= pi[a] * pi[c];
  if (a == c) val -= pi[a] * pi[b];
  if (b == c) val -= pi[a] * pi[b];
  return m * val;
}

}  // namespace

double log_likelihood(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta) {
  const Eigen::MatrixXd eta = linear_predictors(mm, theta);
  const int km1 = mm.k - 1;
  double ll = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    double mx = 0.0;
    for (int j = 0; j < km1; ++j) mx = std::max(mx, eta(i, j));
    double denom = std::exp(-mx);
    for (int j = 0; j < km1; ++j) denom += std::exp(eta(i, j) - mx);
    const double lse = mx + std::log(denom);
    for (int j = 0; j < km1; ++j) ll += d.y(i, j) * (eta(i, j) - lse);
    ll += d.y(i, km1) * (-lse);
  }
  return ll;
}

double log_multinomial_constants(const Dataset& d) {
  double c = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    c += std::lgamma(d.totals[i] + 1.0);
    for (int j = 0; j < d.k(); ++j) c -= std::lgamma(d.y(i, j) + 1.0);
  }
  return c;
}

double log_likelihood_full(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta) {
  return log_likelihood(mm, d, theta) + log_multinomial_constants(d);
}

Eigen::VectorXd score(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta) {
  const Eigen::MatrixXd P = fitted_probabilities(mm, d, theta);
  const int km1 = mm.k - 1;
  Eigen::VectorXd resid(mm.n * km1);
  for (int i = 0; i < d.n(); ++i)
    for (int j = 0; j < km1; ++j) resid[i * km1 + j] = d.y(i, j) - d.totals[i] * P(i, j);
  return mm.design(theta.param).transpose() * resid;
}

Eigen::MatrixXd expected_info_matrix(const ModelMatrix& mm, const Dataset& d,
                                     const ParamVector& theta) {
  const Eigen::MatrixXd P = fitted_probabilities(mm, d, theta);
  const int km1 = mm.k - 1;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(mm.v, mm.v);
  for (int i = 0; i < d.n(); ++i) {
    const Eigen::VectorXd pi = P.row(i).head(km1);
    const Eigen::MatrixXd W =
        d.totals[i] * (Eigen::MatrixXd(pi.asDiagonal()) - pi * pi.transpose());
    const auto B = mm.block(i, theta.param);
    info.noalias() += B.transpose() * W * B;
  }
  return 0.5 * (info + info.transpose());
}

InfoMatrix expected_info(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta) {
  return InfoMatrix(expected_info_matrix(mm, d, theta));
}

double penalized_log_likelihood(const ModelMatrix& mm, const Dataset& d, const ParamVector& theta,
                                double power) {
  double ll = log_likelihood(mm, d, theta);
  if (power == 0.0) return ll;
  return ll + power * expected_info(mm, d, theta).log_det();
}

std::vector<Eigen::MatrixXd> p_tensor(const ModelMatrix& mm, const Dataset& d,
                                      const ParamVector& theta) {
  const Eigen::MatrixXd P = fitted_probabilities(mm, d, theta);
  const int km1 = mm.k - 1, v = mm.v;
  std::vector<Eigen::MatrixXd> Pt(v, Eigen::MatrixXd::Zero(v, v));
  for (int i = 0; i < d.n(); ++i) {
    const Eigen::VectorXd pi = P.row(i).head(km1);
    const auto B = mm.block(i, theta.param);
    for (int c = 0; c < km1; ++c) {
      Eigen::MatrixXd K(km1, km1);
      for (int a = 0; a < km1; ++a)
        for (int b = 0; b < km1; ++b) K(a, b) = multinomial_kappa3(d.totals[i], pi, a, b, c);
      const Eigen::MatrixXd S = B.transpose() * K * B;
      for (int t = 0; t < v; ++t)
        if (B(c, t) != 0.0) Pt[t].noalias() += B(c, t) * S;
    }
  }
  return Pt;
}

Eigen::VectorXd mean_adjustment(const ModelMatrix& mm, const Dataset& d,
                                const ParamVector& theta) {
  const Eigen::MatrixXd P = fitted_probabilities(mm, d, theta);
  const InfoMatrix info = expected_info(mm, d, theta);
  const Eigen::MatrixXd& Vinv = info.inverse();
  const int km1 = mm.k - 1;
  Eigen::VectorXd A = Eigen::VectorXd::Zero(mm.v);
  for (int i = 0; i < d.n(); ++i) {
    const Eigen::VectorXd pi = P.row(i).head(km1);
    const auto B = mm.block(i, theta.param);
    const Eigen::MatrixXd M = B * Vinv * B.transpose();
    Eigen::VectorXd T(km1);
    for (int c = 0; c < km1; ++c) {
      double s = 0.0;
      for (int a = 0; a < km1; ++a)
        for (int b = 0; b < km1; ++b) s += multinomial_kappa3(d.totals[i], pi, a, b, c) * M(a, b);
      T[c] = s;
    }
    A.noalias() += 0.5 * B.transpose() * T;
  }
  return A;
}

namespace {

Eigen::VectorXd median_modification_impl(const std::vector<Eigen::MatrixXd>& Pt,
                                         const InfoMatrix& info) {
  const Eigen::MatrixXd& Vinv = info.inverse();
  const int v = static_cast<int>(Vinv.rows());
  // F_t = sum_s [i^{-1}]_{st} * trace(itilde_t P_s)/3, with
  // itilde_t = c_t c_t' / c_tt and c_t the t-th column of i^{-1}. The rank-one
  // projector carries the outer index; this is what makes the resulting
  // estimator equivariant under componentwise reparameterizations.
  Eigen::VectorXd F = Eigen::VectorXd::Zero(v);
  for (int t = 0; t < v; ++t) {
    const auto ct = Vinv.col(t);
    double ft = 0.0;
    for (int s = 0; s < v; ++s) {
      const double quad = ct.dot(Pt[s] * ct) / Vinv(t, t);
      ft += Vinv(s, t) * quad / 3.0;
    }
    F[t] = ft;
  }
  return info.matrix() * F;
}

}  // namespace

Eigen::VectorXd median_modification(const ModelMatrix& mm, const Dataset& d,
                                    const ParamVector& theta) {
  return median_modification_impl(p_tensor(mm, d, theta), expected_info(mm, d, theta));
}

AdjustmentTerms adjustment_terms(const ModelMatrix& mm, const Dataset& d,
                                 const ParamVector& theta) {
  AdjustmentTerms terms;
  terms.p_tensor = p_tensor(mm, d, theta);
  const InfoMatrix info = expected_info(mm, d, theta);
  const Eigen::MatrixXd& Vinv = info.inverse();
  const int v = mm.v;
  terms.A.resize(v);
  for (int t = 0; t < v; ++t) terms.A[t] = 0.5 * (Vinv * terms.p_tensor[t]).trace();
  terms.modification = median_modification_impl(terms.p_tensor, info);
  return terms;
}

Eigen::VectorXd sufficient_statistics(const ModelMatrix& mm, const Dataset& d,
                                      Parameterization pz) {
  const int km1 = mm.k - 1;
  Eigen::VectorXd counts(mm.n * km1);
  for (int i = 0; i < d.n(); ++i)
    for (int j = 0; j < km1; ++j) counts[i * km1 + j] = d.y(i, j);
  return mm.design(pz).transpose() * counts;
}

Eigen::VectorXd sufficient_statistics(const ModelMatrix& mm, const Dataset& d) {
  return sufficient_statistics(mm, d, mm.reporting);
}

}  // namespace brcat
