#include "brcat/model.hpp"

#include <cmath>

namespace brcat {

std::string family_name(Family f) {
  switch (f) {
    case Family::LogitBinomial: return "logit";
    case Family::BCL: return "bcl";
    case Family::AclPO: return "acl-po";
    case Family::AclNPO: return "acl-npo";
  }
  return "?";
}

namespace {

bool per_logit_slopes(Family f) { return f == Family::BCL || f == Family::AclNPO; }

std::vector<std::string> make_names(const Dataset& d, Family f, Parameterization pz) {
  const int k = d.k(), p = d.p();
  std::vector<std::string> names;
  const char* icpt = (pz == Parameterization::ACL) ? "alpha_" : "gamma_";
  for (int j = 1; j < k; ++j) names.push_back(icpt + std::to_string(j));
  if (per_logit_slopes(f)) {
    for (int j = 1; j < k; ++j)
      for (int l = 0; l < p; ++l) names.push_back(d.covariate_names[l] + ":" + std::to_string(j));
  } else {
    for (int l = 0; l < p; ++l) names.push_back(d.covariate_names[l]);
  }
  return names;
}

}  // namespace

ModelMatrix build_model(const Dataset& d, const ModelSpec& s) {
  const int k = d.k(), p = d.p(), n = d.n();
  if (s.family == Family::LogitBinomial && k != 2)
    throw ModelError("logit family requires exactly 2 categories, got " + std::to_string(k));

  ModelMatrix mm;
  mm.spec = s;
  mm.k = k;
  mm.p = p;
  mm.n = n;
  mm.reporting = (s.family == Family::BCL) ? Parameterization::BCL : Parameterization::ACL;

  const bool npo = per_logit_slopes(s.family);
  const int v = npo ? (k - 1) * (p + 1) : (k - 1) + p;
  mm.v = v;

  // Stacked BCL design: for observation i and logit j (0-based),
  //   eta_ij = gamma_j + delta_j' x_i          (per-logit slopes)
  //   eta_ij = gamma_j + (k-1-j) zeta' x_i     (proportional odds)
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n * (k - 1), v);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k - 1; ++j) {
      const int r = i * (k - 1) + j;
      X(r, j) = 1.0;
      if (npo) {
        for (int l = 0; l < p; ++l) X(r, (k - 1) + j * p + l) = d.x(i, l);
      } else {
        for (int l = 0; l < p; ++l) X(r, (k - 1) + l) = (k - 1 - j) * d.x(i, l);
      }
    }
  }

  // theta_bcl = C theta_acl: cumulative sums over logits j..k-2.
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(v, v);
  for (int j = 0; j < k - 1; ++j)
    for (int l = j; l < k - 1; ++l) C(j, l) = 1.0;
  if (npo) {
    for (int cov = 0; cov < p; ++cov)
      for (int j = 0; j < k - 1; ++j)
        for (int l = j; l < k - 1; ++l) C((k - 1) + j * p + cov, (k - 1) + l * p + cov) = 1.0;
  } else {
    for (int l = 0; l < p; ++l) C((k - 1) + l, (k - 1) + l) = 1.0;
  }
  // Inverse is first differences; exact in floating point (entries 0/±1).
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(v, v);
  for (int j = 0; j < k - 1; ++j) {
    D(j, j) = 1.0;
    if (j + 1 < k - 1) D(j, j + 1) = -1.0;
  }
  if (npo) {
    for (int cov = 0; cov < p; ++cov)
      for (int j = 0; j < k - 1; ++j) {
        D((k - 1) + j * p + cov, (k - 1) + j * p + cov) = 1.0;
        if (j + 1 < k - 1) D((k - 1) + j * p + cov, (k - 1) + (j + 1) * p + cov) = -1.0;
      }
  } else {
    for (int l = 0; l < p; ++l) D((k - 1) + l, (k - 1) + l) = 1.0;
  }

  mm.design_bcl_ = X;
  mm.design_acl_ = X * C;
  mm.C_ = C;
  mm.D_ = D;
  mm.names_acl_ = make_names(d, s.family, Parameterization::ACL);
  mm.names_bcl_ = make_names(d, s.family, Parameterization::BCL);

  // Rank check on the stacked design.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& sv = svd.singularValues();
  const double tol = 1e-10 * sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  if (rank < v) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    std::string dep;
    const auto& perm = qr.colsPermutation().indices();
    for (int i = rank; i < v; ++i) {
      if (!dep.empty()) dep += ", ";
      dep += mm.names_bcl_[perm[i]];
    }
    throw ModelError("design is rank deficient (rank " + std::to_string(rank) + " of " +
                     std::to_string(v) + "); dependent columns: " + dep);
  }
  return mm;
}

ModelMatrix ModelMatrix::reparameterized(const Eigen::MatrixXd& T) const {
  if (T.rows() != v || T.cols() != v) throw ModelError("reparameterized: T must be v x v");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
  if (!lu.isInvertible()) throw ModelError("reparameterized: T is singular");
  ModelMatrix out = *this;
  out.custom = true;
  out.design_bcl_ = design(reporting) * lu.inverse();
  out.design_acl_ = out.design_bcl_;
  out.C_ = Eigen::MatrixXd::Identity(v, v);
  out.D_ = out.C_;
  std::vector<std::string> nm;
  for (int t = 1; t <= v; ++t) nm.push_back("phi_" + std::to_string(t));
  out.names_acl_ = nm;
  out.names_bcl_ = std::move(nm);
  return out;
}

Eigen::MatrixXd ModelMatrix::block_for(const Eigen::VectorXd& xrow, Parameterization pz) const {
  if (xrow.size() != p) throw ModelError("covariate vector has wrong length");
  const bool npo = per_logit_slopes(spec.family);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k - 1, v);
  for (int j = 0; j < k - 1; ++j) {
    B(j, j) = 1.0;
    if (npo)
      for (int l = 0; l < p; ++l) B(j, (k - 1) + j * p + l) = xrow[l];
    else
      for (int l = 0; l < p; ++l) B(j, (k - 1) + l) = (k - 1 - j) * xrow[l];
  }
  return pz == Parameterization::BCL ? B : Eigen::MatrixXd(B * C_);
}

ParamVector ModelMatrix::make_params(const Eigen::VectorXd& values, Parameterization pz) const {
  if (values.size() != v) throw ModelError("parameter vector has wrong length");
  return ParamVector{values, pz, names(pz)};
}

ParamVector ModelMatrix::zero_params(Parameterization pz) const {
  return make_params(Eigen::VectorXd::Zero(v), pz);
}

ParamVector acl_from_bcl(const ParamVector& params, const ModelMatrix& mm) {
  if (params.param != Parameterization::BCL)
    throw ModelError("acl_from_bcl: parameter vector is not tagged BCL");
  return mm.make_params(mm.bcl_to_acl() * params.values, Parameterization::ACL);
}

ParamVector bcl_from_acl(const ParamVector& params, const ModelMatrix& mm) {
  if (params.param != Parameterization::ACL)
    throw ModelError("bcl_from_acl: parameter vector is not tagged ACL");
  return mm.make_params(mm.acl_to_bcl() * params.values, Parameterization::BCL);
}

ParamVector convert_params(const ParamVector& params, const ModelMatrix& mm, Parameterization to) {
  if (params.param == to) return params;
  return to == Parameterization::ACL ? acl_from_bcl(params, mm) : bcl_from_acl(params, mm);
}

Eigen::VectorXd probabilities_from_logits(const Eigen::VectorXd& eta) {
  const int km1 = static_cast<int>(eta.size());
  double mx = 0.0;  // reference logit is 0
  for (int j = 0; j < km1; ++j) mx = std::max(mx, eta[j]);
  double denom = std::exp(-mx);
  for (int j = 0; j < km1; ++j) denom += std::exp(eta[j] - mx);
  Eigen::VectorXd pi(km1 + 1);
  for (int j = 0; j < km1; ++j) pi[j] = std::exp(eta[j] - mx) / denom;
  pi[km1] = std::exp(-mx) / denom;
  return pi;
}

Eigen::MatrixXd fitted_probabilities(const ModelMatrix& mm, const Dataset& d,
                                     const ParamVector& theta) {
  const Eigen::VectorXd eta = mm.design(theta.param) * theta.values;
  Eigen::MatrixXd P(d.n(), mm.k);
  for (int i = 0; i < d.n(); ++i)
    P.row(i) = probabilities_from_logits(eta.segment(i * (mm.k - 1), mm.k - 1)).transpose();
  return P;
}

Eigen::VectorXd probabilities_at(const ModelMatrix& mm, const Eigen::VectorXd& xrow,
                                 const ParamVector& theta) {
  const Eigen::MatrixXd B = mm.block_for(xrow, theta.param);
  return probabilities_from_logits(B * theta.values);
}

}  // namespace brcat
