#include "brcat/separation.hpp"

#include <cmath>
#include <limits>

#include "brcat/lp.hpp"

namespace brcat {

std::string separation_status_name(SeparationStatus s) {
  switch (s) {
    case SeparationStatus::Overlap: return "overlap";
    case SeparationStatus::QuasiComplete: return "quasi-complete";
    case SeparationStatus::Complete: return "complete";
  }
  return "?";
}

namespace {

// Margin rows in BCL direction coordinates: one per (observation, observed
// category j, other category l). The reference category contributes a zero
// logit row.
Eigen::MatrixXd margin_rows(const ModelMatrix& mm, const Dataset& d) {
  const int km1 = mm.k - 1, v = mm.v;
  std::vector<Eigen::RowVectorXd> rows;
  for (int i = 0; i < d.n(); ++i) {
    Eigen::MatrixXd Bext = Eigen::MatrixXd::Zero(mm.k, v);
    Bext.topRows(km1) = mm.block(i, Parameterization::BCL);
    for (int j = 0; j < mm.k; ++j) {
      if (d.y(i, j) <= 0.0) continue;
      for (int l = 0; l < mm.k; ++l)
        if (l != j) rows.push_back(Bext.row(j) - Bext.row(l));
    }
  }
  Eigen::MatrixXd A(static_cast<int>(rows.size()), v);
  for (size_t r = 0; r < rows.size(); ++r) A.row(static_cast<int>(r)) = rows[r];
  return A;
}

Eigen::VectorXd margins_of(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) { return A * b; }

// max sum of per-margin slacks s_c subject to margin_c(b) - s_c - w_c = 0,
// |b| <= 1 componentwise, 0 <= s_c, w_c <= cap_c. Positive optimum <=>
// a feasible direction with some strictly positive margin exists.
struct PhaseOne {
  double objective;
  Eigen::VectorXd direction;
};

PhaseOne phase_one(const Eigen::MatrixXd& A) {
  const int C = static_cast<int>(A.rows()), v = static_cast<int>(A.cols());
  const int nvar = 2 * v + 2 * C;  // b+, b-, s, w
  Eigen::MatrixXd M(C, nvar);
  M << A, -A, -Eigen::MatrixXd::Identity(C, C), -Eigen::MatrixXd::Identity(C, C);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nvar);
  c.segment(2 * v, C).setOnes();
  Eigen::VectorXd ub(nvar);
  ub.head(2 * v).setOnes();
  for (int i = 0; i < C; ++i) {
    const double cap = A.row(i).lpNorm<1>() + 1.0;
    ub[2 * v + i] = cap;
    ub[2 * v + C + i] = cap;
  }
  Eigen::VectorXi basis(C);
  for (int i = 0; i < C; ++i) basis[i] = 2 * v + C + i;
  LpResult res = solve_bounded_lp(M, rhs, c, ub, basis);
  return {res.objective, res.x.head(v) - res.x.segment(v, v)};
}

// max margin_c0(b) over the feasible cone (all margins >= 0, |b| <= 1).
Eigen::VectorXd maximize_margin(const Eigen::MatrixXd& A, int c0, double* objective) {
  const int C = static_cast<int>(A.rows()), v = static_cast<int>(A.cols());
  const int nvar = 2 * v + C;  // b+, b-, w (w_c = margin_c)
  Eigen::MatrixXd M(C, nvar);
  M << A, -A, -Eigen::MatrixXd::Identity(C, C);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nvar);
  c[2 * v + c0] = 1.0;
  Eigen::VectorXd ub(nvar);
  ub.head(2 * v).setOnes();
  for (int i = 0; i < C; ++i) ub[2 * v + i] = A.row(i).lpNorm<1>() + 1.0;
  Eigen::VectorXi basis(C);
  for (int i = 0; i < C; ++i) basis[i] = 2 * v + i;
  LpResult res = solve_bounded_lp(M, rhs, c, ub, basis);
  *objective = res.objective;
  return res.x.head(v) - res.x.segment(v, v);
}

// max t subject to margin_c(b) >= t for all c, |b| <= 1.
double max_min_margin(const Eigen::MatrixXd& A) {
  const int C = static_cast<int>(A.rows()), v = static_cast<int>(A.cols());
  const int nvar = 2 * v + 1 + C;  // b+, b-, t, w
  Eigen::MatrixXd M(C, nvar);
  M << A, -A, -Eigen::VectorXd::Ones(C), -Eigen::MatrixXd::Identity(C, C);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nvar);
  c[2 * v] = 1.0;
  double cap = 1.0;
  for (int i = 0; i < C; ++i) cap = std::max(cap, A.row(i).lpNorm<1>() + 1.0);
  Eigen::VectorXd ub(nvar);
  ub.head(2 * v).setOnes();
  ub[2 * v] = cap;
  for (int i = 0; i < C; ++i) ub[2 * v + 1 + i] = cap;
  Eigen::VectorXi basis(C);
  for (int i = 0; i < C; ++i) basis[i] = 2 * v + 1 + i;
  return solve_bounded_lp(M, rhs, c, ub, basis).objective;
}

}  // namespace

SeparationReport detect_separation(const ModelMatrix& mm, const Dataset& d) {
  const Eigen::MatrixXd A = margin_rows(mm, d);
  const int v = mm.v;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double tol = 1e-7 * scale;

  SeparationReport rep;
  rep.infinite_components.assign(v, 0);

  PhaseOne p1 = phase_one(A);
  if (p1.objective <= tol) return rep;  // overlap

  // Move the direction into the relative interior of the feasible cone: every
  // margin that can be strictly positive should be strictly positive, so that
  // no divergent component is masked by a vertex solution.
  Eigen::VectorXd dir = p1.direction;
  if (dir.lpNorm<Eigen::Infinity>() > 0) dir /= dir.lpNorm<Eigen::Infinity>();
  Eigen::VectorXd marg = margins_of(A, dir);
  for (int c0 = 0; c0 < A.rows(); ++c0) {
    if (marg[c0] > tol) continue;
    double obj = 0.0;
    Eigen::VectorXd extra = maximize_margin(A, c0, &obj);
    if (obj > tol) {
      extra /= std::max(1.0, extra.lpNorm<Eigen::Infinity>());
      dir += extra;
      marg = margins_of(A, dir);
    }
  }
  dir /= dir.lpNorm<Eigen::Infinity>();

  const double tstar = max_min_margin(A);
  rep.status = (tstar > tol) ? SeparationStatus::Complete : SeparationStatus::QuasiComplete;

  Eigen::VectorXd dir_rep =
      (mm.reporting == Parameterization::ACL) ? Eigen::VectorXd(mm.bcl_to_acl() * dir) : dir;
  const double dscale = dir_rep.lpNorm<Eigen::Infinity>();
  for (int t = 0; t < v; ++t)
    if (std::fabs(dir_rep[t]) > 1e-6 * dscale) rep.infinite_components[t] = dir_rep[t] > 0 ? 1 : -1;
  rep.separating_direction = dir_rep / dscale;
  return rep;
}

Eigen::VectorXd empirical_adjacent_logits(const Eigen::VectorXd& counts) {
  const int k = static_cast<int>(counts.size());
  if (k < 2) throw ModelError("empirical_adjacent_logits: need at least 2 counts");
  Eigen::VectorXd out(k - 1);
  for (int j = 0; j + 1 < k; ++j)
    out[j] = std::log((counts[j] + 0.5) / (counts[j + 1] + 0.5));
  return out;
}

}  // namespace brcat
