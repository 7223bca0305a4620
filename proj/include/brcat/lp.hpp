#pragma once

#include <Eigen/Dense>

namespace brcat {

struct LpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
};

// Maximize c'x subject to A x = b, 0 <= x <= upper (componentwise; upper may be
// +inf). `initial_basis` must index a nonsingular square submatrix of A whose
// basic solution, with every nonbasic variable at its lower bound, is feasible.
// Dense primal simplex with Bland's rule; throws on cycling-guard exhaustion or
// an unbounded ray.
LpResult solve_bounded_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, const Eigen::VectorXd& upper,
                          const Eigen::VectorXi& initial_basis, int max_iter = 20000);

}  // namespace brcat
