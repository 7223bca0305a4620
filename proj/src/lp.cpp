#include "brcat/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace brcat {

namespace {
constexpr double kTol = 1e-9;
}

LpResult solve_bounded_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c, const Eigen::VectorXd& upper,
                          const Eigen::VectorXi& initial_basis, int max_iter) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<int> basis(initial_basis.data(), initial_basis.data() + initial_basis.size());
  if (static_cast<int>(basis.size()) != m) throw std::invalid_argument("lp: basis size != rows");

  // -1: basic, 0: nonbasic at lower bound, 1: nonbasic at upper bound.
  std::vector<int> status(n, 0);
  for (int j : basis) status[j] = -1;

  Eigen::MatrixXd B(m, m);
  Eigen::VectorXd xB(m);

  auto refactor = [&](Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
    for (int i = 0; i < m; ++i) B.col(i) = A.col(basis[i]);
    lu.compute(B);
  };

  auto basic_solution = [&](const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
    Eigen::VectorXd rhs = b;
    for (int j = 0; j < n; ++j)
      if (status[j] == 1) rhs -= A.col(j) * upper[j];
    xB = lu.solve(rhs);
  };

  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  refactor(lu);
  basic_solution(lu);
  for (int i = 0; i < m; ++i)
    if (xB[i] < -1e-7 || xB[i] > upper[basis[i]] + 1e-7)
      throw std::invalid_argument("lp: initial basis not feasible");

  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd cB(m);
    for (int i = 0; i < m; ++i) cB[i] = c[basis[i]];
    Eigen::VectorXd y = lu.transpose().solve(cB);

    // Entering variable: Bland's rule, smallest index first.
    int enter = -1, dir = 0;
    for (int j = 0; j < n; ++j) {
      if (status[j] == -1) continue;
      const double dj = c[j] - y.dot(A.col(j));
      if (status[j] == 0 && dj > kTol) {
        enter = j;
        dir = 1;
        break;
      }
      if (status[j] == 1 && dj < -kTol) {
        enter = j;
        dir = -1;
        break;
      }
    }
    if (enter < 0) break;  // optimal

    // Moving the entering variable by t*dir changes basics by -t*dir*d.
    Eigen::VectorXd d = lu.solve(A.col(enter));
    double tmax = std::isfinite(upper[enter]) ? upper[enter] : inf;
    int leave = -1;  // row index in basis; -1 means entering hits its own bound
    for (int i = 0; i < m; ++i) {
      const double delta = -dir * d[i];
      double limit = inf;
      if (delta < -kTol)
        limit = xB[i] / (-delta);
      else if (delta > kTol && std::isfinite(upper[basis[i]]))
        limit = (upper[basis[i]] - xB[i]) / delta;
      if (limit < tmax - kTol || (limit < tmax + kTol && leave >= 0 && basis[i] < basis[leave])) {
        tmax = std::max(limit, 0.0);
        leave = i;
      }
    }
    if (!std::isfinite(tmax)) throw std::runtime_error("lp: unbounded objective");

    if (leave < 0) {
      status[enter] = (dir > 0) ? 1 : 0;  // bound flip
    } else {
      const int out = basis[leave];
      const double delta = -dir * d[leave];
      status[out] = (delta < 0) ? 0 : 1;
      basis[leave] = enter;
      status[enter] = -1;
      refactor(lu);
    }
    basic_solution(lu);
    if (iter + 1 == max_iter) throw std::runtime_error("lp: cycling guard exceeded");
  }

  LpResult res;
  res.x = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j)
    if (status[j] == 1) res.x[j] = upper[j];
  for (int i = 0; i < m; ++i) res.x[basis[i]] = std::max(0.0, xB[i]);
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace brcat
