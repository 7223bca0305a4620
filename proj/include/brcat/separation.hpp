#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "brcat/model.hpp"

namespace brcat {

enum class SeparationStatus { Overlap, QuasiComplete, Complete };

std::string separation_status_name(SeparationStatus s);

struct SeparationReport {
  SeparationStatus status = SeparationStatus::Overlap;
  // Direction of likelihood non-decrease in the reporting parameterization,
  // sup-norm 1; absent under overlap.
  std::optional<Eigen::VectorXd> separating_direction;
  // Per reporting parameter: 0 finite, +1 diverging to +inf, -1 to -inf.
  std::vector<int> infinite_components;
};

// Linear-program separation check. A direction b separates the data when, for
// every observation and every observed-versus-other category pair, the logit
// margin along b is nonnegative; strict margins everywhere mean complete
// separation, a mix means quasi-complete. The reported direction is taken in
// the relative interior of the feasible cone so that every component that can
// diverge is flagged.
SeparationReport detect_separation(const ModelMatrix& mm, const Dataset& d);

// Haldane-corrected adjacent logits log{(y_j + 1/2)/(y_{j+1} + 1/2)}; finite
// for every nonnegative count vector.
Eigen::VectorXd empirical_adjacent_logits(const Eigen::VectorXd& counts);

}  // namespace brcat
