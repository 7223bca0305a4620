#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "brcat/dataset.hpp"

namespace brcat {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Response family. LogitBinomial is the k = 2 special case where all four
// coincide; AclPO shares one slope vector across the k-1 adjacent logits,
// AclNPO and BCL carry per-logit slopes.
enum class Family { LogitBinomial, BCL, AclPO, AclNPO };

// ACL: adjacent-category coefficients (alpha_j, beta). BCL: baseline-category
// coefficients (gamma_j, delta_j / zeta) with the last category as reference.
// The two are linked by an invertible linear map (cumulative sums one way,
// first differences the other).
enum class Parameterization { ACL, BCL };

struct ModelSpec {
  Family family = Family::AclPO;
};

std::string family_name(Family f);

struct ParamVector {
  Eigen::VectorXd values;
  Parameterization param = Parameterization::BCL;
  std::vector<std::string> names;

  int size() const { return static_cast<int>(values.size()); }
};

// Block design mapping a parameter vector to the k-1 baseline-category logits
// of each observation. Both parameterizations of the design are materialized;
// they differ by the ACL->BCL coefficient map C (design_acl = design_bcl * C).
class ModelMatrix {
 public:
  ModelSpec spec;
  int k = 0, p = 0, v = 0, n = 0;
  Parameterization reporting = Parameterization::ACL;

  const Eigen::MatrixXd& design(Parameterization pz) const {
    return pz == Parameterization::BCL ? design_bcl_ : design_acl_;
  }
  // Rows j..j+k-2 of the stacked design belong to observation i.
  Eigen::Block<const Eigen::MatrixXd> block(int i, Parameterization pz) const {
    return design(pz).middleRows(i * (k - 1), k - 1);
  }
  const Eigen::MatrixXd& acl_to_bcl() const { return C_; }  // theta_bcl = C theta_acl
  const Eigen::MatrixXd& bcl_to_acl() const { return D_; }  // theta_acl = D theta_bcl

  const std::vector<std::string>& names(Parameterization pz) const {
    return pz == Parameterization::BCL ? names_bcl_ : names_acl_;
  }

  // Design block for a single covariate vector (k-1 rows), in `pz` coordinates.
  Eigen::MatrixXd block_for(const Eigen::VectorXd& xrow, Parameterization pz) const;

  ParamVector make_params(const Eigen::VectorXd& values, Parameterization pz) const;
  ParamVector zero_params(Parameterization pz) const;

  // Model for phi = T theta, with theta in the reporting parameterization and
  // T invertible. The result is tagged custom: the ACL/BCL views no longer
  // apply and both designs coincide.
  ModelMatrix reparameterized(const Eigen::MatrixXd& T) const;
  bool custom = false;

  friend ModelMatrix build_model(const Dataset& d, const ModelSpec& s);

 private:
  Eigen::MatrixXd design_bcl_, design_acl_;
  Eigen::MatrixXd C_, D_;
  std::vector<std::string> names_acl_, names_bcl_;
};

// Builds the block design for d under s; checks family/k compatibility and
// full column rank (tolerance 1e-10 relative to the largest singular value).
ModelMatrix build_model(const Dataset& d, const ModelSpec& s);

ParamVector acl_from_bcl(const ParamVector& params, const ModelMatrix& mm);
ParamVector bcl_from_acl(const ParamVector& params, const ModelMatrix& mm);
ParamVector convert_params(const ParamVector& params, const ModelMatrix& mm, Parameterization to);

// Category probabilities from the k-1 baseline logits (reference logit 0).
Eigen::VectorXd probabilities_from_logits(const Eigen::VectorXd& eta);

// n x k matrix of fitted category probabilities.
Eigen::MatrixXd fitted_probabilities(const ModelMatrix& mm, const Dataset& d,
                                     const ParamVector& theta);

// Probabilities at one covariate setting.
Eigen::VectorXd probabilities_at(const ModelMatrix& mm, const Eigen::VectorXd& xrow,
                                 const ParamVector& theta);

}  // namespace brcat
