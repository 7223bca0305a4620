#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "brcat/fit.hpp"
#include "brcat/model.hpp"

namespace brcat {

// Deterministic 64-bit stream; uniforms are built from the raw engine output
// so draws are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  double uniform();  // [0, 1)
  std::uint64_t next();

 private:
  std::uint64_t s_;
};

// Multinomial responses drawn row by row with the template's covariates and
// totals, at the given parameter value.
Dataset sample_responses(const ModelMatrix& mm, const Dataset& d_template,
                         const ParamVector& theta, Rng& rng);

struct GammaTarget {
  Eigen::VectorXd at;  // covariate setting (group slot ignored)
};

struct BiasStudyConfig {
  int replications = 2000;
  Eigen::VectorXd true_theta;  // reporting parameterization
  std::vector<Method> methods = {Method::ML, Method::MBR};
  bool target_coefficients = false;
  std::vector<GammaTarget> gamma_targets;
  int group_index = -1;  // required when gamma targets are present
  std::uint64_t seed = 1;
  double ci_level = 0.95;
};

struct TargetSummary {
  std::string name;
  double true_value = 0.0;
  double relative_bias_pct = 0.0, relative_bias_mcse_pct = 0.0;
  double underestimation_pct = 0.0, underestimation_mcse_pct = 0.0;
  double coverage_pct = 0.0, coverage_mcse_pct = 0.0;
  int used = 0;      // replications entering bias/underestimation
  int excluded = 0;  // divergent replications excluded for coefficient targets
};

struct MethodReport {
  Method method = Method::ML;
  std::vector<TargetSummary> targets;
  int fit_failures = 0;  // replications where the fit errored; never silently dropped
};

struct BiasReport {
  int replications = 0;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  std::vector<MethodReport> methods;
};

// scoring fits of each method on each simulated sample; gamma targets use the
// plug-in estimate for ML/median-BR and the bias-corrected one for mean-BR,
// with delta-method Wald intervals at ci_level.
BiasReport run_bias_study(const BiasStudyConfig& cfg, const ModelMatrix& mm,
                          const Dataset& d_template);

std::string bias_config_to_json(const BiasStudyConfig& cfg);
BiasStudyConfig bias_config_from_json(const std::string& text, const ModelMatrix& mm);
std::string bias_report_to_json(const BiasReport& rep);

}  // namespace brcat
