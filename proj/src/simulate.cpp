#include "brcat/simulate.hpp"

#include <cmath>

#include <json.hpp>

#include "brcat/inference.hpp"
#include "brcat/stats.hpp"

namespace brcat {

namespace {

// splitmix64: scrambles the per-replication seed into a full-period stream.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : s_(seed) {}

std::uint64_t Rng::next() { return splitmix64(s_); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

Dataset sample_responses(const ModelMatrix& mm, const Dataset& d_template,
                         const ParamVector& theta, Rng& rng) {
  const Eigen::MatrixXd P = fitted_probabilities(mm, d_template, theta);
  Dataset out = d_template;
  out.y.setZero();
  for (int i = 0; i < d_template.n(); ++i) {
    const int m = static_cast<int>(d_template.totals[i]);
    for (int t = 0; t < m; ++t) {
      double u = rng.uniform(), acc = 0.0;
      int cat = d_template.k() - 1;
      for (int j = 0; j < d_template.k(); ++j) {
        acc += P(i, j);
        if (u < acc) {
          cat = j;
          break;
        }
      }
      out.y(i, cat) += 1.0;
    }
  }
  out.validate();
  return out;
}

namespace {

struct Accumulator {
  std::vector<double> estimates;
  std::vector<bool> covered;  // only finite (estimate, se) pairs contribute
  int excluded = 0;
};

TargetSummary summarize(const std::string& name, double true_value, const Accumulator& acc,
                        int excluded) {
  TargetSummary s;
  s.name = name;
  s.true_value = true_value;
  const int R = static_cast<int>(acc.estimates.size());
  s.used = R;
  s.excluded = excluded;
  if (R == 0) return s;
  double mean = 0.0, under = 0.0;
  for (double e : acc.estimates) {
    mean += e;
    if (e < true_value) under += 1.0;
  }
  mean /= R;
  under /= R;
  double var = 0.0;
  for (double e : acc.estimates) var += (e - mean) * (e - mean);
  var /= std::max(1, R - 1);
  s.relative_bias_pct = 100.0 * (mean - true_value) / true_value;
  s.relative_bias_mcse_pct = 100.0 * std::sqrt(var / R) / std::fabs(true_value);
  s.underestimation_pct = 100.0 * under;
  s.underestimation_mcse_pct = 100.0 * std::sqrt(under * (1.0 - under) / R);
  int cov_n = static_cast<int>(acc.covered.size());
  if (cov_n > 0) {
    double cov = 0.0;
    for (bool c : acc.covered) cov += c ? 1.0 : 0.0;
    cov /= cov_n;
    s.coverage_pct = 100.0 * cov;
    s.coverage_mcse_pct = 100.0 * std::sqrt(cov * (1.0 - cov) / cov_n);
  }
  return s;
}

}  // namespace

BiasReport run_bias_study(const BiasStudyConfig& cfg, const ModelMatrix& mm,
                          const Dataset& d_template) {
  if (cfg.replications < 1) throw ModelError("bias study: replications must be >= 1");
  if (!cfg.gamma_targets.empty() && cfg.group_index < 0)
    throw ModelError("bias study: gamma targets need a group covariate");
  const Parameterization pz = mm.reporting;
  const ParamVector true_pv = mm.make_params(cfg.true_theta, pz);
  const double zq = normal_quantile(0.5 * (1.0 + cfg.ci_level));

  // True target values: plug-in measures at the data-generating parameter.
  std::vector<double> gamma_true;
  {
    FitResult at_truth;  // minimal shell for the superiority evaluator
    at_truth.method = Method::ML;
    at_truth.solved_in = pz;
    at_truth.estimate = cfg.true_theta;
    at_truth.vcov = Eigen::MatrixXd::Zero(mm.v, mm.v);
    at_truth.se = Eigen::VectorXd::Zero(mm.v);
    for (const auto& gt : cfg.gamma_targets) {
      SuperiorityResult s = superiority(at_truth, mm, d_template, gt.at, cfg.group_index, false);
      gamma_true.push_back(s.gamma);
    }
  }

  BiasReport report;
  report.replications = cfg.replications;
  report.seed = cfg.seed;
  report.ci_level = cfg.ci_level;

  for (Method method : cfg.methods) {
    MethodReport mr;
    mr.method = method;
    const int n_gamma = static_cast<int>(cfg.gamma_targets.size());
    const int n_coef = cfg.target_coefficients ? mm.v : 0;
    std::vector<Accumulator> acc(n_gamma + n_coef);

    for (int rep = 0; rep < cfg.replications; ++rep) {
      // Per-replication stream: seed xor replication index, then scrambled.
      Rng rng(cfg.seed ^ static_cast<std::uint64_t>(rep));
      Dataset sample = sample_responses(mm, d_template, true_pv, rng);
      FitOptions opts;
      opts.method = method;
      FitResult fr;
      try {
        fr = fit(mm, sample, opts);
      } catch (const std::exception&) {
        ++mr.fit_failures;
        continue;
      }
      // Boundary fits are excluded from every target summary, with counts
      // reported; their plug-in measures depend on where the iteration was
      // stopped rather than on the estimator being studied.
      const bool boundary = fr.any_divergence();
      for (int g = 0; g < n_gamma; ++g) {
        if (boundary) {
          ++acc[g].excluded;
          continue;
        }
        const bool corrected = (method == Method::MBR);
        SuperiorityResult s =
            superiority(fr, mm, sample, cfg.gamma_targets[g].at, cfg.group_index, corrected);
        const double est = corrected ? s.gamma_corrected : s.gamma;
        acc[g].estimates.push_back(est);
        if (std::isfinite(est) && std::isfinite(s.se_gamma) && s.se_gamma > 0.0)
          acc[g].covered.push_back(std::fabs(est - gamma_true[g]) <= zq * s.se_gamma);
      }
      if (cfg.target_coefficients) {
        if (boundary) {
          for (int t = 0; t < mm.v; ++t) ++acc[n_gamma + t].excluded;
        } else {
          for (int t = 0; t < mm.v; ++t) {
            acc[n_gamma + t].estimates.push_back(fr.estimate[t]);
            if (std::isfinite(fr.se[t]) && fr.se[t] > 0.0)
              acc[n_gamma + t].covered.push_back(std::fabs(fr.estimate[t] - cfg.true_theta[t]) <=
                                                 zq * fr.se[t]);
          }
        }
      }
    }

    for (int g = 0; g < n_gamma; ++g) {
      std::string nm = "gamma(";
      for (int l = 0; l < cfg.gamma_targets[g].at.size(); ++l) {
        if (l) nm += ",";
        if (l == cfg.group_index) {
          nm += "z";
        } else {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%g", cfg.gamma_targets[g].at[l]);
          nm += buf;
        }
      }
      nm += ")";
      mr.targets.push_back(summarize(nm, gamma_true[g], acc[g], acc[g].excluded));
    }
    if (cfg.target_coefficients)
      for (int t = 0; t < mm.v; ++t)
        mr.targets.push_back(summarize(mm.names(pz)[t], cfg.true_theta[t], acc[n_gamma + t],
                                       acc[n_gamma + t].excluded));
    report.methods.push_back(std::move(mr));
  }
  return report;
}

namespace {

Method method_from_string(const std::string& s) {
  if (s == "ml") return Method::ML;
  if (s == "mbr") return Method::MBR;
  if (s == "mdbr") return Method::MdBR;
  throw ModelError("unknown method '" + s + "'");
}

}  // namespace

std::string bias_config_to_json(const BiasStudyConfig& cfg) {
  nlohmann::json j;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["ci_level"] = cfg.ci_level;
  j["true_theta"] = std::vector<double>(cfg.true_theta.data(),
                                        cfg.true_theta.data() + cfg.true_theta.size());
  std::vector<std::string> ms;
  for (Method m : cfg.methods) ms.push_back(method_name(m));
  j["methods"] = ms;
  j["target_coefficients"] = cfg.target_coefficients;
  j["group_index"] = cfg.group_index;
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& gt : cfg.gamma_targets)
    targets.push_back({{"at", std::vector<double>(gt.at.data(), gt.at.data() + gt.at.size())}});
  j["gamma_targets"] = targets;
  return j.dump(2);
}

BiasStudyConfig bias_config_from_json(const std::string& text, const ModelMatrix& mm) {
  nlohmann::json j = nlohmann::json::parse(text);
  BiasStudyConfig cfg;
  cfg.replications = j.at("replications").get<int>();
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.ci_level = j.value("ci_level", 0.95);
  auto th = j.at("true_theta").get<std::vector<double>>();
  if (static_cast<int>(th.size()) != mm.v)
    throw ModelError("bias config: true_theta length " + std::to_string(th.size()) +
                     " does not match model dimension " + std::to_string(mm.v));
  cfg.true_theta = Eigen::Map<Eigen::VectorXd>(th.data(), th.size());
  cfg.methods.clear();
  for (const auto& s : j.value("methods", std::vector<std::string>{"ml", "mbr"}))
    cfg.methods.push_back(method_from_string(s));
  cfg.target_coefficients = j.value("target_coefficients", false);
  cfg.group_index = j.value("group_index", -1);
  if (j.contains("gamma_targets"))
    for (const auto& t : j.at("gamma_targets")) {
      auto at = t.at("at").get<std::vector<double>>();
      cfg.gamma_targets.push_back({Eigen::Map<Eigen::VectorXd>(at.data(), at.size())});
    }
  return cfg;
}

std::string bias_report_to_json(const BiasReport& rep) {
  nlohmann::json j;
  j["replications"] = rep.replications;
  j["seed"] = rep.seed;
  j["ci_level"] = rep.ci_level;
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& mr : rep.methods) {
    nlohmann::json jm;
    jm["method"] = method_name(mr.method);
    jm["fit_failures"] = mr.fit_failures;
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : mr.targets) {
      ts.push_back({{"target", t.name},
                    {"true_value", t.true_value},
                    {"relative_bias_pct", t.relative_bias_pct},
                    {"relative_bias_mcse_pct", t.relative_bias_mcse_pct},
                    {"underestimation_pct", t.underestimation_pct},
                    {"underestimation_mcse_pct", t.underestimation_mcse_pct},
                    {"coverage_pct", t.coverage_pct},
                    {"coverage_mcse_pct", t.coverage_mcse_pct},
                    {"used", t.used},
                    {"excluded", t.excluded}});
    }
    jm["targets"] = ts;
    methods.push_back(jm);
  }
  j["methods"] = methods;
  return j.dump(2);
}

}  // namespace brcat
