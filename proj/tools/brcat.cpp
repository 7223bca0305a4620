// Command-line front end: fit bias-reduced categorical regressions, run
// separation diagnostics, Wald tests, ordinal superiority measures, empirical
// logits, and simulation studies. Exit codes: 0 success (including fits with
// divergence annotations), 2 input/data error, 3 numerical failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "brcat/fit.hpp"
#include "brcat/inference.hpp"
#include "brcat/separation.hpp"
#include "brcat/simulate.hpp"
#include "brcat/stats.hpp"

using namespace brcat;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string data_path;
  std::string family = "acl-po";
  std::string method = "mbr";
  std::vector<std::string> covariates;
  std::vector<std::string> counts;
  std::string label_column;
  std::vector<std::string> categories;
  double tol = 1e-8;
  int max_iter = 100;
  std::string json_path;
  std::string engine = "scoring";
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_method = true) {
  cmd->add_option("--data", a.data_path, "CSV file (RFC 4180, header row)")->required();
  cmd->add_option("--family", a.family, "logit | bcl | acl-po | acl-npo")
      ->check(CLI::IsMember({"logit", "bcl", "acl-po", "acl-npo"}));
  if (with_method)
    cmd->add_option("--method", a.method, "ml | mbr | mdbr")
        ->check(CLI::IsMember({"ml", "mbr", "mdbr"}));
  cmd->add_option("--covariates", a.covariates, "covariate column names")->delimiter(',');
  cmd->add_option("--counts", a.counts, "count column names (wide format)")->delimiter(',');
  cmd->add_option("--label", a.label_column, "response label column (long format)");
  cmd->add_option("--categories", a.categories, "category order for long format")->delimiter(',');
  cmd->add_option("--tol", a.tol, "estimating-function sup-norm tolerance");
  cmd->add_option("--max-iter", a.max_iter, "iteration cap");
  cmd->add_option("--json", a.json_path, "write machine-readable results here");
  cmd->add_option("--engine", a.engine, "scoring | poisson (mbr only)")
      ->check(CLI::IsMember({"scoring", "poisson"}));
}

Family parse_family(const std::string& s) {
  if (s == "logit") return Family::LogitBinomial;
  if (s == "bcl") return Family::BCL;
  if (s == "acl-po") return Family::AclPO;
  return Family::AclNPO;
}

Method parse_method(const std::string& s) {
  if (s == "ml") return Method::ML;
  if (s == "mdbr") return Method::MdBR;
  return Method::MBR;
}

Dataset load_data(const CommonArgs& a) {
  CsvSchema schema;
  schema.covariate_columns = a.covariates;
  schema.count_columns = a.counts;
  schema.label_column = a.label_column;
  schema.categories = a.categories;
  return load_dataset(a.data_path, schema);
}

FitOptions make_options(const CommonArgs& a) {
  FitOptions opts;
  opts.method = parse_method(a.method);
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  return opts;
}

FitResult run_fit(const ModelMatrix& mm, const Dataset& d, const CommonArgs& a) {
  FitOptions opts = make_options(a);
  if (a.engine == "poisson") {
    if (opts.method != Method::MBR)
      throw ModelError("--engine poisson applies to --method mbr only");
    return fit_mbr_poisson(mm, d, opts);
  }
  return fit(mm, d, opts);
}

json fit_to_json(const FitResult& r) {
  json j;
  j["method"] = method_name(r.method);
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["estimating_fn_norm"] = r.estimating_fn_norm;
  j["loglik"] = r.loglik;
  j["loglik_kernel"] = r.loglik_kernel;
  j["objective"] = r.objective;
  json rows = json::array();
  for (const auto& zr : z_table(r))
    rows.push_back({{"name", zr.name},
                    {"estimate", zr.estimate},
                    {"se", zr.se},
                    {"z", zr.z},
                    {"p", zr.p},
                    {"divergence", zr.divergence}});
  j["parameters"] = rows;
  json vc = json::array();
  for (int i = 0; i < r.vcov.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < r.vcov.cols(); ++c) row.push_back(r.vcov(i, c));
    vc.push_back(row);
  }
  j["vcov"] = vc;
  if (r.theta_bcl) {
    j["estimate_bcl"] = std::vector<double>(r.theta_bcl->values.data(),
                                            r.theta_bcl->values.data() + r.theta_bcl->size());
  }
  return j;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

void print_fit(const FitResult& r) {
  std::printf("method: %s  converged: %s  iterations: %d  |U|_inf: %.3g\n",
              method_name(r.method).c_str(), r.converged ? "yes" : "no", r.iterations,
              r.estimating_fn_norm);
  std::printf("log-likelihood: %.2f", r.loglik);
  if (r.method == Method::MBR) std::printf("  penalized objective: %.4f", r.objective);
  std::printf("\n\n%-14s %10s %10s %8s %8s\n", "parameter", "estimate", "s.e.", "z", "p");
  for (const auto& zr : z_table(r)) {
    std::printf("%-14s %10.2f %10.2f %8.2f %8.3f", zr.name.c_str(), zr.estimate, zr.se, zr.z,
                zr.p);
    if (zr.divergence != 0)
      std::printf("   estimate diverges to %s", zr.divergence > 0 ? "+inf" : "-inf");
    std::printf("\n");
  }
}

Eigen::MatrixXd read_contrast(const std::string& path, int v) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open contrast file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    double x;
    while (ss >> x) row.push_back(x);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("contrast file is empty");
  Eigen::MatrixXd C(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != C.cols())
      throw ParseError("contrast file has ragged rows");
    for (int c = 0; c < C.cols(); ++c) C(i, c) = rows[i][c];
  }
  if (C.cols() != v)
    throw ModelError("contrast has " + std::to_string(C.cols()) + " columns; model has " +
                     std::to_string(v));
  return C;
}

std::optional<double> named_value(const std::vector<std::string>& settings,
                                  const std::string& name) {
  for (const auto& s : settings) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("--at expects name=value, got '" + s + "'");
    if (s.substr(0, eq) == name) return std::stod(s.substr(eq + 1));
  }
  return std::nullopt;
}

int column_of(const Dataset& d, const std::string& name) {
  for (int l = 0; l < d.p(); ++l)
    if (d.covariate_names[l] == name) return l;
  throw ParseError("unknown covariate '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bias-reduced estimation for categorical response models"};
  app.require_subcommand(1);

  CommonArgs fit_args, wald_args, sup_args, det_args, logit_args, sim_args;

  auto* cmd_fit = app.add_subcommand("fit", "fit a model and print the coefficient table");
  add_common(cmd_fit, fit_args);

  auto* cmd_wald = app.add_subcommand("wald", "Wald test of a linear contrast");
  add_common(cmd_wald, wald_args);
  std::string contrast = "parallel";
  cmd_wald->add_option("--contrast", contrast,
                       "'parallel' (equal per-logit slopes) or a file with a q x v matrix");

  auto* cmd_sup = app.add_subcommand("superiority", "ordinal superiority measures");
  add_common(cmd_sup, sup_args);
  std::string group_col;
  std::vector<std::string> at_settings;
  bool summary = false, corrected = false;
  cmd_sup->add_option("--group", group_col, "0/1 group covariate column")->required();
  cmd_sup->add_option("--at", at_settings, "covariate setting name=value")->delimiter(',');
  cmd_sup->add_flag("--summary", summary, "average over the dataset's covariate settings");
  cmd_sup->add_flag("--corrected", corrected, "subtract the first-order bias (mbr fits)");

  auto* cmd_detect = app.add_subcommand("detect", "data separation diagnostic");
  add_common(cmd_detect, det_args, false);

  auto* cmd_logits = app.add_subcommand("logits", "Haldane-corrected empirical adjacent logits");
  add_common(cmd_logits, logit_args, false);

  auto* cmd_sim = app.add_subcommand("simulate", "bias/coverage study from a JSON config");
  add_common(cmd_sim, sim_args);
  std::string config_path;
  std::uint64_t seed_override = 0;
  cmd_sim->add_option("--config", config_path, "study configuration JSON")->required();
  auto* seed_opt = cmd_sim->add_option("--seed", seed_override, "override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (cmd_fit->parsed()) {
      Dataset d = load_data(fit_args);
      ModelMatrix mm = build_model(d, {parse_family(fit_args.family)});
      FitResult r = run_fit(mm, d, fit_args);
      print_fit(r);
      write_json(fit_args.json_path, fit_to_json(r));
    } else if (cmd_wald->parsed()) {
      Dataset d = load_data(wald_args);
      ModelMatrix mm = build_model(d, {parse_family(wald_args.family)});
      FitResult r = run_fit(mm, d, wald_args);
      Eigen::MatrixXd C = (contrast == "parallel") ? parallel_contrast(mm.k, mm.p)
                                                   : read_contrast(contrast, mm.v);
      WaldReport w = wald_test(r, C);
      const double q95 = chisq_quantile(0.95, w.df);
      std::printf("W = %.4f  df = %d  p = %.4f  (chi-square 95%% quantile: %.3f)\n", w.statistic,
                  w.df, w.p_value, q95);
      json j{{"W", w.statistic}, {"df", w.df}, {"p", w.p_value}, {"chisq_q95", q95}};
      write_json(wald_args.json_path, j);
    } else if (cmd_sup->parsed()) {
      Dataset d = load_data(sup_args);
      ModelMatrix mm = build_model(d, {parse_family(sup_args.family)});
      FitResult r = run_fit(mm, d, sup_args);
      const int g = column_of(d, group_col);
      SuperiorityResult s;
      if (summary) {
        s = summary_superiority(r, mm, d, g, corrected);
      } else {
        Eigen::VectorXd at = Eigen::VectorXd::Zero(d.p());
        for (int l = 0; l < d.p(); ++l)
          if (l != g)
            if (auto val = named_value(at_settings, d.covariate_names[l])) at[l] = *val;
        s = superiority(r, mm, d, at, g, corrected);
      }
      std::printf("%-12s %10s\n", "measure", "value");
      std::printf("%-12s %10.4f\n", "delta", s.delta);
      std::printf("%-12s %10.4f\n", "gamma", s.gamma);
      std::printf("%-12s %10.4f\n", "se(delta)", s.se_delta);
      std::printf("%-12s %10.4f\n", "se(gamma)", s.se_gamma);
      if (corrected) {
        std::printf("%-12s %10.4f\n", "B*", s.b_star);
        std::printf("%-12s %10.4f\n", "delta*", s.delta_corrected);
        std::printf("%-12s %10.4f\n", "gamma*", s.gamma_corrected);
      }
      json j{{"delta", s.delta},
             {"gamma", s.gamma},
             {"se_delta", s.se_delta},
             {"se_gamma", s.se_gamma},
             {"corrected", s.corrected},
             {"b_star", s.b_star},
             {"delta_corrected", s.delta_corrected},
             {"gamma_corrected", s.gamma_corrected}};
      write_json(sup_args.json_path, j);
    } else if (cmd_detect->parsed()) {
      Dataset d = load_data(det_args);
      ModelMatrix mm = build_model(d, {parse_family(det_args.family)});
      SeparationReport rep = detect_separation(mm, d);
      std::printf("separation: %s\n", separation_status_name(rep.status).c_str());
      json comps = json::array();
      const auto& names = mm.names(mm.reporting);
      for (int t = 0; t < mm.v; ++t) {
        const char* s = rep.infinite_components[t] > 0   ? "+inf"
                        : rep.infinite_components[t] < 0 ? "-inf"
                                                         : "finite";
        if (rep.infinite_components[t] != 0) std::printf("  %s -> %s\n", names[t].c_str(), s);
        comps.push_back({{"name", names[t]}, {"limit", s}});
      }
      json j{{"status", separation_status_name(rep.status)}, {"components", comps}};
      write_json(det_args.json_path, j);
    } else if (cmd_logits->parsed()) {
      Dataset d = load_data(logit_args);
      std::printf("%-24s", "covariates");
      for (int j = 0; j + 1 < d.k(); ++j)
        std::printf(" logit(%s/%s)", d.category_labels[j].c_str(),
                    d.category_labels[j + 1].c_str());
      std::printf("\n");
      json rows = json::array();
      for (int i = 0; i < d.n(); ++i) {
        std::string cov;
        for (int l = 0; l < d.p(); ++l) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%s%g", l ? "," : "", d.x(i, l));
          cov += buf;
        }
        Eigen::VectorXd el = empirical_adjacent_logits(d.y.row(i).transpose());
        std::printf("%-24s", cov.c_str());
        json jr = json::array();
        for (int j = 0; j < el.size(); ++j) {
          std::printf(" %12.4f", el[j]);
          jr.push_back(el[j]);
        }
        std::printf("\n");
        rows.push_back({{"covariates", cov}, {"logits", jr}});
      }
      write_json(logit_args.json_path, json{{"rows", rows}});
    } else if (cmd_sim->parsed()) {
      Dataset d = load_data(sim_args);
      ModelMatrix mm = build_model(d, {parse_family(sim_args.family)});
      std::ifstream cfg_in(config_path);
      if (!cfg_in) throw ParseError("cannot open config '" + config_path + "'");
      std::stringstream buf;
      buf << cfg_in.rdbuf();
      BiasStudyConfig cfg = bias_config_from_json(buf.str(), mm);
      if (seed_opt->count() > 0) cfg.seed = seed_override;
      BiasReport rep = run_bias_study(cfg, mm, d);
      const std::string out = bias_report_to_json(rep);
      std::printf("%s\n", out.c_str());
      if (!sim_args.json_path.empty()) {
        std::ofstream o(sim_args.json_path);
        o << out << "\n";
      }
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ModelError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FitError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const SingularInfoError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
