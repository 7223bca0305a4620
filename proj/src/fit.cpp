#include "brcat/fit.hpp"

#include <cmath>
#include <limits>

namespace brcat {

std::string method_name(Method m) {
  switch (m) {
    case Method::ML: return "ml";
    case Method::MBR: return "mbr";
    case Method::MdBR: return "mdbr";
  }
  return "?";
}

bool FitResult::any_divergence() const {
  for (int f : divergence_flags)
    if (f != 0) return true;
  return false;
}

ParamVector FitResult::params() const { return ParamVector{estimate, solved_in, names}; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Eval {
  Eigen::VectorXd U;      // estimating function
  double norm = 0.0;      // sup-norm of U
  double objective = 0.0; // monitored objective (kernel-based); NaN for mdBR
  double loglik = 0.0;    // kernel log-likelihood
  Eigen::MatrixXd info;
};

Eval evaluate(const ModelMatrix& mm, const Dataset& d, const Eigen::VectorXd& theta,
              Parameterization pz, Method method) {
  const ParamVector pv{theta, pz, {}};
  Eval e;
  e.loglik = log_likelihood(mm, d, pv);
  e.U = score(mm, d, pv);
  e.info = expected_info_matrix(mm, d, pv);
  if (method == Method::ML) {
    e.objective = e.loglik;
  } else if (method == Method::MBR) {
    InfoMatrix im(e.info);
    e.U += mean_adjustment(mm, d, pv);
    e.objective = e.loglik + 0.5 * im.log_det();  // log_det throws if singular
  } else {
    AdjustmentTerms terms = adjustment_terms(mm, d, pv);
    e.U += terms.A - terms.modification;
    e.objective = kNaN;  // no scalar objective exists beyond one parameter
  }
  e.norm = e.U.lpNorm<Eigen::Infinity>();
  return e;
}

// Divergent boundary fits: the objective has plateaued (three successive
// changes below tol) while some coefficients passed the threshold.
std::vector<int> classify_divergence(const std::vector<IterationRecord>& trace,
                                     const Eigen::VectorXd& theta, double tol, double threshold) {
  const size_t m = trace.size();
  if (m < 4) return {};
  for (size_t s = m - 3; s < m; ++s)
    if (!(std::fabs(trace[s].objective - trace[s - 1].objective) < tol)) return {};
  std::vector<int> flags(theta.size(), 0);
  bool any = false;
  for (int t = 0; t < theta.size(); ++t)
    if (std::fabs(theta[t]) > threshold) {
      flags[t] = theta[t] > 0 ? 1 : -1;
      any = true;
    }
  return any ? flags : std::vector<int>{};
}

FitResult finalize(const ModelMatrix& mm, const Dataset& d, const Eigen::VectorXd& theta,
                   Parameterization pz, const FitOptions& opts, bool converged,
                   std::vector<int> flags, std::vector<IterationRecord> trace, double norm,
                   double objective, int iterations) {
  FitResult r;
  r.spec = mm.spec;
  r.method = opts.method;
  r.solved_in = pz;
  r.estimate = theta;
  r.names = mm.names(pz);
  const ParamVector pv = mm.make_params(theta, pz);
  if (!mm.custom) {
    r.theta_acl = convert_params(pv, mm, Parameterization::ACL);
    r.theta_bcl = convert_params(pv, mm, Parameterization::BCL);
  }
  InfoMatrix info = expected_info(mm, d, pv);
  r.vcov = info.inverse();
  r.se = r.vcov.diagonal().array().sqrt();
  r.converged = converged;
  r.iterations = iterations;
  r.estimating_fn_norm = norm;
  r.objective = objective;
  r.loglik_kernel = log_likelihood(mm, d, pv);
  r.loglik = r.loglik_kernel + log_multinomial_constants(d);
  if (flags.empty()) flags.assign(mm.v, 0);
  r.divergence_flags = std::move(flags);
  r.trace = std::move(trace);
  return r;
}

}  // namespace

namespace {

void check_options(const FitOptions& opts) {
  if (!(opts.tol > 0.0)) throw ModelError("fit: tol must be positive");
  if (opts.max_iter < 1) throw ModelError("fit: max_iter must be at least 1");
}

}  // namespace

FitResult fit(const ModelMatrix& mm, const Dataset& d, const FitOptions& opts) {
  check_options(opts);
  const Parameterization pz = mm.reporting;
  Eigen::VectorXd theta = opts.start.value_or(Eigen::VectorXd::Zero(mm.v));
  if (theta.size() != mm.v) throw ModelError("fit: start vector has wrong length");

  std::vector<IterationRecord> trace;
  Eval cur;
  bool have_eval = false;
  // ML iterates on separated data keep marching along a likelihood ray with a
  // vanishing score; a norm-based stop is honored only once the steps have
  // settled, otherwise the march continues until the divergence classification
  // (objective plateau + coefficients past the threshold) fires.
  const double settle_tol = std::sqrt(opts.tol);
  double last_step = 0.0;
  bool stepped = false;
  // Consecutive full-step proposals that shrink by a stable signed factor rho
  // signal the linear regime of the iteration map (the expected information is
  // then a blunt Jacobian for the adjusted score). The tail-sum multiplier
  // 1/(1-rho) jumps to the limit in one move -- rho near -1 is a damped
  // oscillation where the right move is about half a step, rho near +1 a slow
  // crawl where it is many steps. Candidates pass the usual monitors.
  Eigen::VectorXd prev_proposal;

  auto marching = [&]() { return stepped && last_step > settle_tol; };

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    if (!have_eval) {
      try {
        cur = evaluate(mm, d, theta, pz, opts.method);
      } catch (const SingularInfoError&) {
        // The iterates can outrun the information matrix; classify at the last
        // good iterate if the trace supports it.
        if (opts.method == Method::ML && !trace.empty()) {
          const Eigen::VectorXd& back = trace.back().theta;
          Eval ev = evaluate(mm, d, back, pz, opts.method);
          auto flags = classify_divergence(trace, back, opts.tol, opts.divergence_threshold);
          if (!flags.empty())
            return finalize(mm, d, back, pz, opts, true, std::move(flags), trace, ev.norm,
                            ev.objective, static_cast<int>(trace.size()) - 1);
        }
        throw;
      }
      have_eval = true;
    }
    trace.push_back({theta, cur.objective, cur.norm});

    if (cur.norm < opts.tol && !(opts.method == Method::ML && marching()))
      return finalize(mm, d, theta, pz, opts, true, {}, trace, cur.norm, cur.objective,
                      static_cast<int>(trace.size()) - 1);
    if (opts.method == Method::ML && marching()) {
      auto flags = classify_divergence(trace, theta, opts.tol, opts.divergence_threshold);
      if (!flags.empty())
        return finalize(mm, d, theta, pz, opts, true, std::move(flags), trace, cur.norm,
                        cur.objective, static_cast<int>(trace.size()) - 1);
    }
    if (iter == opts.max_iter) break;

    Eigen::VectorXd step;
    try {
      step = InfoMatrix(cur.info).solve(cur.U);
    } catch (const SingularInfoError&) {
      if (opts.method == Method::ML) {
        auto flags = classify_divergence(trace, theta, opts.tol, opts.divergence_threshold);
        if (!flags.empty())
          return finalize(mm, d, theta, pz, opts, true, std::move(flags), trace, cur.norm,
                          cur.objective, static_cast<int>(trace.size()) - 1);
      }
      throw;
    }

    // Candidate scales: an optional extrapolated step, then the full step and
    // its halvings. The monitors are the objective for ML/mBR and the sup-norm
    // of the estimating function for mdBR. If nothing improves the monitor,
    // take the full step anyway; insisting on monotonicity stalls the mdBR
    // iteration when the scoring direction is not a norm-descent direction.
    std::vector<double> scales;
    if (opts.method != Method::ML && prev_proposal.size() == step.size()) {
      // ML is excluded: on separated data its steps also decay slowly, but
      // along a ray where jumping ahead only destabilizes the boundary
      // classification.
      const double denom = prev_proposal.squaredNorm();
      const double rho = denom > 0.0 ? step.dot(prev_proposal) / denom : 0.0;
      if (rho > -0.9995 && rho < 0.999) {
        const double mult = std::min(1.0 / (1.0 - rho), 100.0);
        if (std::fabs(mult - 1.0) > 0.25) scales.push_back(mult);
      }
    }
    for (int h = 0; h <= opts.max_step_halvings; ++h) scales.push_back(std::pow(0.5, h));

    bool accepted = false;
    bool have_fallback = false;
    Eigen::VectorXd fallback_theta;
    Eval fallback_eval;
    for (size_t si = 0; si < scales.size() && !accepted; ++si) {
      const double scale = scales[si];
      Eigen::VectorXd cand = theta + scale * step;
      Eval ev;
      try {
        ev = evaluate(mm, d, cand, pz, opts.method);
      } catch (const SingularInfoError&) {
        continue;
      }
      if (!have_fallback && scale <= 1.0 &&
          (opts.method == Method::MdBR || std::isfinite(ev.objective))) {
        fallback_theta = cand;
        fallback_eval = ev;
        have_fallback = true;
      }
      bool ok;
      if (opts.method == Method::MdBR) {
        ok = ev.norm <= cur.norm;
      } else {
        // accept clear ascent; once the objective is flat to float resolution,
        // ask the norm to improve so the iteration cannot two-cycle around
        // the root
        const double slack = 1e-12 * (1.0 + std::fabs(cur.objective));
        ok = std::isfinite(ev.objective) &&
             (ev.objective > cur.objective + slack ||
              (ev.objective >= cur.objective - slack && ev.norm < cur.norm));
      }
      if (ok) {
        last_step = (cand - theta).lpNorm<Eigen::Infinity>();
        if (scale == 1.0) prev_proposal = step;
        else prev_proposal.resize(0);
        stepped = true;
        theta = std::move(cand);
        cur = ev;
        have_eval = true;
        accepted = true;
      }
    }
    if (!accepted) {
      if (!have_fallback)
        throw FitError("fit: step halving failed (information singular along every step)",
                       std::move(trace));
      last_step = (fallback_theta - theta).lpNorm<Eigen::Infinity>();
      prev_proposal.resize(0);
      stepped = true;
      theta = std::move(fallback_theta);
      cur = fallback_eval;
      have_eval = true;
    }
  }
  throw FitError("fit: no convergence in " + std::to_string(opts.max_iter) +
                     " iterations and no divergence classification",
                 std::move(trace));
}

FitResult fit_mbr_poisson(const ModelMatrix& mm, const Dataset& d, const FitOptions& opts) {
  check_options(opts);
  const int n = mm.n, k = mm.k, v = mm.v;
  const Parameterization pz = mm.reporting;
  const Eigen::MatrixXd& X = mm.design(Parameterization::BCL);

  // Surrogate design: one Poisson cell per (observation, category), with free
  // per-observation intercepts and the baseline-category columns.
  const int ncell = n * k, q = n + v;
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(ncell, q);
  Eigen::VectorXd ycell(ncell);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      const int c = i * k + j;
      Z(c, i) = 1.0;
      if (j < k - 1) Z.block(c, n, 1, v) = X.row(i * (k - 1) + j);
      ycell[c] = d.y(i, j);
    }

  Eigen::VectorXd psi = Eigen::VectorXd::Zero(q);
  for (int i = 0; i < n; ++i) psi[i] = std::log(d.totals[i] / static_cast<double>(k));
  if (opts.start) {
    ParamVector s0 = mm.make_params(*opts.start, pz);
    psi.tail(v) = convert_params(s0, mm, Parameterization::BCL).values;
  }

  std::vector<IterationRecord> trace;
  bool converged = false;
  int outer = 0;
  for (; outer < opts.max_iter; ++outer) {
    Eigen::VectorXd lambda = (Z * psi).array().exp();

    // P1: rescale means so each observation's cell means sum to its total.
    for (int i = 0; i < n; ++i) {
      const double s = lambda.segment(i * k, k).sum();
      psi[i] += std::log(d.totals[i] / s);
      lambda.segment(i * k, k) *= d.totals[i] / s;
    }

    // P2: adjusted counts y + h/2, with h the hat diagonals of the weighted
    // working regression at the rescaled means.
    Eigen::MatrixXd M = Z.transpose() * lambda.asDiagonal() * Z;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
      throw SingularInfoError("poisson surrogate: working information is singular");
    Eigen::MatrixXd Sol = llt.solve(Z.transpose());  // q x ncell
    Eigen::VectorXd yadj(ncell);
    for (int c = 0; c < ncell; ++c) yadj[c] = ycell[c] + 0.5 * lambda[c] * Z.row(c).dot(Sol.col(c));

    // P3: ML fit of the Poisson model to the adjusted counts.
    const Eigen::VectorXd prev = psi.tail(v);
    for (int inner = 0; inner < 50; ++inner) {
      Eigen::VectorXd lam = (Z * psi).array().exp();
      Eigen::VectorXd g = Z.transpose() * (yadj - lam);
      if (g.lpNorm<Eigen::Infinity>() < 1e-10) break;
      Eigen::MatrixXd Mi = Z.transpose() * lam.asDiagonal() * Z;
      Eigen::LLT<Eigen::MatrixXd> lltp(Mi);
      if (lltp.info() != Eigen::Success)
        throw SingularInfoError("poisson surrogate: information is singular");
      Eigen::VectorXd delta = lltp.solve(g);
      double ll0 = yadj.dot(Z * psi) - lam.sum();
      double scale = 1.0;
      for (int h = 0; h < 30; ++h, scale *= 0.5) {
        Eigen::VectorXd cand = psi + scale * delta;
        Eigen::VectorXd lc = (Z * cand).array().exp();
        double ll1 = yadj.dot(Z * cand) - lc.sum();
        if (std::isfinite(ll1) && ll1 >= ll0 - 1e-12 * (1.0 + std::fabs(ll0))) {
          psi = std::move(cand);
          break;
        }
      }
    }

    const ParamVector rep = convert_params(mm.make_params(psi.tail(v), Parameterization::BCL), mm, pz);
    const double delta_sup = (psi.tail(v) - prev).lpNorm<Eigen::Infinity>();
    const double obj = penalized_log_likelihood(mm, d, rep, 0.5);
    trace.push_back({rep.values, obj, delta_sup});
    if (delta_sup < opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw FitError("fit_mbr_poisson: no convergence in " + std::to_string(opts.max_iter) +
                       " outer iterations",
                   std::move(trace));

  const ParamVector rep =
      convert_params(mm.make_params(psi.tail(v), Parameterization::BCL), mm, pz);
  FitOptions as_mbr = opts;
  as_mbr.method = Method::MBR;
  const Eigen::VectorXd adjusted_score =
      score(mm, d, rep) + mean_adjustment(mm, d, rep);
  return finalize(mm, d, rep.values, pz, as_mbr, true, {}, std::move(trace),
                  adjusted_score.lpNorm<Eigen::Infinity>(),
                  penalized_log_likelihood(mm, d, rep, 0.5), outer + 1);
}

FitResult refit_under_contrast(const ModelMatrix& mm, const Dataset& d, const Eigen::MatrixXd& T,
                               const FitOptions& opts) {
  ModelMatrix tm = mm.reparameterized(T);
  return fit(tm, d, opts);
}

}  // namespace brcat
