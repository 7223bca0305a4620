#include <doctest.h>

#include <cmath>

#include "brcat/fit.hpp"
#include "brcat/separation.hpp"
#include "test_support.hpp"

using namespace brcat;
using namespace testsup;

namespace {

// Completely separated logistic data: y = 0 exactly when x2 + 2 x3 > 0. The
// y = 1 points hug the boundary while the y = 0 points sit away from it, which
// pins the intercept's divergence direction.
Dataset separated_example(int n = 100) {
  Rng rng(4242);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd s(n), m(n);
  for (int i = 0; i < n; ++i) {
    const bool zero_side = (i % 2 == 0);
    const double sgn = zero_side ? 1.0 : -1.0;
    const double dist = zero_side ? (0.5 + 2.5 * rng.uniform()) : (0.01 + 0.09 * rng.uniform());
    const double x2 = 2.0 * rng.uniform() - 1.0;
    const double sum = sgn * dist;  // x2 + 2 x3
    x(i, 0) = x2;
    x(i, 1) = (sum - x2) / 2.0;
    s[i] = zero_side ? 1.0 : 0.0;  // first category is the label "0"
    m[i] = 1.0;
  }
  return binomial_rows(x, s, m);
}

}  // namespace

TEST_CASE("wine NPO data are quasi-completely separated with the known limits") {
  Dataset d = wine();
  ModelMatrix mm = build_model(d, {Family::AclNPO});
  SeparationReport rep = detect_separation(mm, d);
  CHECK(rep.status == SeparationStatus::QuasiComplete);
  REQUIRE(rep.separating_direction.has_value());
  // alpha_4 -> +inf, temp:1 -> -inf, temp:4 -> -inf, everything else finite
  std::vector<int> expect(12, 0);
  expect[3] = 1;
  expect[4] = -1;
  expect[10] = -1;
  CHECK(rep.infinite_components == expect);
}

TEST_CASE("deterministic rule data are completely separated with the known signs") {
  Dataset d = separated_example();
  ModelMatrix mm = build_model(d, {Family::LogitBinomial});
  SeparationReport rep = detect_separation(mm, d);
  CHECK(rep.status == SeparationStatus::Complete);
  REQUIRE(rep.infinite_components.size() == 3);
  CHECK(rep.infinite_components[0] == -1);  // intercept -> -inf
  CHECK(rep.infinite_components[1] == 1);   // x2 -> +inf
  CHECK(rep.infinite_components[2] == 1);   // x3 -> +inf
}

TEST_CASE("overlap when both categories share a covariate point") {
  Eigen::MatrixXd x(1, 0);
  Eigen::VectorXd s(1), m(1);
  s << 3;
  m << 7;
  Dataset d = binomial_rows(x, s, m);
  ModelMatrix mm = build_model(d, {Family::LogitBinomial});
  SeparationReport rep = detect_separation(mm, d);
  CHECK(rep.status == SeparationStatus::Overlap);
  CHECK(!rep.separating_direction.has_value());
  for (int f : rep.infinite_components) CHECK(f == 0);
}

TEST_CASE("status is invariant to positive covariate scaling") {
  Dataset d = separated_example(40);
  ModelMatrix mm = build_model(d, {Family::LogitBinomial});
  SeparationStatus s0 = detect_separation(mm, d).status;
  Dataset d2 = d;
  d2.x *= 37.5;
  ModelMatrix mm2 = build_model(d2, {Family::LogitBinomial});
  CHECK(detect_separation(mm2, d2).status == s0);

  Dataset w = wine();
  ModelMatrix wm = build_model(w, {Family::AclNPO});
  Dataset w2 = w;
  w2.x *= 0.01;
  ModelMatrix wm2 = build_model(w2, {Family::AclNPO});
  CHECK(detect_separation(wm2, w2).status == detect_separation(wm, w).status);
}

TEST_CASE("detector agrees with the fitter over randomized small datasets") {
  Rng rng(777);
  int checked = 0;
  for (int trial = 0; checked < 50 && trial < 200; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform() * 5);
    const int p = 1 + static_cast<int>(rng.uniform() * 2);
    Dataset d = random_dataset(rng, n, 2, p, 3);
    ModelMatrix mm;
    try {
      mm = build_model(d, {Family::LogitBinomial});
    } catch (const ModelError&) {
      continue;
    }
    SeparationReport rep = detect_separation(mm, d);
    FitOptions o;
    o.method = Method::ML;
    o.max_iter = 200;
    bool converged_clean;
    try {
      FitResult r = fit(mm, d, o);
      converged_clean = r.converged && !r.any_divergence();
    } catch (const FitError&) {
      converged_clean = false;
    } catch (const SingularInfoError&) {
      converged_clean = false;
    }
    CHECK(converged_clean == (rep.status == SeparationStatus::Overlap));
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("haldane-corrected adjacent logits") {
  Eigen::VectorXd cold_no(5);
  cold_no << 4, 9, 5, 0, 0;
  Eigen::VectorXd el = empirical_adjacent_logits(cold_no);
  CHECK(el[0] == doctest::Approx(std::log(4.5 / 9.5)).epsilon(1e-12));
  CHECK(el[0] == doctest::Approx(-0.7472).epsilon(1e-4));

  Eigen::VectorXd equal = Eigen::VectorXd::Constant(4, 3.0);
  CHECK(empirical_adjacent_logits(equal).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd zeros(2);
  zeros << 0, 0;
  CHECK(empirical_adjacent_logits(zeros)[0] == 0.0);

  // finite for arbitrary nonnegative counts
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd c(4);
    for (int j = 0; j < 4; ++j) c[j] = std::floor(rng.uniform() * 5);
    Eigen::VectorXd v = empirical_adjacent_logits(c);
    for (int j = 0; j < v.size(); ++j) CHECK(std::isfinite(v[j]));
  }
}
