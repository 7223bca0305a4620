#pragma once

namespace brcat {

// Standard normal distribution.
double normal_cdf(double z);
double normal_quantile(double p);

// Two-sided p-value for a z statistic: 2 min(Phi(z), 1 - Phi(z)).
double two_sided_normal_p(double z);

// Chi-squared distribution with df degrees of freedom.
double chisq_upper_tail(double x, int df);
double chisq_quantile(double p, int df);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

}  // namespace brcat
