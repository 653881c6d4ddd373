#pragma once

// Shared distribution primitives: standard normal CDF/quantile, regularized
// incomplete beta (for the t distribution), and exact binomial log-pmf.
namespace opspam::dists {

double normal_cdf(double z);

// log(1 - normal_cdf(z)), stable where erfc underflows.
double log_normal_sf(double z);

// Inverse of normal_cdf on (0, 1); accurate to ~1e-15 after refinement.
double normal_quantile(double p);

// I_x(a, b)
double reg_incomplete_beta(double x, double a, double b);

// Two-tailed p from a t statistic with (possibly fractional) df.
double t_two_tailed_p(double t, double df);

double log_binom_pmf(long long k, long long n, double p);

}  // namespace opspam::dists
