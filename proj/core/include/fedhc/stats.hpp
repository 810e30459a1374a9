#ifndef FEDHC_STATS_HPP
#define FEDHC_STATS_HPP

#include <Eigen/Dense>

namespace fedhc::stats {

// log(erfc(x)) for x >= 0, accurate far into the tail where erfc underflows.
double log_erfc(double x);

// Natural log of the two-sided standard-normal p-value for |z| = z >= 0,
// i.e. log(2 * (1 - Phi(z))) = log(erfc(z / sqrt(2))).
double log_two_sided_normal(double z);

// Natural log of the two-sided Student-t p-value, P(|T_nu| > t).
double log_two_sided_student_t(double t, double nu);

// Natural log of the chi-squared upper tail P(X^2_k > x).
double log_chi_squared_upper(double x, double k);

// Quantile helpers (thin wrappers so only this unit touches boost).
double chi_squared_quantile(double dof, double p);
double beta_quantile(double a, double b, double p);
double f_quantile(double d1, double d2, double p);
double chi_squared_cdf(double dof, double x);

// Average ranks (ties share the mean rank), 1-based, one column at a time.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& column);

}  // namespace fedhc::stats

#endif
