#include "fedhc/stats.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fedhc/errors.hpp"

namespace fedhc::stats {

namespace {

constexpr double kUnderflowGuard = 1e-280;

// Asymptotic series for log(erfc(x)), valid for large x:
//   erfc(x) = exp(-x^2) / (x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - ...)
double log_erfc_asymptotic(double x) {
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double series = 1.0;
    for (int k = 1; k <= 12; ++k) {
        term *= -(2.0 * k - 1.0) * inv2x2;
        series += term;
        if (std::abs(term) < 1e-18 * series) break;
    }
    return -x * x - std::log(x) - 0.5 * std::log(M_PI) + std::log(series);
}

// Regularized incomplete beta I_x(a, b) in log space for small x, via
//   I_x(a,b) = x^a (1-x)^b / (a B(a,b)) * 2F1(a+b, 1; a+1; x).
double log_ibeta_small_x(double a, double b, double x) {
    double term = 1.0;
    double series = 1.0;
    for (int k = 0; k < 10000; ++k) {
        term *= (a + b + k) / (a + 1.0 + k) * x;
        series += term;
        if (term < 1e-18 * series) break;
    }
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return a * std::log(x) + b * std::log1p(-x) - std::log(a) - log_beta + std::log(series);
}

// Upper regularized incomplete gamma Q(s, y) in log space for y >> s:
//   Gamma(s, y) ~ y^(s-1) e^-y (1 + (s-1)/y + (s-1)(s-2)/y^2 + ...)
double log_gamma_q_asymptotic(double s, double y) {
    double term = 1.0;
    double series = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 60; ++k) {
        term *= (s - k) / y;
        if (std::abs(term) >= prev) break;  // series started diverging
        prev = std::abs(term);
        series += term;
        if (std::abs(term) < 1e-18 * std::abs(series)) break;
    }
    return (s - 1.0) * std::log(y) - y - std::lgamma(s) + std::log(series);
}

}  // namespace

double log_erfc(double x) {
    if (x < 0.0) throw InvariantViolation("log_erfc expects x >= 0");
    if (x < 25.0) return std::log(std::erfc(x));
    return log_erfc_asymptotic(x);
}

double log_two_sided_normal(double z) {
    if (!(z >= 0.0)) throw InvariantViolation("log_two_sided_normal expects z >= 0");
    return log_erfc(z / std::sqrt(2.0));
}

double log_two_sided_student_t(double t, double nu) {
    if (!(t >= 0.0) || !(nu > 0.0))
        throw InvariantViolation("log_two_sided_student_t expects t >= 0, nu > 0");
    const double a = nu / 2.0;
    const double x = nu / (nu + t * t);
    // P(|T| > t) = I_x(nu/2, 1/2)
    const double p = boost::math::ibeta(a, 0.5, x);
    if (p > kUnderflowGuard) return std::log(p);
    return log_ibeta_small_x(a, 0.5, x);
}

double log_chi_squared_upper(double x, double k) {
    if (!(x >= 0.0) || !(k > 0.0))
        throw InvariantViolation("log_chi_squared_upper expects x >= 0, k > 0");
    if (x == 0.0) return 0.0;
    const double s = k / 2.0;
    const double y = x / 2.0;
    const double q = boost::math::gamma_q(s, y);
    if (q > kUnderflowGuard) return std::log(q);
    return log_gamma_q_asymptotic(s, y);
}

double chi_squared_quantile(double dof, double p) {
    return boost::math::quantile(boost::math::chi_squared(dof), p);
}

double beta_quantile(double a, double b, double p) {
    return boost::math::quantile(boost::math::beta_distribution<>(a, b), p);
}

double f_quantile(double d1, double d2, double p) {
    return boost::math::quantile(boost::math::fisher_f(d1, d2), p);
}

double chi_squared_cdf(double dof, double x) {
    return boost::math::cdf(boost::math::chi_squared(dof), x);
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& column) {
    const Eigen::Index n = column.size();
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return column[a] < column[b]; });

    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && column[order[j + 1]] == column[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace fedhc::stats
