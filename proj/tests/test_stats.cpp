#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedhc/stats.hpp"

using namespace fedhc;

// Reference values computed with 60-digit arithmetic (mpmath).
TEST_CASE("two-sided normal log tail matches high-precision references") {
    struct Ref {
        double z, logp;
    };
    const Ref refs[] = {
        {0.5, -0.4827645810336732994625},
        {1.959963984540054, -2.995732273553990558389},
        {5.493061443340549, -17.04690117088467372649},
        {10.0, -52.53813796995252526893},
        {30.0, -453.6280967757832517979},
        {40.0, -803.9152948331938428572},
        {100.0, -5004.831061513645143317},
        {123.456, -7625.7337097700097124},
    };
    for (const auto& r : refs)
        CHECK(stats::log_two_sided_normal(r.z) == doctest::Approx(r.logp).epsilon(1e-13));
}

TEST_CASE("normal log tail is continuous across the asymptotic switch") {
    // The implementation switches branches at erfc argument 25 (z ~ 35.36).
    double prev = stats::log_two_sided_normal(35.0);
    for (double z = 35.01; z < 35.8; z += 0.01) {
        const double cur = stats::log_two_sided_normal(z);
        CHECK(cur < prev);
        CHECK(std::abs(cur - prev) < 1.0);
        prev = cur;
    }
}

TEST_CASE("student-t log tail matches high-precision references") {
    struct Ref {
        double t, nu, logp;
    };
    const Ref refs[] = {
        {2.0, 10, -2.611994370672507893055},
        {5.493061443340549, 100, -15.01515362363968601889},
        {5.493061443340549, 9997, -17.02269156146896601834},
        {50.0, 20, -50.09535062057196482512},
        {200.0, 50, -169.3327256262753133073},
        {1000.0, 5, -31.59538369279704232311},
    };
    for (const auto& r : refs)
        CHECK(stats::log_two_sided_student_t(r.t, r.nu) ==
              doctest::Approx(r.logp).epsilon(1e-12));
}

TEST_CASE("chi-squared upper log tail matches high-precision references") {
    struct Ref {
        double x, k, logp;
    };
    const Ref refs[] = {
        {3.841458820694124, 1, -2.995732273553989844728},  // log(0.05) at the 95% quantile
        {25.0, 4, -9.897310314555616235231},
        {2000.0, 1, -1004.026741958951945018},
        {1500.0, 8, -731.9275371900884891622},
        {4000.0, 12, -1966.780477569865568193},
    };
    for (const auto& r : refs)
        CHECK(stats::log_chi_squared_upper(r.x, r.k) == doctest::Approx(r.logp).epsilon(1e-12));
    CHECK(stats::log_chi_squared_upper(0.0, 3) == 0.0);
}

TEST_CASE("log tails stay finite into the deep tail") {
    CHECK(std::isfinite(stats::log_two_sided_normal(2e4)));
    CHECK(std::isfinite(stats::log_chi_squared_upper(5e6, 2)));
    CHECK(std::isfinite(stats::log_two_sided_student_t(1e6, 50)));
    // Monotone in the statistic.
    CHECK(stats::log_two_sided_normal(12.0) < stats::log_two_sided_normal(11.0));
    CHECK(stats::log_chi_squared_upper(50.0, 3) < stats::log_chi_squared_upper(40.0, 3));
    CHECK(stats::log_two_sided_student_t(21.0, 7) < stats::log_two_sided_student_t(20.0, 7));
}

TEST_CASE("quantile wrappers agree with known table values") {
    CHECK(stats::chi_squared_quantile(10, 0.975) == doctest::Approx(20.4832).epsilon(1e-4));
    CHECK(stats::chi_squared_quantile(1, 0.95) == doctest::Approx(3.84146).epsilon(1e-4));
    CHECK(stats::f_quantile(5, 10, 0.975) == doctest::Approx(4.2361).epsilon(1e-3));
    CHECK(stats::beta_quantile(2, 3, 0.5) == doctest::Approx(0.38573).epsilon(1e-3));
}

TEST_CASE("average ranks handle ties by sharing the mean rank") {
    Eigen::VectorXd col(6);
    col << 3.0, 1.0, 4.0, 1.0, 5.0, 9.0;
    const Eigen::VectorXd r = stats::average_ranks(col);
    CHECK(r[1] == doctest::Approx(1.5));
    CHECK(r[3] == doctest::Approx(1.5));
    CHECK(r[0] == doctest::Approx(3.0));
    CHECK(r[2] == doctest::Approx(4.0));
    CHECK(r[4] == doctest::Approx(5.0));
    CHECK(r[5] == doctest::Approx(6.0));
}
