#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace mobdemo {

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0; ///< two-sided, Student-t approximation with n-2 dof
    std::size_t n = 0;
};

/// Throws Error("bad_input") for mismatched or too-short inputs (< 3) and
/// Error("zero_variance") when either side has constant ranks.
SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y);

struct OlsResult {
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_stats;
    Eigen::VectorXd p_values;
    double r_squared = 0.0;
    std::size_t n = 0;
};

/// Least squares via column-pivoted QR. `x` must already contain the
/// intercept column if one is wanted. Throws Error("underdetermined") when
/// rows <= columns and Error("rank_deficient") naming the collinear columns.
OlsResult ols_fit(const Eigen::MatrixXd &x, const Eigen::VectorXd &y, std::vector<std::string> names);

/// Prepends a column of ones named "intercept".
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd &x);

/// Two-sided p-value of a t statistic.
double t_test_p_value(double t, double dof);

} // namespace mobdemo
