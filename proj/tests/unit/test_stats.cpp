#include "mobdemo/error.hpp"
#include "mobdemo/rng.hpp"
#include "mobdemo/stats.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>

using namespace mobdemo;

namespace {

double rho(std::vector<double> x, std::vector<double> y) { return spearman_rho(x, y).rho; }

} // namespace

TEST(Spearman, HandValues) {
    EXPECT_NEAR(rho({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-15);
    EXPECT_NEAR(rho({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
    EXPECT_NEAR(rho({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(Spearman, AverageRanks) {
    EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, MonotoneTransformInvariance) {
    Rng rng{4};
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(30), y(30), ex(30);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = z(rng);
            y[i] = x[i] + z(rng);
            ex[i] = std::exp(x[i]);
        }
        EXPECT_NEAR(rho(x, y), rho(ex, y), 1e-12);
        EXPECT_NEAR(rho(x, y), rho(y, x), 1e-12);
    }
}

TEST(Spearman, ErrorsAndPValue) {
    EXPECT_THROW(spearman_rho(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
    try {
        spearman_rho(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), "zero_variance");
    }
    // t = r sqrt((n-2)/(1-r^2)); n = 4, r = 0.8 -> t = 1.8856, two-sided p = 0.2
    EXPECT_NEAR(spearman_rho(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}).p_value, 0.2, 1e-12);
}

TEST(Spearman, IndependentNoiseIsSmall) {
    Rng rng{12};
    std::normal_distribution<double> z;
    std::vector<double> x(2000), y(2000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = z(rng);
        y[i] = z(rng);
    }
    EXPECT_LT(std::abs(rho(x, y)), 0.1);
}

TEST(Ols, ExactLine) {
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    Eigen::VectorXd y = 2.0 * x.col(0);
    auto fit = ols_fit(with_intercept(x), y, {"intercept", "x"});
    EXPECT_NEAR(fit.coefficients[1], 2.0, 1e-12);
    EXPECT_NEAR(fit.coefficients[0], 0.0, 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(Ols, ConstantResponse) {
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    Eigen::VectorXd y = Eigen::VectorXd::Constant(5, 3.0);
    auto fit = ols_fit(with_intercept(x), y, {"intercept", "x"});
    EXPECT_NEAR(fit.coefficients[1], 0.0, 1e-12);
    EXPECT_EQ(fit.r_squared, 0.0);
}

TEST(Ols, MatchesPseudoinverse) {
    Eigen::MatrixXd x(5, 2);
    x << 1, 0.5, 2, -1, 3, 4, 4, 2.5, 5, 0;
    Eigen::VectorXd y(5);
    y << 1.2, 0.7, 5.1, 4.4, 2.0;
    auto design = with_intercept(x);
    auto fit = ols_fit(design, y, {"intercept", "a", "b"});
    Eigen::MatrixXd pinv = design.completeOrthogonalDecomposition().pseudoInverse();
    Eigen::VectorXd beta = pinv * y;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        EXPECT_NEAR(fit.coefficients[i], beta[i], 1e-10);
    }
    // Standard errors from sigma^2 (X'X)^-1.
    Eigen::VectorXd resid = y - design * beta;
    double sigma2 = resid.squaredNorm() / 2.0;
    Eigen::MatrixXd cov = sigma2 * (design.transpose() * design).inverse();
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        EXPECT_NEAR(fit.std_errors[i], std::sqrt(cov(i, i)), 1e-10);
    }
}

TEST(Ols, Errors) {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 2, 4, 3, 6;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    try {
        ols_fit(with_intercept(x), y, {"intercept", "a", "b"});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), "underdetermined");
    }
    Eigen::MatrixXd wide(4, 2);
    wide << 1, 2, 2, 4, 3, 6, 4, 8;
    Eigen::VectorXd y4(4);
    y4 << 1, 2, 3, 5;
    try {
        ols_fit(with_intercept(wide), y4, {"intercept", "a", "b"});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), "rank_deficient");
    }
}
