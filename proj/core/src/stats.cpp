#include "mobdemo/stats.hpp"

#include "mobdemo/error.hpp"

#include <Eigen/QR>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mobdemo {

std::vector<double> average_ranks(std::span<const double> values) {
    const auto n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        // positions i..j (0-based) share rank mean((i+1)..(j+1))
        double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error("zero_variance", "correlation undefined for a constant input");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double t_test_p_value(double t, double dof) {
    if (std::isinf(t)) {
        return 0.0;
    }
    boost::math::students_t dist{dof};
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) {
        throw Error("bad_input", "spearman needs two equal-length inputs with at least 3 values");
    }
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    SpearmanResult r;
    r.n = x.size();
    r.rho = pearson(rx, ry);
    const double dof = static_cast<double>(r.n) - 2.0;
    if (std::abs(r.rho) >= 1.0) {
        r.p_value = 0.0;
    } else {
        r.p_value = t_test_p_value(r.rho * std::sqrt(dof / (1.0 - r.rho * r.rho)), dof);
    }
    return r;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd &x) {
    Eigen::MatrixXd out(x.rows(), x.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(x.cols()) = x;
    return out;
}

OlsResult ols_fit(const Eigen::MatrixXd &x, const Eigen::VectorXd &y, std::vector<std::string> names) {
    const auto n = x.rows();
    const auto p = x.cols();
    if (names.size() != static_cast<std::size_t>(p) || y.size() != n) {
        throw Error("bad_input", "design, response and names disagree in shape");
    }
    if (n <= p) {
        throw Error("underdetermined", "OLS needs more rows than columns");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        // Pivoted columns past the numerical rank are the ones expressible
        // through earlier columns.
        std::string which;
        for (auto k = qr.rank(); k < p; ++k) {
            if (!which.empty()) {
                which += ", ";
            }
            which += names[static_cast<std::size_t>(qr.colsPermutation().indices()(k))];
        }
        throw Error("rank_deficient", "collinear columns: " + which);
    }

    OlsResult r;
    r.names = std::move(names);
    r.n = static_cast<std::size_t>(n);
    r.coefficients = qr.solve(y);

    Eigen::VectorXd residual = y - x * r.coefficients;
    const double ssr = residual.squaredNorm();
    const double sst = (y.array() - y.mean()).matrix().squaredNorm();
    r.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;

    // (X'X)^-1 = P R^-1 R^-T P'
    Eigen::MatrixXd r_upper = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Eigen::MatrixXd r_inv = r_upper.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd cov_perm = r_inv * r_inv.transpose();
    Eigen::MatrixXd cov = qr.colsPermutation() * cov_perm * qr.colsPermutation().transpose();

    const double dof = static_cast<double>(n - p);
    const double sigma2 = ssr / dof;
    r.std_errors.resize(p);
    r.t_stats.resize(p);
    r.p_values.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double se = std::sqrt(sigma2 * cov(j, j));
        double beta = r.coefficients(j);
        r.std_errors(j) = se;
        if (se == 0.0) {
            r.t_stats(j) = beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), beta);
            r.p_values(j) = beta == 0.0 ? 1.0 : 0.0;
        } else {
            r.t_stats(j) = beta / se;
            r.p_values(j) = t_test_p_value(beta / se, dof);
        }
    }
    return r;
}

} // namespace mobdemo
