#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "prefarb/errors.hpp"

namespace prefarb {

struct Coefficient {
    double estimate = 0.0;
    double std_error = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    bool significant = false;  // two-sided, at the 0.05 level
};

struct FactorRegressionResult {
    Coefficient alpha;  // intercept, per period
    std::vector<std::string> factor_names;
    std::vector<Coefficient> betas;  // aligned with factor_names
    double r2 = 0.0;
    double adj_r2 = 0.0;
    std::size_t n_obs = 0;

    const Coefficient& beta(const std::string& name) const {
        for (std::size_t k = 0; k < factor_names.size(); ++k) {
            if (factor_names[k] == name) return betas[k];
        }
        throw ConfigError("no factor named '" + name + "'");
    }
};

// 1 - (1 - R^2)(n - 1)/(n - k - 1)
inline double adjusted_r2(double r2, std::size_t n_obs, std::size_t k) {
    const double n = static_cast<double>(n_obs);
    return 1.0 - (1.0 - r2) * (n - 1.0) / (n - static_cast<double>(k) - 1.0);
}

/**
 * OLS of returns on an intercept plus k factors. `factors` is [T x k].
 * Standard errors come from the residual variance with T - k - 1 degrees of
 * freedom; significance uses the Student-t distribution.
 */
inline FactorRegressionResult factor_regression(const std::vector<double>& returns,
                                                const Eigen::MatrixXd& factors,
                                                const std::vector<std::string>& factor_names) {
    const auto n_obs = static_cast<std::size_t>(factors.rows());
    const auto k = static_cast<std::size_t>(factors.cols());
    if (returns.size() != n_obs) throw LengthError("returns and factors are not aligned");
    if (factor_names.size() != k) throw LengthError("one name per factor column required");
    if (n_obs <= k + 1) throw SizeError("regression needs more observations than regressors + 1");

    Eigen::MatrixXd x(n_obs, k + 1);
    x.col(0).setOnes();
    x.rightCols(k) = factors;
    const Eigen::Map<const Eigen::VectorXd> y(returns.data(), static_cast<Eigen::Index>(n_obs));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (static_cast<std::size_t>(qr.rank()) < k + 1) {
        throw RankDeficiencyError("factor matrix (with intercept) is rank deficient");
    }
    const Eigen::VectorXd coef = qr.solve(y);
    const Eigen::VectorXd resid = y - x * coef;
    const double rss = resid.squaredNorm();
    const double y_mean = y.mean();
    const double tss = (y.array() - y_mean).square().sum();
    const double dof = static_cast<double>(n_obs - k - 1);
    const double sigma2 = rss / dof;

    // (X^T X)^{-1} via the QR factors: R^{-1} R^{-T}, permuted back.
    const Eigen::Index p = static_cast<Eigen::Index>(k + 1);
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = r.inverse();
    const Eigen::MatrixXd cov_perm = r_inv * r_inv.transpose();
    const auto perm = qr.colsPermutation();
    const Eigen::MatrixXd cov = perm * cov_perm * perm.transpose();

    boost::math::students_t dist(dof);
    auto make = [&](Eigen::Index idx) {
        Coefficient c;
        c.estimate = coef(idx);
        c.std_error = std::sqrt(std::max(0.0, sigma2 * cov(idx, idx)));
        c.t_stat = c.std_error > 0.0 ? c.estimate / c.std_error : 0.0;
        c.p_value = c.std_error > 0.0 ? 2.0 * boost::math::cdf(boost::math::complement(
                                                   dist, std::abs(c.t_stat)))
                                      : (c.estimate != 0.0 ? 0.0 : 1.0);
        c.significant = c.p_value < 0.05;
        return c;
    };

    FactorRegressionResult out;
    out.n_obs = n_obs;
    out.factor_names = factor_names;
    out.alpha = make(0);
    for (std::size_t j = 0; j < k; ++j) out.betas.push_back(make(static_cast<Eigen::Index>(j + 1)));
    out.r2 = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
    out.adj_r2 = adjusted_r2(out.r2, n_obs, k);
    return out;
}

}  // namespace prefarb
