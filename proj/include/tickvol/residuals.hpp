#pragma once

// Standardized residuals and the ARCH-LM R^2 statistic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tickvol/dynamics.hpp"
#include "tickvol/model.hpp"
#include "tickvol/series.hpp"

namespace tickvol {

/// R^2 of regressing r_t^2 on a constant and r_{t-1}^2, ..., r_{t-lags}^2.
/// Empty when the squared residuals are constant or the regressors are rank
/// deficient.
inline std::optional<double> arch_lm(std::span<const double> residuals, std::size_t lags = 10) {
    const std::size_t n = residuals.size();
    if (lags == 0 || n <= lags + 1) return std::nullopt;
    for (double r : residuals)
        if (!std::isfinite(r)) return std::nullopt;
    const auto m = static_cast<Eigen::Index>(n - lags);
    const auto p = static_cast<Eigen::Index>(lags + 1);
    Eigen::MatrixXd X(m, p);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const std::size_t t = static_cast<std::size_t>(i) + lags;
        y[i] = residuals[t] * residuals[t];
        X(i, 0) = 1.0;
        for (std::size_t l = 1; l <= lags; ++l)
            X(i, static_cast<Eigen::Index>(l)) = residuals[t - l] * residuals[t - l];
    }
    const double ybar = y.mean();
    const double sst = (y.array() - ybar).square().sum();
    if (!(sst > 1e-300 * static_cast<double>(m))) return std::nullopt;
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) return std::nullopt;
    const Eigen::VectorXd beta = qr.solve(y);
    const double ssr = (y - X * beta).squaredNorm();
    return std::clamp(1.0 - ssr / sst, 0.0, 1.0);
}

inline std::optional<double> arch_lm(const std::vector<double>& residuals, std::size_t lags = 10) {
    return arch_lm(std::span<const double>(residuals), lags);
}

/// (y_t - m_t) / sd_t with the model's conditional mean and standard deviation.
/// Empty for t-based models with nu <= 2, where the variance does not exist.
/// Zero-inflated Skellam uses the mixture mean (1 - pi) mu_t and variance
/// (1 - pi)(sigma2_t + mu_t^2) - ((1 - pi) mu_t)^2.
inline std::optional<std::vector<double>> standardized_residuals(const ChangeSeries& y,
                                                                 const FilterOutput& out,
                                                                 const ModelSpec& spec,
                                                                 const ParamVector& p) {
    const std::size_t n = y.size();
    if (out.mu_path.size() != n || out.sigma2_path.size() != n)
        throw DomainError("filter output does not match the series");
    double t_factor = 1.0;
    if (p.has(Param::nu)) {
        const double nu = p.get(Param::nu);
        if (!(nu > 2.0)) return std::nullopt;
        t_factor = nu / (nu - 2.0);
    }
    const double pi = p.has(Param::pi) ? p.get(Param::pi) : 0.0;
    std::vector<double> r(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double mu = out.mu_path[t];
        const double s2 = out.sigma2_path[t];
        double mean = mu, var = s2;
        switch (spec.family) {
            case Family::normal:
            case Family::skellam: break;
            case Family::zi_skellam:
                mean = (1.0 - pi) * mu;
                var = (1.0 - pi) * (s2 + mu * mu) - mean * mean;
                break;
            default: var = s2 * t_factor;
        }
        r[t] = (y.changes[t] - mean) / std::sqrt(var);
    }
    return r;
}

}  // namespace tickvol
