#pragma once

// Intraday seasonality of the variance. Squared changes are averaged in
// time-of-day bins, smoothed by a cubic smoothing spline whose penalty is
// chosen by generalized cross-validation, floored, and normalized so that the
// knot values average to one.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tickvol/error.hpp"
#include "tickvol/series.hpp"

namespace tickvol {

struct DiurnalProfile {
    std::vector<double> knots;   // seconds since the open
    std::vector<double> values;  // normalized level at each knot
    double floor = 1e-6;
    double bin_width = 300.0;
    double lambda = 0.0;         // chosen penalty, in units of bin widths
    std::vector<double> second;  // natural-spline second derivatives at the knots

    /// A profile identically equal to one.
    static DiurnalProfile flat(double bin_width = 300.0);

    double eval(double time_of_day) const;

    /// ln s_t for every observation of `y`.
    std::vector<double> log_values(const ChangeSeries& y) const {
        std::vector<double> out(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::log(eval(y.time_of_day[i]));
        return out;
    }
};

namespace detail {

// Second derivatives of the natural cubic spline through (x, y).
inline std::vector<double> natural_spline_second(const std::vector<double>& x,
                                                 const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    // Tridiagonal system for m_1..m_{n-2} (Thomas algorithm).
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double h0 = x[i + 1] - x[i];
        const double h1 = x[i + 2] - x[i + 1];
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0;
    }
    for (std::size_t i = 1; i < k; ++i) {
        const double w = upper[i - 1] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    return m;
}

struct SmoothingFit {
    std::vector<double> fitted;
    double lambda;
};

// Cubic smoothing spline at the data abscissae with GCV-chosen penalty.
// `x` must be strictly increasing; penalties are in the units of x.
inline SmoothingFit smoothing_spline_gcv(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 3) return {y, 0.0};
    const Eigen::Index k = n - 2;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, k);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double h0 = x[j + 1] - x[j];
        const double h1 = x[j + 2] - x[j + 1];
        Q(j, j) = 1.0 / h0;
        Q(j + 1, j) = -1.0 / h0 - 1.0 / h1;
        Q(j + 2, j) = 1.0 / h1;
        R(j, j) = (h0 + h1) / 3.0;
        if (j + 1 < k) R(j, j + 1) = R(j + 1, j) = h1 / 6.0;
    }
    const Eigen::MatrixXd K = Q * R.ldlt().solve(Q.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (K + K.transpose()));
    const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& U = eig.eigenvectors();
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    const Eigen::VectorXd uy = U.transpose() * yv;

    auto gcv = [&](double log_lambda) {
        const double lam = std::exp(log_lambda);
        double rss = 0.0, trace = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double shrink = 1.0 / (1.0 + lam * d[i]);
            const double resid = (1.0 - shrink) * uy[i];
            rss += resid * resid;
            trace += shrink;
        }
        const double denom = static_cast<double>(n) - trace;
        if (!(denom > 1e-8)) return std::numeric_limits<double>::infinity();
        return static_cast<double>(n) * rss / (denom * denom);
    };

    // Grid over ln lambda, then golden-section refinement around the best point.
    const double span_x = x.back() - x.front();
    const double center = 3.0 * std::log(span_x / static_cast<double>(n - 1));
    const double lo = center - 20.0, hi = center + 30.0, step = 0.25;
    double best = lo, best_v = gcv(lo);
    for (double l = lo + step; l <= hi; l += step) {
        const double v = gcv(l);
        if (v < best_v) {
            best_v = v;
            best = l;
        }
    }
    double a = best - step, b = best + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), e = a + g * (b - a);
    double fc = gcv(c), fe = gcv(e);
    for (int it = 0; it < 60 && b - a > 1e-6; ++it) {
        if (fc < fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = gcv(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = gcv(e);
        }
    }
    double log_lambda = 0.5 * (a + b);
    if (!(gcv(log_lambda) <= best_v)) log_lambda = best;
    const double lam = std::exp(log_lambda);
    Eigen::VectorXd shrunk(n);
    for (Eigen::Index i = 0; i < n; ++i) shrunk[i] = uy[i] / (1.0 + lam * d[i]);
    const Eigen::VectorXd fitted = U * shrunk;
    return {std::vector<double>(fitted.data(), fitted.data() + n), lam};
}

}  // namespace detail

inline DiurnalProfile DiurnalProfile::flat(double bin_width) {
    DiurnalProfile p;
    p.bin_width = bin_width;
    const auto nb = static_cast<std::size_t>(std::ceil(kSessionSeconds / bin_width));
    for (std::size_t b = 0; b < nb; ++b) {
        p.knots.push_back(std::min((b + 0.5) * bin_width, 0.5 * (b * bin_width + kSessionSeconds)));
        p.values.push_back(1.0);
    }
    p.second.assign(nb, 0.0);
    return p;
}

/// Natural cubic spline through the knots, extended linearly to the session
/// edges and floored.
inline double DiurnalProfile::eval(double t) const {
    if (!(t >= 0.0 && t <= kSessionSeconds))
        throw DomainError("time of day outside the trading session");
    const std::size_t n = knots.size();
    if (n == 0) throw DomainError("empty diurnal profile");
    if (n == 1) return std::max(values[0], floor);
    double v;
    if (t <= knots.front()) {
        const double h = knots[1] - knots[0];
        const double slope = (values[1] - values[0]) / h - h * (2.0 * second[0] + second[1]) / 6.0;
        v = values[0] + slope * (t - knots[0]);
    } else if (t >= knots.back()) {
        const double h = knots[n - 1] - knots[n - 2];
        const double slope =
            (values[n - 1] - values[n - 2]) / h + h * (second[n - 2] + 2.0 * second[n - 1]) / 6.0;
        v = values[n - 1] + slope * (t - knots[n - 1]);
    } else {
        const auto it = std::upper_bound(knots.begin(), knots.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
        const double h = knots[i + 1] - knots[i];
        const double a = (knots[i + 1] - t) / h;
        const double b = (t - knots[i]) / h;
        v = a * values[i] + b * values[i + 1] +
            ((a * a * a - a) * second[i] + (b * b * b - b) * second[i + 1]) * h * h / 6.0;
    }
    return std::max(v, floor);
}

/// Profile from one or more days of changes. Each change is binned by the
/// midpoint of its interval.
inline DiurnalProfile estimate_profile(std::span<const ChangeSeries> days, double bin_width = 300.0,
                                       double floor = 1e-6) {
    if (!(bin_width > 0.0)) throw DomainError("bin width must be positive");
    const auto nb = static_cast<std::size_t>(std::ceil(kSessionSeconds / bin_width));
    if (nb > 2000) throw DomainError("bin width too small for the smoothing spline");
    std::vector<double> sum(nb, 0.0);
    std::vector<std::size_t> count(nb, 0);
    for (const auto& d : days) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double mid = d.time_of_day[i] - 0.5 * d.frequency;
            auto b = static_cast<long>(std::floor(mid / bin_width));
            b = std::clamp(b, 0L, static_cast<long>(nb) - 1);
            const double c = d.changes[i];
            sum[static_cast<std::size_t>(b)] += c * c;
            ++count[static_cast<std::size_t>(b)];
        }
    }
    std::vector<double> mean(nb, 0.0);
    std::vector<std::size_t> filled;
    for (std::size_t b = 0; b < nb; ++b) {
        if (count[b] > 0) {
            mean[b] = sum[b] / static_cast<double>(count[b]);
            filled.push_back(b);
        }
    }
    if (filled.empty()) throw DomainError("no observations to estimate a diurnal profile");
    // Empty bins take the mean of the nearest filled bin (the earlier one on ties).
    for (std::size_t b = 0; b < nb; ++b) {
        if (count[b] > 0) continue;
        std::size_t nearest = filled.front();
        for (auto f : filled)
            if ((f > b ? f - b : b - f) < (nearest > b ? nearest - b : b - nearest)) nearest = f;
        mean[b] = mean[nearest];
    }

    DiurnalProfile p = DiurnalProfile::flat(bin_width);
    // Smooth on the bin-index scale so the penalty grid is independent of the width.
    std::vector<double> u(nb);
    for (std::size_t b = 0; b < nb; ++b) u[b] = p.knots[b] / bin_width;
    const auto fit = detail::smoothing_spline_gcv(u, mean);
    p.lambda = fit.lambda;
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        p.values[b] = std::max(fit.fitted[b], floor);
        total += p.values[b];
    }
    const double scale = total / static_cast<double>(nb);
    for (auto& v : p.values) v /= scale;
    p.floor = floor / scale;
    p.second = detail::natural_spline_second(p.knots, p.values);
    return p;
}

inline DiurnalProfile estimate_profile(const ChangeSeries& day, double bin_width = 300.0,
                                       double floor = 1e-6) {
    return estimate_profile(std::span<const ChangeSeries>(&day, 1), bin_width, floor);
}

/// ln s_t per observation, or an empty vector for "no profile".
inline std::vector<double> log_profile(const DiurnalProfile* p, const ChangeSeries& y) {
    return p ? p->log_values(y) : std::vector<double>{};
}

}  // namespace tickvol
