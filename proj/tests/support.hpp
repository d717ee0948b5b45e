#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <functional>
#include <vector>

#include "tickvol/tickvol.hpp"

namespace tickvol::testing {

/// d f / d u at u by a five-point stencil.
inline double five_point(const std::function<double(double)>& f, double u, double h) {
    return (-f(u + 2 * h) + 8 * f(u + h) - 8 * f(u - h) + f(u - 2 * h)) / (12 * h);
}

/// Derivative with respect to ln sigma2 of `logp(sigma2)` at sigma2.
inline double fd_lnsigma2(const std::function<double(double)>& logp, double sigma2, double h = 1e-3) {
    const double u = std::log(sigma2);
    return five_point([&](double v) { return logp(std::exp(v)); }, u, h);
}

/// Relative error with a floor on the denominator, so scores that cross zero
/// are compared on an absolute scale.
inline double rel_err(double got, double want, double floor = 1e-3) {
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline int uniform_int(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(std::floor(rng.uniform() * (hi - lo + 1)));
}

/// Normal interval probability from erf/erfc, tail-aware.
inline double erf_interval(double a, double b) {
    if (a >= 0.0) return 0.5 * (std::erfc(a / std::sqrt(2.0)) - std::erfc(b / std::sqrt(2.0)));
    if (b <= 0.0) return 0.5 * (std::erfc(-b / std::sqrt(2.0)) - std::erfc(-a / std::sqrt(2.0)));
    return 0.5 * (std::erf(b / std::sqrt(2.0)) - std::erf(a / std::sqrt(2.0)));
}

inline ChangeSeries series_of(std::vector<int> v, double frequency = 1.0) {
    ChangeSeries y;
    y.frequency = frequency;
    for (std::size_t i = 0; i < v.size(); ++i) y.push_back(v[i], frequency * static_cast<double>(i + 1));
    return y;
}

/// Static Skellam(0, sigma2) sample of length n.
inline ChangeSeries skellam_sample(std::size_t n, double sigma2, std::uint64_t seed) {
    Rng rng(seed, 0);
    ChangeSeries y;
    y.frequency = kSessionSeconds / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = rng.poisson(0.5 * sigma2), b = rng.poisson(0.5 * sigma2);
        y.push_back(static_cast<int>(a - b), y.frequency * static_cast<double>(i + 1));
    }
    return y;
}

/// Zero-heavy series with heavy tails: rounded scale * t(nu) draws, redrawn
/// until |y| <= 10.
inline ChangeSeries heavy_zero_sample(std::size_t n, std::uint64_t seed, double scale = 0.5, double nu = 2.0) {
    Rng rng(seed, 0);
    ChangeSeries y;
    y.frequency = kSessionSeconds / static_cast<double>(n);
    while (y.size() < n) {
        const double x = scale * rng.student_t(nu);
        const int v = static_cast<int>(std::ceil(x - 0.5));
        if (std::abs(v) <= 10) y.push_back(v, y.frequency * static_cast<double>(y.size() + 1));
    }
    return y;
}

inline double zero_share(const ChangeSeries& y) {
    std::size_t z = 0;
    for (int v : y.changes) z += v == 0;
    return static_cast<double>(z) / static_cast<double>(y.size());
}

/// Random-walk trades on consecutive weekdays starting 2024-01-02, with
/// exponential gaps averaging `mean_gap_ms` inside the session and a few
/// trades before the open and after the close.
inline TickSeries synthetic_ticks(std::size_t days, std::uint64_t seed, double mean_gap_ms = 800.0) {
    Rng rng(seed, 1);
    TickSeries t;
    std::int32_t day = calendar::parse_date("2024-01-02");
    std::int64_t price = 18754;
    for (std::size_t d = 0; d < days; ++d, ++day) {
        while ((day + 4) % 7 == 6 || (day + 4) % 7 == 0) ++day;  // skip weekends
        std::int64_t ms = kSessionOpenMs - 5000;
        while (ms < kSessionCloseMs + 5000) {
            const double step = rng.normal();
            price = std::max<std::int64_t>(100, price + (std::abs(step) < 1.0 ? 0 : (step > 0 ? 1 : -1)));
            t.push_back(calendar::from_exchange_local(day, ms), price, day, ms);
            ms += 1 + static_cast<std::int64_t>(-mean_gap_ms * std::log(1.0 - rng.uniform()));
        }
    }
    return t;
}

}  // namespace tickvol::testing
