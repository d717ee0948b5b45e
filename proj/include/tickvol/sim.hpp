#pragma once

// Synthetic change series from the model recursions, plus brute-force
// probability oracles that share no code with dist.hpp.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tickvol/calendar.hpp"
#include "tickvol/diurnal.hpp"
#include "tickvol/dynamics.hpp"
#include "tickvol/error.hpp"
#include "tickvol/model.hpp"
#include "tickvol/parallel.hpp"
#include "tickvol/random.hpp"
#include "tickvol/series.hpp"

namespace tickvol {

struct SimSpec {
    ModelSpec model;
    ParamVector params;
    std::size_t n = 23'400;
    std::size_t days = 1;
    std::uint64_t seed = 1;
    std::optional<DiurnalProfile> diurnal;
    double frequency = 0.0;                // seconds per step; 0 = session length / n
    std::int32_t first_day = 19'724;       // 2024-01-02; later days skip weekends
};

struct SimResult {
    std::vector<ChangeSeries> days;
    std::size_t rate_floored = 0;  // Skellam steps with sigma2 raised to |mu|
    std::size_t clamped = 0;       // draws beyond +-2^30 cents, clamped
};

namespace detail {

inline constexpr double kDrawLimit = 1073741824.0;  // 2^30

inline int round_draw(double x, std::size_t& clamped) {
    // Nearest integer with halves rounded up: the interval (y - 1/2, y + 1/2].
    double y = std::ceil(x - 0.5);
    if (!(std::abs(y) <= kDrawLimit)) {
        ++clamped;
        y = std::isnan(y) ? 0.0 : std::copysign(kDrawLimit, y);
    }
    return static_cast<int>(y);
}

inline int skellam_draw(Rng& rng, double mu, double sigma2) {
    const double l1 = 0.5 * (sigma2 + mu), l2 = 0.5 * (sigma2 - mu);
    return static_cast<int>(rng.poisson(std::max(l1, 0.0)) - rng.poisson(std::max(l2, 0.0)));
}

inline std::vector<std::int32_t> trading_days(std::int32_t first, std::size_t count) {
    std::vector<std::int32_t> out;
    for (std::int32_t d = first; out.size() < count; ++d) {
        const int wd = calendar::weekday(d);
        if (wd != 0 && wd != 6) out.push_back(d);
    }
    return out;
}

struct DayDraw {
    ChangeSeries y;
    std::size_t rate_floored = 0;
    std::size_t clamped = 0;
};

inline DayDraw simulate_interval_day(const SimSpec& s, const ChangeSeries& grid, Rng& rng) {
    const IntervalModelParams p = interval_params(s.params);
    const DistKind kind = dist_kind(s.model.family);
    validate(p, kind);
    const std::vector<double> ln_s = s.diurnal ? s.diurnal->log_values(grid) : std::vector<double>{};
    DayDraw d;
    d.y = grid;
    double mu = 0.0, e = 0.0;
    with_interval_step(kind, p, [&](const auto& step, bool skellam_floor) {
        for (std::size_t t = 0; t < grid.size(); ++t) {
            double ls2 = p.omega + (ln_s.empty() ? 0.0 : ln_s[t]) + e;
            if (!std::isfinite(ls2) || ls2 > kLogSigma2Max)
                throw FilterDivergedError("log variance diverged in simulation", t);
            ls2 = std::max(ls2, kLogDenormMin);
            double s2 = std::exp(ls2);
            if (skellam_floor) {
                const double lower = std::abs(mu) * (1.0 + 1e-12);
                if (s2 <= lower) {
                    s2 = lower > 0.0 ? lower : kDenormMin;
                    ++d.rate_floored;
                }
            }
            int yt = 0;
            switch (kind) {
                case DistKind::normal:
                    yt = round_draw(mu + std::sqrt(s2) * rng.normal(), d.clamped);
                    break;
                case DistKind::t:
                    yt = round_draw(mu + std::sqrt(s2) * rng.student_t(p.nu), d.clamped);
                    break;
                case DistKind::skellam: yt = skellam_draw(rng, mu, s2); break;
                case DistKind::zi_skellam:
                    // Both draws are always taken so the stream position does not depend on pi.
                    {
                        const bool zero = rng.uniform() < p.pi;
                        const int k = skellam_draw(rng, mu, s2);
                        yt = zero ? 0 : k;
                    }
                    break;
            }
            d.y.changes[t] = yt;
            const LogProbScore r = step(yt, mu, s2);
            mu = p.theta * (yt - mu);
            e = p.alpha * r.score + p.phi * e;
        }
        return 0;
    });
    return d;
}

inline DayDraw simulate_continuous_day(const SimSpec& s, const ChangeSeries& grid, Rng& rng) {
    DayDraw d;
    d.y = grid;
    const Family f = s.model.family;
    if (f == Family::static_t) {
        const double sigma = std::sqrt(s.params.get(Param::sigma2)), nu = s.params.get(Param::nu);
        for (auto& v : d.y.changes) v = round_draw(sigma * rng.student_t(nu), d.clamped);
        return d;
    }
    if (f == Family::garch_t) {
        const GarchParams p = garch_params(s.params);
        validate(p);
        if (!(p.alpha + p.phi < 1.0)) throw DomainError("GARCH simulation requires alpha + phi < 1");
        double s2 = p.omega / (1.0 - p.alpha - p.phi);
        for (std::size_t t = 0; t < grid.size(); ++t) {
            const double x = p.mu + std::sqrt(s2) * rng.student_t(p.nu);
            d.y.changes[t] = round_draw(x, d.clamped);
            const double e = d.y.changes[t] - p.mu;
            s2 = std::max(p.omega + p.alpha * e * e + p.phi * s2, kDenormMin);
        }
        return d;
    }
    const GasContParams p = gas_params(s.params);
    validate(p);
    double ls2 = p.omega / (1.0 - p.phi);
    for (std::size_t t = 0; t < grid.size(); ++t) {
        if (!std::isfinite(ls2) || ls2 > kLogSigma2Max)
            throw FilterDivergedError("log variance diverged in simulation", t);
        ls2 = std::max(ls2, kLogDenormMin);
        const double s2 = std::exp(ls2);
        d.y.changes[t] = round_draw(p.mu + std::sqrt(s2) * rng.student_t(p.nu), d.clamped);
        const double score = t_density_score_lnsigma2(d.y.changes[t], p.mu, s2, p.nu);
        ls2 = p.omega + p.alpha * score + p.phi * (s.model.gas_literal ? s2 : ls2);
    }
    return d;
}

}  // namespace detail

/// Simulates `days` independent days. Day i uses Philox stream i under the
/// seed, so results do not depend on the thread count.
inline SimResult simulate(const SimSpec& s, unsigned threads = 1) {
    if (s.n < 2) throw DomainError("simulation needs n >= 2");
    if (s.days < 1) throw DomainError("simulation needs at least one day");
    if (s.params.names() != param_names(s.model.family))
        throw DomainError("parameters do not match the model family");
    if (!s.params.all_finite()) throw DomainError("non-finite simulation parameter");
    const double freq = s.frequency > 0.0 ? s.frequency : kSessionSeconds / static_cast<double>(s.n);
    if (freq * static_cast<double>(s.n) > kSessionSeconds * (1.0 + 1e-12))
        throw DomainError("n steps of the given frequency exceed the trading session");
    const auto labels = detail::trading_days(s.first_day, s.days);

    std::vector<detail::DayDraw> draws(s.days);
    parallel_for(s.days, threads, [&](std::size_t i) {
        ChangeSeries grid;
        grid.day = labels[i];
        grid.frequency = freq;
        grid.changes.assign(s.n, 0);
        grid.time_of_day.resize(s.n);
        for (std::size_t t = 0; t < s.n; ++t)
            grid.time_of_day[t] = std::min(static_cast<double>(t + 1) * freq, kSessionSeconds);
        Rng rng(s.seed, i);
        draws[i] = is_interval_family(s.model.family) ? detail::simulate_interval_day(s, grid, rng)
                                                      : detail::simulate_continuous_day(s, grid, rng);
    });
    SimResult out;
    for (auto& d : draws) {
        out.rate_floored += d.rate_floored;
        out.clamped += d.clamped;
        out.days.push_back(std::move(d.y));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// P(X1 - X2 = k) for independent Poisson counts, by direct convolution.
inline double oracle_skellam_pmf(int k, double lambda1, double lambda2, int truncation = 400) {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw DomainError("rates must be nonnegative");
    auto pois = [](long j, double lam) {
        if (j < 0) return 0.0;
        if (lam == 0.0) return j == 0 ? 1.0 : 0.0;
        const double jd = static_cast<double>(j);
        return std::exp(jd * std::log(lam) - lam - std::lgamma(jd + 1.0));
    };
    double covered1 = 0.0, covered2 = 0.0;
    for (long j = 0; j <= truncation; ++j) {
        covered1 += pois(j, lambda1);
        covered2 += pois(j, lambda2);
    }
    if (1.0 - covered1 > 1e-12 || 1.0 - covered2 > 1e-12)
        throw DomainError("truncation leaves more than 1e-12 of Poisson mass");
    double sum = 0.0;
    for (long j = std::max(0, k); j <= truncation + std::max(0, k); ++j) sum += pois(j, lambda1) * pois(j - k, lambda2);
    return sum;
}

/// P(y - 1/2 < X <= y + 1/2) for X = mu + sqrt(sigma2) T, by adaptive
/// Gauss-Kronrod quadrature of the density. nu <= 0 selects the normal kernel.
inline double oracle_interval_prob(int y, double mu, double sigma2, double nu) {
    const double sigma = std::sqrt(sigma2);
    std::function<double(double)> density;
    if (nu > 0.0) {
        const double c = std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) /
                         std::sqrt(nu * std::numbers::pi) / sigma;
        density = [=](double x) {
            const double z = (x - mu) / sigma;
            return c * std::pow(1.0 + z * z / nu, -0.5 * (nu + 1.0));
        };
    } else {
        const double c = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
        density = [=](double x) {
            const double z = (x - mu) / sigma;
            return c * std::exp(-0.5 * z * z);
        };
    }
    const double a = y - 0.5, b = y + 0.5;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto piece = [&](double lo, double hi) { return GK::integrate(density, lo, hi, 15, 1e-14); };
    // Split at the mode so a narrow peak is never straddled by one panel.
    if (mu > a && mu < b) return piece(a, mu) + piece(mu, b);
    return piece(a, b);
}

}  // namespace tickvol
