#pragma once

// Filter recursions. Each filter maps parameters and a change series to paths
// of location, scale, dynamic component, score and log-likelihood terms.
//
//   GARCH-t      y_t = mu + e_t,  sigma2_t = omega + alpha e_{t-1}^2 + phi sigma2_{t-1}
//   GAS-t        ln sigma2_t = omega + alpha score_{t-1} + phi ln sigma2_{t-1}
//   interval     mu_t = theta (y_{t-1} - mu_{t-1})
//                ln sigma2_t = omega + ln s_t + e_t,  e_t = alpha score_{t-1} + phi e_{t-1}
//
// All scores are derivatives with respect to ln sigma^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tickvol/dist.hpp"
#include "tickvol/error.hpp"
#include "tickvol/model.hpp"
#include "tickvol/series.hpp"

namespace tickvol {

/// ln of the smallest positive double, 2^-1074.
inline const double kLogDenormMin = std::log(std::numeric_limits<double>::denorm_min());
inline constexpr double kDenormMin = std::numeric_limits<double>::denorm_min();
// Above this ln sigma^2 the scale overflows.
inline constexpr double kLogSigma2Max = 709.0;

struct GarchParams {
    double mu = 0.0;
    double omega = 0.1;
    double alpha = 0.05;
    double phi = 0.9;
    double nu = 5.0;
};

struct GasContParams {
    double mu = 0.0;
    double omega = 0.0;
    double alpha = 0.05;
    double phi = 0.9;
    double nu = 5.0;
};

struct IntervalModelParams {
    double theta = 0.0;
    double omega = 0.0;
    double alpha = 0.0;
    double phi = 0.0;
    double nu = 5.0;  // t only
    double pi = 0.0;  // zero-inflated Skellam only
};

/// Recursion state entering the next observation. For interval models `mu`
/// and `e` are used; GARCH carries `sigma2`; GAS carries `sigma2` (its log is
/// the state).
struct FilterState {
    double mu = 0.0;
    double e = 0.0;
    double sigma2 = 1.0;
};

struct FilterOutput {
    std::vector<double> mu_path;
    std::vector<double> sigma2_path;
    std::vector<double> e_path;
    std::vector<double> score_path;
    std::vector<double> loglik_terms;
    std::size_t underflow_count = 0;
    std::size_t sigma2_floored = 0;  // steps where ln sigma2 hit ln 2^-1074
    std::size_t rate_floored = 0;    // Skellam steps where sigma2 was raised to |mu|
    FilterState next_state;

    void reserve(std::size_t n) {
        mu_path.reserve(n);
        sigma2_path.reserve(n);
        e_path.reserve(n);
        score_path.reserve(n);
        loglik_terms.reserve(n);
    }

    /// Sum of the terms; -infinity as soon as one term underflowed.
    double loglik() const {
        if (underflow_count > 0) return -special::kInf;
        double s = 0.0;
        for (double v : loglik_terms) s += v;
        return s;
    }
};

/// Cheap result of a filter run without paths.
struct FilterSummary {
    double loglik = 0.0;
    std::size_t underflow_count = 0;
    std::size_t sigma2_floored = 0;
    std::size_t rate_floored = 0;
    std::size_t n = 0;
    FilterState next_state;

    double loglik_avg() const { return n == 0 ? 0.0 : loglik / static_cast<double>(n); }
};

namespace detail {

inline void check_length(const ChangeSeries& y, std::size_t min_len = 1) {
    if (y.size() < min_len)
        throw DomainError("series needs at least " + std::to_string(min_len) + " observations");
    if (y.time_of_day.size() != y.changes.size())
        throw DomainError("time_of_day and changes differ in length");
}

inline void record(FilterOutput* out, double mu, double sigma2, double e, double score,
                   double lp) {
    if (!out) return;
    out->mu_path.push_back(mu);
    out->sigma2_path.push_back(sigma2);
    out->e_path.push_back(e);
    out->score_path.push_back(score);
    out->loglik_terms.push_back(lp);
}

struct NormalStep {
    StandardNormal k;
    LogProbScore operator()(int y, double mu, double sigma2) const {
        return interval_eval(k, y, mu, std::sqrt(sigma2));
    }
};

struct TStep {
    StudentT k;
    LogProbScore operator()(int y, double mu, double sigma2) const {
        return interval_eval(k, y, mu, std::sqrt(sigma2));
    }
};

struct SkellamStep {
    LogProbScore operator()(int y, double mu, double sigma2) const {
        return skellam_eval_checked(y, mu, sigma2);
    }
};

struct ZiSkellamStep {
    double pi;
    LogProbScore operator()(int y, double mu, double sigma2) const {
        return zi_skellam_eval(y, mu, sigma2, pi);
    }
};

template <class Step>
FilterSummary run_interval(const ChangeSeries& y, const IntervalModelParams& p,
                           std::span<const double> ln_s, const Step& step, bool skellam_floor,
                           const std::optional<FilterState>& init, FilterOutput* out) {
    const std::size_t n = y.size();
    if (!ln_s.empty() && ln_s.size() != n)
        throw DomainError("diurnal profile is not aligned with the series");
    FilterSummary sum;
    sum.n = n;
    double mu = init ? init->mu : 0.0;
    double e = init ? init->e : 0.0;
    if (out) out->reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        double ls2 = p.omega + (ln_s.empty() ? 0.0 : ln_s[t]) + e;
        if (!std::isfinite(ls2) || ls2 > kLogSigma2Max)
            throw FilterDivergedError("log variance diverged", t);
        if (ls2 < kLogDenormMin) {
            ls2 = kLogDenormMin;
            ++sum.sigma2_floored;
        }
        double s2 = std::exp(ls2);
        if (skellam_floor) {
            const double lower = std::abs(mu) * (1.0 + 1e-12);
            if (s2 <= lower) {
                s2 = lower > 0.0 ? lower : kDenormMin;
                ++sum.rate_floored;
            }
        }
        const int yt = y.changes[t];
        const LogProbScore r = step(yt, mu, s2);
        if (!std::isfinite(r.score))
            throw ScoreUndefinedError("score undefined at observation " + std::to_string(t), t);
        if (r.logp == -special::kInf)
            ++sum.underflow_count;
        else
            sum.loglik += r.logp;
        record(out, mu, s2, e, r.score, r.logp);
        mu = p.theta * (yt - mu);
        e = p.alpha * r.score + p.phi * e;
    }
    sum.next_state = {mu, e, 0.0};
    if (sum.underflow_count > 0) sum.loglik = -special::kInf;
    if (out) {
        out->underflow_count = sum.underflow_count;
        out->sigma2_floored = sum.sigma2_floored;
        out->rate_floored = sum.rate_floored;
        out->next_state = sum.next_state;
    }
    return sum;
}

inline FilterSummary run_garch(const ChangeSeries& y, const GarchParams& p,
                               const std::optional<FilterState>& init, FilterOutput* out) {
    const StudentT k(p.nu);
    FilterSummary sum;
    sum.n = y.size();
    double s2 = 0.0;
    if (init) {
        s2 = init->sigma2;
    } else if (p.alpha + p.phi < 1.0) {
        s2 = p.omega / (1.0 - p.alpha - p.phi);
    } else {
        // No unconditional variance: start at the sample second moment about mu.
        double m = 0.0;
        for (int v : y.changes) m += (v - p.mu) * (v - p.mu);
        s2 = std::max(m / static_cast<double>(y.size()), p.omega);
    }
    if (out) out->reserve(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (!std::isfinite(s2)) throw FilterDivergedError("variance diverged", t);
        if (s2 < kDenormMin) {
            s2 = kDenormMin;
            ++sum.sigma2_floored;
        }
        const double e = y.changes[t] - p.mu;
        const double lp = t_log_density(y.changes[t], p.mu, s2, k);
        sum.loglik += lp;
        record(out, p.mu, s2, e, t_density_score_lnsigma2(y.changes[t], p.mu, s2, p.nu), lp);
        s2 = p.omega + p.alpha * e * e + p.phi * s2;
    }
    sum.next_state = {p.mu, 0.0, s2};
    if (out) {
        out->sigma2_floored = sum.sigma2_floored;
        out->next_state = sum.next_state;
    }
    return sum;
}

inline FilterSummary run_gas(const ChangeSeries& y, const GasContParams& p, bool literal,
                             const std::optional<FilterState>& init, FilterOutput* out) {
    const StudentT k(p.nu);
    FilterSummary sum;
    sum.n = y.size();
    if (!init && !(std::abs(p.phi) < 1.0)) throw DomainError("GAS filter requires |phi| < 1");
    double ls2 = init ? std::log(init->sigma2) : p.omega / (1.0 - p.phi);
    if (out) out->reserve(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (!std::isfinite(ls2) || ls2 > kLogSigma2Max)
            throw FilterDivergedError("log variance diverged", t);
        if (ls2 < kLogDenormMin) {
            ls2 = kLogDenormMin;
            ++sum.sigma2_floored;
        }
        const double s2 = std::exp(ls2);
        const double lp = t_log_density(y.changes[t], p.mu, s2, k);
        const double score = t_density_score_lnsigma2(y.changes[t], p.mu, s2, p.nu);
        sum.loglik += lp;
        record(out, p.mu, s2, ls2, score, lp);
        ls2 = p.omega + p.alpha * score + p.phi * (literal ? s2 : ls2);
    }
    sum.next_state = {p.mu, 0.0, std::exp(ls2)};
    if (out) {
        out->sigma2_floored = sum.sigma2_floored;
        out->next_state = sum.next_state;
    }
    return sum;
}

}  // namespace detail

inline void validate(const GarchParams& p) {
    if (!(p.omega > 0.0) || !(p.alpha >= 0.0) || !(p.phi >= 0.0) || !(p.nu > 0.0) ||
        !std::isfinite(p.mu) || !std::isfinite(p.omega + p.alpha + p.phi + p.nu))
        throw DomainError("GARCH parameters require omega > 0, alpha >= 0, phi >= 0, nu > 0");
}

inline void validate(const GasContParams& p) {
    if (!(std::abs(p.phi) < 1.0) || !(p.nu > 0.0) || !std::isfinite(p.mu) ||
        !std::isfinite(p.omega) || !std::isfinite(p.alpha))
        throw DomainError("GAS parameters require |phi| < 1 and nu > 0");
}

inline void validate(const IntervalModelParams& p, DistKind kind) {
    if (!(std::abs(p.theta) < 1.0) || !(std::abs(p.phi) < 1.0) || !std::isfinite(p.omega) ||
        !std::isfinite(p.alpha))
        throw DomainError("interval model requires |theta| < 1, |phi| < 1, finite omega, alpha");
    if (kind == DistKind::t && !(p.nu > 0.0 && std::isfinite(p.nu)))
        throw DomainError("t model requires nu > 0");
    if (kind == DistKind::zi_skellam && !(p.pi >= 0.0 && p.pi < 1.0))
        throw DomainError("zero inflation requires 0 <= pi < 1");
}

/// Continuous GARCH(1,1)-t. sigma2_1 is the unconditional variance when
/// alpha + phi < 1, else the sample second moment. `e_path` holds residuals.
inline FilterOutput filter_garch(const ChangeSeries& y, const GarchParams& p,
                                 const std::optional<FilterState>& init = std::nullopt) {
    validate(p);
    detail::check_length(y);
    FilterOutput out;
    detail::run_garch(y, p, init, &out);
    return out;
}

/// Continuous score-driven t. ln sigma2_1 = omega / (1 - phi). `e_path` holds
/// ln sigma2_t. With `literal`, phi multiplies sigma2_{t-1} instead of its log.
inline FilterOutput filter_gas_continuous(const ChangeSeries& y, const GasContParams& p,
                                          bool literal = false,
                                          const std::optional<FilterState>& init = std::nullopt) {
    validate(p);
    detail::check_length(y);
    FilterOutput out;
    detail::run_gas(y, p, literal, init, &out);
    return out;
}

namespace detail {

template <class Fn>
decltype(auto) with_interval_step(DistKind kind, const IntervalModelParams& p, Fn&& fn) {
    switch (kind) {
        case DistKind::normal: return fn(NormalStep{}, false);
        case DistKind::t: return fn(TStep{StudentT(p.nu)}, false);
        case DistKind::skellam: return fn(SkellamStep{}, true);
        case DistKind::zi_skellam: return fn(ZiSkellamStep{p.pi}, true);
    }
    throw DomainError("unknown distribution");
}

}  // namespace detail

/// Interval (normal, t) or pmf (Skellam families) model with MA(1) location
/// and score-driven log variance. `ln_s` holds ln s_t per observation; empty
/// means no diurnal term. Underflowed terms are -infinity and counted.
inline FilterOutput filter_interval(const ChangeSeries& y, const IntervalModelParams& p,
                                    std::span<const double> ln_s, DistKind kind,
                                    const std::optional<FilterState>& init = std::nullopt) {
    validate(p, kind);
    detail::check_length(y);
    FilterOutput out;
    detail::with_interval_step(kind, p, [&](const auto& step, bool floor) {
        return detail::run_interval(y, p, ln_s, step, floor, init, &out);
    });
    return out;
}

/// Same recursion without storing paths.
inline FilterSummary filter_interval_summary(const ChangeSeries& y, const IntervalModelParams& p,
                                             std::span<const double> ln_s, DistKind kind,
                                             const std::optional<FilterState>& init = std::nullopt) {
    validate(p, kind);
    detail::check_length(y);
    return detail::with_interval_step(kind, p, [&](const auto& step, bool floor) {
        return detail::run_interval(y, p, ln_s, step, floor, init, nullptr);
    });
}

/// Constant-scale continuous t with zero location.
inline FilterOutput filter_static_t(const ChangeSeries& y, double sigma2, double nu) {
    validate(TParams{0.0, sigma2, nu});
    const StudentT k(nu);
    FilterOutput out;
    out.reserve(y.size());
    for (int v : y.changes)
        detail::record(&out, 0.0, sigma2, v, t_density_score_lnsigma2(v, 0.0, sigma2, nu),
                       t_log_density(v, 0.0, sigma2, k));
    out.next_state = {0.0, 0.0, sigma2};
    return out;
}

// ---------------------------------------------------------------------------
// Conversions from named parameter vectors
// ---------------------------------------------------------------------------

inline GarchParams garch_params(const ParamVector& p) {
    return {p.get(Param::mu), p.get(Param::omega), p.get(Param::alpha), p.get(Param::phi),
            p.get(Param::nu)};
}

inline GasContParams gas_params(const ParamVector& p) {
    return {p.get(Param::mu), p.get(Param::omega), p.get(Param::alpha), p.get(Param::phi),
            p.get(Param::nu)};
}

inline IntervalModelParams interval_params(const ParamVector& p) {
    IntervalModelParams q;
    q.theta = p.get(Param::theta);
    q.omega = p.get(Param::omega);
    q.alpha = p.get(Param::alpha);
    q.phi = p.get(Param::phi);
    if (auto nu = p.find(Param::nu)) q.nu = *nu;
    if (auto pi = p.find(Param::pi)) q.pi = *pi;
    return q;
}

/// Runs the filter matching `spec`.
inline FilterOutput run_filter(const ChangeSeries& y, const ModelSpec& spec, const ParamVector& p,
                               std::span<const double> ln_s = {},
                               const std::optional<FilterState>& init = std::nullopt) {
    switch (spec.family) {
        case Family::garch_t: return filter_garch(y, garch_params(p), init);
        case Family::gas_t: return filter_gas_continuous(y, gas_params(p), spec.gas_literal, init);
        case Family::static_t: return filter_static_t(y, p.get(Param::sigma2), p.get(Param::nu));
        default:
            return filter_interval(y, interval_params(p), ln_s, dist_kind(spec.family), init);
    }
}

/// Total log-likelihood; -infinity if any term underflowed.
inline double loglik(const ChangeSeries& y, const ModelSpec& spec, const ParamVector& p,
                     std::span<const double> ln_s = {}) {
    if (is_interval_family(spec.family)) {
        return filter_interval_summary(y, interval_params(p), ln_s, dist_kind(spec.family)).loglik;
    }
    if (spec.family == Family::garch_t) {
        const auto g = garch_params(p);
        validate(g);
        detail::check_length(y);
        return detail::run_garch(y, g, std::nullopt, nullptr).loglik;
    }
    if (spec.family == Family::gas_t) {
        const auto g = gas_params(p);
        validate(g);
        detail::check_length(y);
        return detail::run_gas(y, g, spec.gas_literal, std::nullopt, nullptr).loglik;
    }
    return run_filter(y, spec, p, ln_s).loglik();
}

inline double loglik_avg(const ChangeSeries& y, const ModelSpec& spec, const ParamVector& p,
                         std::span<const double> ln_s = {}) {
    return loglik(y, spec, p, ln_s) / static_cast<double>(y.size());
}

}  // namespace tickvol
