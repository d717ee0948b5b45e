#pragma once

// Out-of-sample evaluation, the static nu scan and fitted-versus-observed
// probabilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tickvol/diurnal.hpp"
#include "tickvol/dynamics.hpp"
#include "tickvol/estimate.hpp"
#include "tickvol/model.hpp"
#include "tickvol/parallel.hpp"
#include "tickvol/residuals.hpp"
#include "tickvol/series.hpp"

namespace tickvol {

struct EvalResult {
    std::optional<double> loglik_avg_oos;
    std::optional<double> archlm_oos;
    bool failed = false;          // some probability was numerically zero
    std::size_t underflows = 0;
    std::string message;
};

/// Filters `next_day` with the frozen parameters of `fit`, starting from the
/// long-run state and reusing the fit day's diurnal profile.
inline EvalResult evaluate_next_day(const FitResult& fit, const ChangeSeries& next_day,
                                    const DiurnalProfile* profile = nullptr, bool gas_literal = false) {
    EvalResult r;
    const ModelSpec spec{fit.family, gas_literal};
    try {
        const std::vector<double> ln_s =
            is_interval_family(fit.family) ? log_profile(profile, next_day) : std::vector<double>{};
        const FilterOutput out = run_filter(next_day, spec, fit.params, ln_s);
        r.underflows = out.underflow_count;
        r.failed = out.underflow_count > 0;
        if (!r.failed) r.loglik_avg_oos = out.loglik() / static_cast<double>(next_day.size());
        if (auto res = standardized_residuals(next_day, out, spec, fit.params)) r.archlm_oos = arch_lm(*res);
    } catch (const ScoreUndefinedError& e) {
        r.failed = true;
        r.message = e.what();
    } catch (const FilterDivergedError& e) {
        r.failed = true;
        r.message = e.what();
    }
    if (r.failed && r.message.empty())
        r.message = std::to_string(r.underflows) + " observations with zero probability";
    return r;
}

// ---------------------------------------------------------------------------
// Static nu scan
// ---------------------------------------------------------------------------

enum class LikelihoodKind { continuous_density, interval };

inline std::string_view name(LikelihoodKind k) {
    return k == LikelihoodKind::interval ? "interval" : "continuous_density";
}

inline LikelihoodKind parse_likelihood_kind(std::string_view s) {
    if (s == "interval") return LikelihoodKind::interval;
    if (s == "continuous_density" || s == "continuous") return LikelihoodKind::continuous_density;
    throw InputError("likelihood kind must be 'continuous_density' or 'interval'");
}

struct NuScanResult {
    LikelihoodKind kind = LikelihoodKind::continuous_density;
    std::vector<double> nu_grid;
    std::vector<double> sigma2_hat;
    std::vector<double> loglik_avg;
    std::vector<bool> floored;

    /// Index of the largest log-likelihood.
    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(loglik_avg.begin(), loglik_avg.end()) - loglik_avg.begin());
    }
    /// True when the maximum over the grid is not at either end.
    bool interior_max() const {
        const std::size_t i = argmax();
        return i > 0 && i + 1 < loglik_avg.size();
    }
};

/// 40 points spaced evenly in ln nu over [0.05, 50].
inline std::vector<double> default_nu_grid(std::size_t points = 40, double lo = 0.05, double hi = 50.0) {
    std::vector<double> g(points);
    if (points == 1) return {lo};
    for (std::size_t i = 0; i < points; ++i)
        g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                           static_cast<double>(points - 1));
    return g;
}

struct ScaleFit {
    double sigma2;
    double loglik_avg;
    bool floored;
};

/// Maximizes the static (mu = 0) log-likelihood over ln sigma2 >= ln 2^-1074
/// for fixed nu: a unit-step grid from the floor, then golden-section search
/// around the best grid point.
inline ScaleFit fit_static_scale(const ValueCounts& c, double nu, LikelihoodKind kind) {
    int maxabs = 0;
    for (int v : c.values) maxabs = std::max(maxabs, std::abs(v));
    auto ll = [&](double ls) {
        const double s2 = ls <= kLogDenormMin ? kDenormMin : std::exp(ls);
        return kind == LikelihoodKind::interval ? static_interval_loglik_avg(c, s2, nu)
                                                : static_t_loglik_avg(c, s2, nu);
    };
    const double lo = kLogDenormMin;
    const double hi = std::log(std::max(1.0, static_cast<double>(maxabs) * maxabs)) + 10.0;
    double best = lo, best_v = ll(lo);
    for (double ls = std::ceil(lo); ls <= hi; ls += 1.0) {
        const double v = ll(ls);
        if (v > best_v) {
            best_v = v;
            best = ls;
        }
    }
    double a = std::max(lo, best - 1.0), b = std::min(hi, best + 1.0);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = ll(x1), f2 = ll(x2);
    while (b - a > 1e-9 * std::max(1.0, std::abs(a))) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = ll(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = ll(x2);
        }
    }
    const double xm = 0.5 * (a + b), fm = ll(xm);
    if (fm > best_v) {
        best_v = fm;
        best = xm;
    }
    const bool floored = best <= lo + 1e-6;
    return {floored ? kDenormMin : std::exp(best), best_v, floored};
}

/// Profile log-likelihood of the static model over a grid of nu.
inline NuScanResult nu_scan(const ChangeSeries& y, const std::vector<double>& nu_grid, LikelihoodKind kind,
                            unsigned threads = 1) {
    if (y.empty()) throw DomainError("nu scan needs a nonempty series");
    if (nu_grid.empty()) throw DomainError("empty nu grid");
    for (double nu : nu_grid)
        if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("nu grid values must be positive");
    const ValueCounts c = ValueCounts::of(y);
    NuScanResult r;
    r.kind = kind;
    r.nu_grid = nu_grid;
    const std::size_t m = nu_grid.size();
    std::vector<ScaleFit> fits(m);
    parallel_for(m, threads, [&](std::size_t i) { fits[i] = fit_static_scale(c, nu_grid[i], kind); });
    for (const auto& f : fits) {
        r.sigma2_hat.push_back(f.sigma2);
        r.loglik_avg.push_back(f.loglik_avg);
        r.floored.push_back(f.floored);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Fitted versus observed
// ---------------------------------------------------------------------------

struct ProbabilityDiff {
    int k;
    double observed;
    double fitted;
    double diff;  // observed - fitted
};

/// Per integer k in [lo, hi]: empirical frequency minus the average over t of
/// `prob(t, k)`.
inline std::vector<ProbabilityDiff> fitted_vs_observed(const ChangeSeries& y, int lo, int hi,
                                                       const std::function<double(std::size_t, int)>& prob) {
    if (y.empty()) throw DomainError("empty series");
    if (hi < lo) throw DomainError("empty support");
    const double n = static_cast<double>(y.size());
    std::vector<ProbabilityDiff> out;
    for (int k = lo; k <= hi; ++k) {
        double obs = 0.0, fit = 0.0;
        for (std::size_t t = 0; t < y.size(); ++t) {
            if (y.changes[t] == k) obs += 1.0;
            fit += prob(t, k);
        }
        out.push_back({k, obs / n, fit / n, (obs - fit) / n});
    }
    return out;
}

/// Model version: filters `y` with the fitted parameters and uses the
/// conditional probabilities of each integer. Continuous-density families
/// contribute the mass of (k - 1/2, k + 1/2].
inline std::vector<ProbabilityDiff> fitted_vs_observed(const FitResult& fit, const ChangeSeries& y, int lo, int hi,
                                                       const DiurnalProfile* profile = nullptr,
                                                       bool gas_literal = false) {
    const ModelSpec spec{fit.family, gas_literal};
    const std::vector<double> ln_s =
        is_interval_family(fit.family) ? log_profile(profile, y) : std::vector<double>{};
    const FilterOutput out = run_filter(y, spec, fit.params, ln_s);
    const double nu = fit.params.find(Param::nu).value_or(0.0);
    const double pi = fit.params.find(Param::pi).value_or(0.0);
    const std::optional<StudentT> tk = nu > 0.0 ? std::optional<StudentT>(StudentT(nu)) : std::nullopt;
    const DistKind kind = is_interval_family(fit.family) ? dist_kind(fit.family) : DistKind::t;
    return fitted_vs_observed(y, lo, hi, [&](std::size_t t, int k) {
        const double mu = out.mu_path[t], s2 = out.sigma2_path[t];
        switch (kind) {
            case DistKind::normal:
                return std::exp(detail::interval_logprob_with(StandardNormal{}, k, mu, std::sqrt(s2)));
            case DistKind::t: return std::exp(detail::interval_logprob_with(*tk, k, mu, std::sqrt(s2)));
            case DistKind::skellam: return std::exp(detail::skellam_logpmf_unchecked(k, mu, s2));
            case DistKind::zi_skellam: {
                const double p = (1.0 - pi) * std::exp(detail::skellam_logpmf_unchecked(k, mu, s2));
                return k == 0 ? pi + p : p;
            }
        }
        return 0.0;
    });
}

}  // namespace tickvol
