#pragma once

// Maximum-likelihood estimation: parameter transforms, bound regimes, per-day
// multi-start fits and median summaries across days.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tickvol/diurnal.hpp"
#include "tickvol/dynamics.hpp"
#include "tickvol/error.hpp"
#include "tickvol/model.hpp"
#include "tickvol/optimize.hpp"
#include "tickvol/parallel.hpp"
#include "tickvol/residuals.hpp"
#include "tickvol/series.hpp"

namespace tickvol {

/// Bounds imposed during estimation.
struct BoundRegime {
    std::string name = "unbounded";
    std::optional<double> nu_lower;  // empty: nu > 0
    bool alpha_nonneg = false;       // score coefficient >= 0
    bool garch_stationarity = true;  // alpha + phi < 1 in the GARCH recursion

    double nu_floor() const { return nu_lower.value_or(0.0); }

    static BoundRegime rugarch_like() { return {"rugarch-like", 2.1, false, true}; }
    static BoundRegime fgarch_like() { return {"fgarch-like", 2.0, false, false}; }
    static BoundRegime gas_like() { return {"gas-like", 4.0, false, true}; }
    static BoundRegime unbounded() { return {"unbounded", std::nullopt, false, true}; }
};

inline BoundRegime parse_regime(std::string_view s) {
    if (s == "rugarch-like") return BoundRegime::rugarch_like();
    if (s == "fgarch-like") return BoundRegime::fgarch_like();
    if (s == "gas-like") return BoundRegime::gas_like();
    if (s == "unbounded") return BoundRegime::unbounded();
    throw InputError("unknown bound regime '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Half-width of the box on omega for the interval and Skellam families.
inline constexpr double kOmegaBox = 30.0;
/// Estimates of nu above this are rejected as numerically meaningless.
inline constexpr double kNuMax = 1e6;

namespace detail {

inline double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline void require(bool ok, Param p, const char* what) {
    if (!ok) throw DomainError("parameter " + std::string(name(p)) + " outside its region: " + what);
}

}  // namespace detail

/// Maps an admissible parameter vector to unconstrained coordinates.
inline std::vector<double> transform(const ParamVector& p, Family f, const BoundRegime& r) {
    if (!p.all_finite()) throw DomainError("non-finite parameter");
    std::vector<double> x(p.size());
    const bool garch = f == Family::garch_t;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Param n = p.names()[i];
        const double v = p.values()[i];
        switch (n) {
            case Param::mu: x[i] = v; break;
            case Param::theta:
                detail::require(std::abs(v) < 1.0, n, "|theta| < 1");
                x[i] = 2.0 * std::atanh(v);
                break;
            case Param::omega:
                if (garch) {
                    detail::require(v > 0.0, n, "omega > 0");
                    x[i] = std::log(v);
                } else if (f == Family::gas_t) {
                    x[i] = v;
                } else {
                    detail::require(std::abs(v) < kOmegaBox, n, "|omega| < 30");
                    x[i] = kOmegaBox * std::atanh(v / kOmegaBox);
                }
                break;
            case Param::alpha:
            case Param::phi:
                if (garch) {
                    const double a = p.get(Param::alpha), b = p.get(Param::phi);
                    detail::require(a > 0.0 && b > 0.0, n, "alpha, phi > 0");
                    if (r.garch_stationarity) {
                        detail::require(a + b < 1.0, n, "alpha + phi < 1");
                        x[i] = std::log(v) - std::log1p(-(a + b));
                    } else {
                        detail::require(v < 1.0, n, "< 1");
                        x[i] = detail::logit(v);
                    }
                } else if (n == Param::phi) {
                    detail::require(std::abs(v) < 1.0, n, "|phi| < 1");
                    x[i] = 2.0 * std::atanh(v);
                } else if (r.alpha_nonneg) {
                    detail::require(v > 0.0, n, "alpha > 0");
                    x[i] = std::log(v);
                } else {
                    x[i] = v;
                }
                break;
            case Param::nu:
                detail::require(v > r.nu_floor(), n, "nu above the regime bound");
                x[i] = std::log(v - r.nu_floor());
                break;
            case Param::pi:
                detail::require(v > 0.0 && v < 1.0, n, "0 < pi < 1");
                x[i] = detail::logit(v);
                break;
            case Param::sigma2:
                detail::require(v > 0.0, n, "sigma2 > 0");
                x[i] = std::log(v);
                break;
        }
    }
    return x;
}

/// Inverse of `transform`. For static scales, sigma2 never drops below 2^-1074.
inline ParamVector untransform(const std::vector<double>& x, Family f, const BoundRegime& r) {
    ParamVector p(f);
    if (x.size() != p.size()) throw DomainError("wrong number of unconstrained coordinates");
    const bool garch = f == Family::garch_t;
    double garch_denom = 1.0;
    if (garch && r.garch_stationarity) {
        const double xa = x[p.index(Param::alpha)], xb = x[p.index(Param::phi)];
        const double m = std::max({0.0, xa, xb});
        garch_denom = std::exp(-m) + std::exp(xa - m) + std::exp(xb - m);
        p.set(Param::alpha, std::exp(xa - m) / garch_denom);
        p.set(Param::phi, std::exp(xb - m) / garch_denom);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Param n = p.names()[i];
        const double v = x[i];
        switch (n) {
            case Param::mu: p.values()[i] = v; break;
            case Param::theta: p.values()[i] = std::tanh(0.5 * v); break;
            case Param::omega:
                if (garch)
                    p.values()[i] = std::exp(v);
                else if (f == Family::gas_t)
                    p.values()[i] = v;
                else
                    p.values()[i] = kOmegaBox * std::tanh(v / kOmegaBox);
                break;
            case Param::alpha:
            case Param::phi:
                if (garch) {
                    if (!r.garch_stationarity) p.values()[i] = detail::sigmoid(v);
                } else if (n == Param::phi) {
                    p.values()[i] = std::tanh(0.5 * v);
                } else {
                    p.values()[i] = r.alpha_nonneg ? std::exp(v) : v;
                }
                break;
            case Param::nu: p.values()[i] = r.nu_floor() + std::exp(v); break;
            case Param::pi: p.values()[i] = detail::sigmoid(v); break;
            case Param::sigma2: p.values()[i] = std::max(std::exp(v), kDenormMin); break;
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Static continuous t on value counts
// ---------------------------------------------------------------------------

/// Distinct values of a series with their counts; the static likelihood only
/// depends on these.
struct ValueCounts {
    std::vector<int> values;
    std::vector<double> counts;
    double n = 0.0;

    static ValueCounts of(const ChangeSeries& y) {
        std::map<int, double> m;
        for (int v : y.changes) m[v] += 1.0;
        ValueCounts c;
        for (const auto& [v, k] : m) {
            c.values.push_back(v);
            c.counts.push_back(k);
        }
        c.n = static_cast<double>(y.size());
        return c;
    }
};

/// Average continuous t log density at mu = 0.
inline double static_t_loglik_avg(const ValueCounts& c, double sigma2, double nu) {
    const StudentT k(nu);
    double s = 0.0;
    for (std::size_t i = 0; i < c.values.size(); ++i)
        s += c.counts[i] * t_log_density(c.values[i], 0.0, sigma2, k);
    return s / c.n;
}

/// Average interval t log-likelihood at mu = 0 (-infinity on underflow).
inline double static_interval_loglik_avg(const ValueCounts& c, double sigma2, double nu) {
    const StudentT k(nu);
    const double sigma = std::sqrt(sigma2);
    double s = 0.0;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        const double lp = detail::interval_logprob_with(k, c.values[i], 0.0, sigma);
        if (lp == -special::kInf) return -special::kInf;
        s += c.counts[i] * lp;
    }
    return s / c.n;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitOptions {
    int max_evals = 3000;        // budget of the final run
    int start_evals = -1;        // budget per start in the screening stage; -1 = 15 (k + 1)
    double ftol = 1e-9;          // per-observation objective tolerance
    std::size_t min_length = 50;
    std::vector<ParamVector> warm_starts;  // tried alongside the fixed starts
    bool diagnostics = true;               // ARCH-LM on the fitted residuals
};

struct FitResult {
    Family family = Family::t;
    std::string regime;
    std::int32_t day = 0;
    std::size_t n = 0;
    ParamVector params;
    double loglik_avg = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;
    int objective_evals = 0;
    std::vector<Param> at_bound;
    bool sigma2_floored = false;
    std::size_t rate_floored = 0;
    std::optional<double> archlm;
    std::string message;

    bool is_at_bound(Param p) const {
        return std::find(at_bound.begin(), at_bound.end(), p) != at_bound.end();
    }
};

namespace detail {

struct StartRow {
    double theta, alpha, phi, nu, pi, omega_shift;
};

// Dispersed fixed starting points; omega and mu come from the data.
inline constexpr StartRow kStarts[5] = {
    {-0.2, 0.05, 0.95, 8.0, 0.2, 0.0},
    {0.0, 0.02, 0.98, 4.0, 0.4, 0.0},
    {-0.4, 0.10, 0.80, 15.0, 0.1, 0.3},
    {0.1, 0.01, 0.50, 3.0, 0.05, -0.3},
    {-0.1, 0.15, 0.99, 30.0, 0.3, 0.0},
};

inline constexpr double kGarchStarts[5][2] = {
    {0.05, 0.90}, {0.10, 0.85}, {0.02, 0.95}, {0.20, 0.60}, {0.05, 0.50}};

inline constexpr double kStaticStarts[5][2] = {
    {0.0, 5.0}, {-4.6, 2.0}, {-13.8, 1.0}, {-230.0, 0.3}, {-740.0, 0.1}};

inline std::vector<ParamVector> fixed_starts(const ChangeSeries& y, Family f, const BoundRegime& r) {
    double mean = 0.0;
    for (int v : y.changes) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (int v : y.changes) var += (v - mean) * (v - mean);
    var = std::max(var / static_cast<double>(y.size()), 1e-2);
    const double lv = std::log(var);
    auto nu_of = [&](double nu) { return std::max(nu, r.nu_floor() + 0.5 * std::max(1.0, r.nu_floor())); };

    std::vector<ParamVector> out;
    for (int s = 0; s < 5; ++s) {
        const StartRow& row = kStarts[s];
        ParamVector p(f);
        switch (f) {
            case Family::garch_t: {
                const double a = kGarchStarts[s][0], b = kGarchStarts[s][1];
                p = ParamVector(f, {mean, var * (1.0 - a - b), a, b, nu_of(row.nu)});
                break;
            }
            case Family::gas_t:
                p = ParamVector(f, {mean, lv * (1.0 - row.phi), row.alpha, row.phi, nu_of(row.nu)});
                break;
            case Family::static_t:
                p = ParamVector(f, {std::max(std::exp(lv + kStaticStarts[s][0]), 1e-320),
                                    nu_of(kStaticStarts[s][1])});
                break;
            default: {
                const double omega = std::clamp(lv + row.omega_shift, -0.9 * kOmegaBox, 0.9 * kOmegaBox);
                p.set(Param::theta, row.theta);
                p.set(Param::omega, omega);
                p.set(Param::alpha, row.alpha);
                p.set(Param::phi, row.phi);
                if (p.has(Param::nu)) p.set(Param::nu, nu_of(row.nu));
                if (p.has(Param::pi)) p.set(Param::pi, row.pi);
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace detail

/// Average log-likelihood of one day under `spec` (profile ignored by the
/// continuous families). -infinity on underflow; throws on filter failure.
inline double day_loglik_avg(const ChangeSeries& y, const ModelSpec& spec, const ParamVector& p,
                             std::span<const double> ln_s) {
    if (spec.family == Family::static_t)
        return static_t_loglik_avg(ValueCounts::of(y), p.get(Param::sigma2), p.get(Param::nu));
    return loglik_avg(y, spec, p, is_interval_family(spec.family) ? ln_s : std::span<const double>{});
}

namespace detail {

inline std::vector<Param> find_at_bound(const FitResult& fit, const BoundRegime& r,
                                        const std::function<double(const ParamVector&)>& avg_ll) {
    std::vector<Param> out;
    const ParamVector& p = fit.params;
    const double tol_ll = 1e-9;
    auto no_worse_at = [&](Param n, double bound) {
        ParamVector q = p;
        q.set(n, bound);
        try {
            return avg_ll(q) >= fit.loglik_avg - tol_ll;
        } catch (...) {
            return false;
        }
    };
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Param n = p.names()[i];
        const double v = p.values()[i];
        bool hit = false;
        switch (n) {
            case Param::theta: hit = 1.0 - std::abs(v) < 1e-6; break;
            case Param::phi:
                if (fit.family == Family::garch_t)
                    hit = v < 1e-8 || (r.garch_stationarity
                                           ? 1.0 - v - p.get(Param::alpha) < 1e-6
                                           : 1.0 - v < 1e-6);
                else
                    hit = 1.0 - std::abs(v) < 1e-6;
                break;
            case Param::omega:
                if (fit.family == Family::garch_t)
                    hit = v < 1e-8;
                else if (is_interval_family(fit.family))
                    hit = kOmegaBox - std::abs(v) < 1e-3 ||
                          no_worse_at(n, v < 0.0 ? -kOmegaBox : kOmegaBox);
                break;
            case Param::alpha:
                if (fit.family == Family::garch_t)
                    hit = v < 1e-8 || (!r.garch_stationarity && 1.0 - v < 1e-6);
                else if (r.alpha_nonneg)
                    hit = v < 1e-6 || no_worse_at(n, 0.0);
                break;
            case Param::nu:
                if (r.nu_floor() > 0.0)
                    hit = v - r.nu_floor() < 1e-4 * std::max(1.0, r.nu_floor()) ||
                          no_worse_at(n, r.nu_floor());
                else
                    hit = v < 1e-6;
                break;
            case Param::pi: hit = v < 1e-6 || no_worse_at(n, 0.0); break;
            case Param::sigma2: hit = fit.sigma2_floored; break;
            case Param::mu: break;
        }
        if (hit) out.push_back(n);
    }
    return out;
}

}  // namespace detail

/// Fits one day. Each of five fixed starts (plus any warm starts) gets a short
/// simplex run; the best is then optimized to convergence.
inline FitResult fit_day(const ChangeSeries& y, const ModelSpec& spec, const BoundRegime& regime,
                         const DiurnalProfile* profile = nullptr, const FitOptions& opt = {}) {
    if (y.size() < opt.min_length)
        throw DomainError("series has " + std::to_string(y.size()) + " observations; at least " +
                          std::to_string(opt.min_length) + " required");
    const Family f = spec.family;
    FitResult fit;
    fit.family = f;
    fit.regime = regime.name;
    fit.day = y.day;
    fit.n = y.size();

    const std::vector<double> ln_s = is_interval_family(f) ? log_profile(profile, y) : std::vector<double>{};
    const ValueCounts counts = f == Family::static_t ? ValueCounts::of(y) : ValueCounts{};
    auto avg_ll = [&](const ParamVector& p) -> double {
        if (p.has(Param::nu) && p.get(Param::nu) > kNuMax) return -special::kInf;
        if (f == Family::static_t)
            return static_t_loglik_avg(counts, p.get(Param::sigma2), p.get(Param::nu));
        return loglik_avg(y, spec, p, ln_s);
    };
    const Objective objective = [&](const std::vector<double>& x) {
        return -avg_ll(untransform(x, f, regime));
    };

    std::vector<ParamVector> starts = detail::fixed_starts(y, f, regime);
    starts.insert(starts.end(), opt.warm_starts.begin(), opt.warm_starts.end());
    const int dim = static_cast<int>(param_names(f).size());
    OptimizeOptions screen;
    screen.max_evals = opt.start_evals > 0 ? opt.start_evals : 15 * (dim + 1);
    screen.ftol = opt.ftol;
    screen.polish = false;

    std::optional<OptimizeResult> best;
    int evals = 0;
    for (const auto& s : starts) {
        std::vector<double> x0;
        try {
            x0 = transform(s, f, regime);
        } catch (const DomainError&) {
            continue;
        }
        auto r = minimize(objective, x0, screen);
        evals += r.evals;
        if (std::isfinite(r.f) && (!best || r.f < best->f)) best = std::move(r);
    }
    if (!best) {
        fit.params = starts.front();
        fit.objective_evals = evals;
        fit.message = "objective not finite at any start";
        return fit;
    }
    OptimizeOptions full;
    full.max_evals = opt.max_evals;
    full.ftol = opt.ftol;
    full.initial_step = 0.1;
    auto r = minimize(objective, best->x, full);
    evals += r.evals;
    fit.params = untransform(r.x, f, regime);
    fit.loglik_avg = -r.f;
    fit.converged = r.converged && std::isfinite(r.f);
    fit.iterations = r.iterations;
    fit.objective_evals = evals;
    if (!r.converged) fit.message = "evaluation budget exhausted";

    if (f == Family::static_t) {
        fit.sigma2_floored = r.x[fit.params.index(Param::sigma2)] <= kLogDenormMin;
        if (fit.sigma2_floored) fit.params.set(Param::sigma2, kDenormMin);
    }
    try {
        const FilterOutput out = run_filter(y, spec, fit.params, ln_s);
        if (f != Family::static_t) fit.sigma2_floored = out.sigma2_floored > 0;
        fit.rate_floored = out.rate_floored;
        if (opt.diagnostics) {
            if (auto res = standardized_residuals(y, out, spec, fit.params)) fit.archlm = arch_lm(*res);
        }
    } catch (const std::exception& e) {
        fit.message = e.what();
    }
    fit.at_bound = detail::find_at_bound(fit, regime, avg_ll);
    return fit;
}

/// Zero-inflated start from a Skellam estimate with a negligible pi, so the
/// zero-inflated fit can never end below the Skellam likelihood by more than
/// about pi per observation.
inline ParamVector zero_inflated_start(const ParamVector& skellam, double pi = 1e-10) {
    ParamVector z(Family::zi_skellam);
    for (Param p : {Param::theta, Param::omega, Param::alpha, Param::phi}) z.set(p, skellam.get(p));
    z.set(Param::pi, pi);
    return z;
}

// ---------------------------------------------------------------------------
// Across days
// ---------------------------------------------------------------------------

struct SummaryStat {
    std::optional<double> median;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

struct FitSummary {
    Family family = Family::t;
    std::size_t days = 0;
    std::size_t not_converged = 0;
    std::vector<std::pair<Param, SummaryStat>> params;
    SummaryStat archlm;
    SummaryStat loglik;
};

inline std::optional<double> median(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    const double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
    return 0.5 * (lo + hi);
}

namespace detail {

inline SummaryStat stat_of(const std::vector<std::optional<double>>& values) {
    SummaryStat s;
    std::vector<double> ok;
    for (const auto& v : values) {
        if (v && std::isfinite(*v))
            ok.push_back(*v);
        else
            ++s.excluded;
    }
    s.used = ok.size();
    s.median = median(std::move(ok));
    return s;
}

}  // namespace detail

/// Medians over days. Days that did not converge are excluded from every
/// statistic; days without an ARCH-LM value are also excluded from that one.
inline FitSummary summarize(std::span<const FitResult> fits, Family family) {
    FitSummary s;
    s.family = family;
    s.days = fits.size();
    for (const auto& f : fits)
        if (!f.converged) ++s.not_converged;
    for (Param p : param_names(family)) {
        std::vector<std::optional<double>> v;
        for (const auto& f : fits)
            v.push_back(f.converged && f.params.has(p) ? std::optional<double>(f.params.get(p)) : std::nullopt);
        s.params.emplace_back(p, detail::stat_of(v));
    }
    std::vector<std::optional<double>> a, l;
    for (const auto& f : fits) {
        a.push_back(f.converged ? f.archlm : std::nullopt);
        l.push_back(f.converged ? std::optional<double>(f.loglik_avg) : std::nullopt);
    }
    s.archlm = detail::stat_of(a);
    s.loglik = detail::stat_of(l);
    return s;
}

struct FitAllResult {
    std::vector<FitResult> fits;
    FitSummary summary;
};

/// Independent fits of every day. `profiles` is empty (no diurnal term), of
/// size one (shared), or aligned with `days`.
inline FitAllResult fit_all_days(std::span<const ChangeSeries> days, const ModelSpec& spec,
                                 const BoundRegime& regime, std::span<const DiurnalProfile> profiles = {},
                                 const FitOptions& opt = {}, unsigned threads = 1) {
    if (days.empty()) throw DomainError("no days to fit");
    if (profiles.size() > 1 && profiles.size() != days.size())
        throw DomainError("profiles must be empty, shared, or one per day");
    FitAllResult out;
    out.fits.resize(days.size());
    parallel_for(days.size(), threads, [&](std::size_t i) {
        const DiurnalProfile* prof =
            profiles.empty() ? nullptr : (profiles.size() == 1 ? &profiles[0] : &profiles[i]);
        try {
            out.fits[i] = fit_day(days[i], spec, regime, prof, opt);
        } catch (const std::exception& e) {
            FitResult failed;
            failed.family = spec.family;
            failed.regime = regime.name;
            failed.day = days[i].day;
            failed.n = days[i].size();
            failed.params = ParamVector(spec.family);
            failed.message = e.what();
            out.fits[i] = std::move(failed);
        }
    });
    out.summary = summarize(out.fits, spec.family);
    return out;
}

}  // namespace tickvol
