#pragma once

// Probability kernels for integer price changes: Student's t and normal
// (continuous, used directly or through interval probabilities), Skellam and
// zero-inflated Skellam. Every score is the derivative with respect to ln sigma^2.

#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>

#include "tickvol/error.hpp"
#include "tickvol/special.hpp"

namespace tickvol {

using special::kInf;

struct TParams {
    double mu = 0.0;
    double sigma2 = 1.0;
    double nu = 5.0;
};

/// Mean/variance parameterized Skellam: lambda1 = (sigma2 + mu)/2, lambda2 = (sigma2 - mu)/2.
struct SkellamParams {
    double mu = 0.0;
    double sigma2 = 1.0;

    double lambda1() const { return 0.5 * (sigma2 + mu); }
    double lambda2() const { return 0.5 * (sigma2 - mu); }
};

struct ZiSkellamParams {
    SkellamParams base;
    double pi = 0.0;
};

inline void validate(const TParams& p) {
    if (!std::isfinite(p.mu) || !std::isfinite(p.sigma2) || !std::isfinite(p.nu) ||
        !(p.sigma2 > 0.0) || !(p.nu > 0.0))
        throw DomainError("t parameters require finite mu, sigma2 > 0, nu > 0");
}

inline void validate(const SkellamParams& p) {
    if (!std::isfinite(p.mu) || !std::isfinite(p.sigma2) || !(p.sigma2 > 0.0) ||
        p.sigma2 < std::abs(p.mu))
        throw DomainError("Skellam parameters require sigma2 > 0 and sigma2 >= |mu|");
}

inline void validate(const ZiSkellamParams& p) {
    validate(p.base);
    if (!(p.pi >= 0.0 && p.pi < 1.0)) throw DomainError("zero inflation requires 0 <= pi < 1");
}

// ---------------------------------------------------------------------------
// Standardized continuous kernels
// ---------------------------------------------------------------------------

/// Standard Student's t with nu degrees of freedom. Constants depending only on
/// nu are computed once, so filters construct one kernel per evaluation.
class StudentT {
public:
    explicit StudentT(double nu) : nu_(nu) {
        if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("t kernel requires nu > 0");
        half_nu_ = 0.5 * nu;
        log_nu_ = std::log(nu);
        log_beta_ = special::lbeta_half(half_nu_);
        log_norm_ = -0.5 * log_nu_ - log_beta_;
        switch_ = (half_nu_ + 1.0) / (half_nu_ + 2.5);
    }

    double nu() const { return nu_; }

    double log_pdf(double x) const {
        const double ax = std::abs(x);
        if (ax < 1e100) return log_norm_ - 0.5 * (nu_ + 1.0) * std::log1p(x * x / nu_);
        const double lr = 2.0 * std::log(ax) - log_nu_;
        return log_norm_ - 0.5 * (nu_ + 1.0) * (lr + std::log1p(std::exp(-lr)));
    }

    /// Q(x) = I_z(nu/2, 1/2) / 2 with z = nu / (nu + x^2); C(x) from the complement.
    special::Tails tails(double x) const {
        const double ax = std::abs(x);
        if (ax == 0.0) return {0.5, 0.0, special::kLogHalf, -kInf};
        if (ax >= 1e100) return tails_huge(ax);
        const double x2 = ax * ax;
        const double r = x2 / nu_;
        const double l1p = std::log1p(r);
        const double z = 1.0 / (1.0 + r);
        // z^a (1 - z)^(1/2) / B, with sqrt(1 - z) = |x| / sqrt(nu + x^2) so tiny x never squares to 0.
        const double log_za = -half_nu_ * l1p - log_beta_;
        const double sqrt_y = ax / std::sqrt(nu_ + x2);
        if (z < switch_) {
            const double cf = special::detail::ibeta_cf(half_nu_, 0.5, z) / half_nu_;
            if (log_za > -700.0) {
                const double q = 0.5 * std::exp(log_za) * sqrt_y * cf;
                return {q, 0.5 - q};
            }
            const double lq = special::kLogHalf + log_za + std::log(sqrt_y) + std::log(cf);
            return {std::exp(lq), 0.5 - std::exp(lq), lq};
        }
        const double y = r / (1.0 + r);
        const double c = std::exp(log_za) * sqrt_y * special::detail::ibeta_cf(0.5, half_nu_, y);
        return {0.5 - c, c};
    }
private:
    // |x| >= 1e100: x^2 overflows, so z is carried in logs.
    special::Tails tails_huge(double ax) const {
        const double lr = 2.0 * std::log(ax) - log_nu_;
        const double l1p = std::log1p(std::exp(-lr));
        const double log_z = -lr - l1p;
        const auto s = special::ibeta(half_nu_, 0.5, std::exp(log_z), std::exp(-l1p), log_z, -l1p,
                                      log_beta_);
        return {0.5 * s.p, 0.5 * s.q, special::kLogHalf + s.log_p, special::kLogHalf + s.log_q};
    }

    double nu_;
    double half_nu_;
    double log_nu_;
    double log_beta_;
    double log_norm_;
    double switch_;
};

class StandardNormal {
public:
    double log_pdf(double x) const { return special::normal_log_pdf(x); }
    special::Tails tails(double x) const { return special::normal_tails(x); }
};

/// Probability mass of (lo, hi] under a symmetric standardized kernel, in log space.
///
/// Differences are taken between whichever pair of quantities (upper tails or
/// central masses) is smaller, so neither same-tail intervals nor intervals
/// straddling zero lose precision to cancellation.
template <class Kernel>
double log_interval_mass(const Kernel& k, double lo, double hi) {
    if (!(lo < hi)) return -kInf;
    if (lo < 0.0 && hi > 0.0) {
        const auto th = k.tails(hi);
        const auto tl = k.tails(-lo);
        const double central = th.c + tl.c;
        if (central <= 0.5) return std::log(central);
        return std::log1p(-(th.q + tl.q));
    }
    double a = lo, b = hi;
    if (hi <= 0.0) {
        a = -hi;
        b = -lo;
    }
    const auto ta = k.tails(a);
    const auto tb = k.tails(b);
    if (tb.c < ta.q) {
        const double diff = tb.c - ta.c;
        if (diff > 0.0) return std::log(diff);
    }
    return special::log_sub_exp(ta.log_q(), tb.log_q());
}

/// d/d ln sigma^2 of ln P(lo < X <= hi) with lo, hi already standardized by sigma.
template <class Kernel>
double interval_score_standardized(const Kernel& k, double lo, double hi, double log_mass) {
    auto term = [&](double x) {
        if (x == 0.0) return 0.0;
        const double v = std::exp(std::log(std::abs(x)) + k.log_pdf(x) - log_mass);
        return x < 0.0 ? -v : v;
    };
    return 0.5 * (term(lo) - term(hi));
}

// ---------------------------------------------------------------------------
// Public scalar API
// ---------------------------------------------------------------------------

inline double t_pdf(double x, double nu) {
    if (!std::isfinite(x)) throw DomainError("t_pdf requires finite x");
    return std::exp(StudentT(nu).log_pdf(x));
}

inline double t_cdf(double x, double nu) {
    if (std::isnan(x)) throw DomainError("t_cdf requires a number");
    const StudentT k(nu);
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    const auto t = k.tails(std::abs(x));
    return x < 0.0 ? t.q : 0.5 + t.c;
}

namespace detail {

inline double sqrt_checked(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("sigma2 must be finite and > 0");
    return std::sqrt(sigma2);
}

template <class Kernel>
double interval_logprob_with(const Kernel& k, int y, double mu, double sigma) {
    const double lo = (y - mu - 0.5) / sigma;
    const double hi = (y - mu + 0.5) / sigma;
    const double lp = log_interval_mass(k, lo, hi);
    return std::exp(lp) == 0.0 ? -kInf : lp;
}

/// Log-probability and score of one observation, evaluated together so the
/// filters pay for each special-function call once.
struct LogProbScore {
    double logp;
    double score;
};

template <class Kernel>
LogProbScore interval_eval(const Kernel& k, int y, double mu, double sigma) {
    const double lo = (y - mu - 0.5) / sigma;
    const double hi = (y - mu + 0.5) / sigma;
    const double lp = log_interval_mass(k, lo, hi);
    if (!std::isfinite(lp)) return {-kInf, std::numeric_limits<double>::quiet_NaN()};
    const double s = interval_score_standardized(k, lo, hi, lp);
    return {std::exp(lp) == 0.0 ? -kInf : lp, s};
}

template <class Kernel>
double interval_score_with(const Kernel& k, int y, double mu, double sigma) {
    const double s = interval_eval(k, y, mu, sigma).score;
    if (!std::isfinite(s)) throw ScoreUndefinedError("interval probability is zero; score undefined");
    return s;
}

}  // namespace detail

/// ln P(y - 1/2 < Y <= y + 1/2) for Y = mu + sigma * X, X standard t (or normal
/// when `nu` is empty). Returns -infinity when the probability underflows to
/// zero in double precision; callers count such terms as underflows.
inline double interval_logprob(int y, double mu, double sigma2, std::optional<double> nu) {
    const double sigma = detail::sqrt_checked(sigma2);
    if (!std::isfinite(mu)) throw DomainError("mu must be finite");
    if (nu) return detail::interval_logprob_with(StudentT(*nu), y, mu, sigma);
    return detail::interval_logprob_with(StandardNormal{}, y, mu, sigma);
}

inline bool is_underflow(double logprob) { return logprob == -kInf; }

/// Interval score: derivative of interval_logprob with respect to ln sigma^2.
///
/// Evaluated in log space, so it stays finite where the probability itself
/// underflows in linear space; ScoreUndefinedError only when even the log mass
/// is not representable.
inline double interval_score_lnsigma2(int y, double mu, double sigma2, std::optional<double> nu) {
    const double sigma = detail::sqrt_checked(sigma2);
    if (nu) return detail::interval_score_with(StudentT(*nu), y, mu, sigma);
    return detail::interval_score_with(StandardNormal{}, y, mu, sigma);
}

/// Log density of the location-scale t at y.
inline double t_log_density(double y, double mu, double sigma2, const StudentT& k) {
    return k.log_pdf((y - mu) / std::sqrt(sigma2)) - 0.5 * std::log(sigma2);
}

inline double t_log_density(double y, const TParams& p) {
    validate(p);
    return t_log_density(y, p.mu, p.sigma2, StudentT(p.nu));
}

/// Score of the continuous t log density: ((nu+1) z^2 / (nu + z^2) - 1) / 2.
inline double t_density_score_lnsigma2(double y, double mu, double sigma2, double nu) {
    if (!(sigma2 > 0.0) || !(nu > 0.0) || !std::isfinite(y) || !std::isfinite(mu))
        throw DomainError("t density score requires sigma2 > 0, nu > 0");
    const double z = (y - mu) / std::sqrt(sigma2);
    if (z == 0.0) return -0.5;
    const double z2 = z * z;
    if (!std::isfinite(z2)) return 0.5 * nu;
    return 0.5 * ((nu + 1.0) / (nu / z2 + 1.0) - 1.0);
}

// ---------------------------------------------------------------------------
// Skellam family
// ---------------------------------------------------------------------------

namespace detail {

// Poisson(lambda) at m (possibly negative -> zero mass).
inline double poisson_logpmf(long m, double lambda) {
    if (m < 0) return -kInf;
    if (lambda == 0.0) return m == 0 ? 0.0 : -kInf;
    return m * std::log(lambda) - lambda - special::lgamma(m + 1.0);
}

// Both quantities share one Bessel evaluation. `s` is sigma^2 > |mu|.
inline LogProbScore skellam_eval(int k, double mu, double s) {
    const double amu = std::abs(mu);
    const double l1 = 0.5 * (s + mu);
    const double l2 = 0.5 * (s - mu);
    const double x = std::sqrt((s - mu) * (s + mu));
    const int n = std::abs(k);
    const auto b = special::bessel_i_scaled(n, x);
    const double d = std::sqrt(l1) - std::sqrt(l2);
    const double logp = -d * d + 0.5 * k * (std::log(l1) - std::log(l2)) + b.log_value;
    // d/d ln s of the log pmf; (s n - k mu) / x^2 simplifies by the sign of k mu.
    const bool same_sign = static_cast<double>(k) * mu >= 0.0;
    const double lead = same_sign ? s * n / (s + amu) : s * n / (s - amu);
    return {logp, -s + lead + s * s / x * b.ratio};
}

inline double skellam_logpmf_unchecked(int k, double mu, double s) {
    if (s <= std::abs(mu)) {
        // One rate is zero: a Poisson on the side of mu's sign.
        return mu >= 0.0 ? poisson_logpmf(k, s) : poisson_logpmf(-static_cast<long>(k), s);
    }
    return skellam_eval(k, mu, s).logp;
}

inline LogProbScore skellam_eval_checked(int k, double mu, double s) {
    if (s <= std::abs(mu)) throw ScoreUndefinedError("Skellam score undefined at sigma2 = |mu|");
    if (std::abs(k) <= 500) return skellam_eval(k, mu, s);
    // The recurrence ratio loses accuracy far in the tail; difference the log pmf instead.
    const double h = 1e-7 * s;
    const double lp = skellam_logpmf_unchecked(k, mu, s);
    const double up = skellam_logpmf_unchecked(k, mu, s + h);
    if (s - h <= std::abs(mu)) return {lp, (up - lp) / h * s};
    const double dn = skellam_logpmf_unchecked(k, mu, s - h);
    return {lp, (up - dn) / (2.0 * h) * s};
}

inline LogProbScore zi_skellam_eval(int k, double mu, double s, double pi) {
    const auto sk = skellam_eval_checked(k, mu, s);
    if (pi == 0.0) return sk;
    if (k != 0) return {std::log1p(-pi) + sk.logp, sk.score};
    const double lz = special::log_add_exp(std::log(pi), std::log1p(-pi) + sk.logp);
    const double w = std::exp(std::log1p(-pi) + sk.logp - lz);
    return {lz, w * sk.score};
}

}  // namespace detail

inline double skellam_logpmf(int k, const SkellamParams& p) {
    validate(p);
    return detail::skellam_logpmf_unchecked(k, p.mu, p.sigma2);
}

inline double skellam_score_lnsigma2(int k, const SkellamParams& p) {
    validate(p);
    return detail::skellam_eval_checked(k, p.mu, p.sigma2).score;
}

inline double zi_skellam_logpmf(int k, const ZiSkellamParams& p) {
    validate(p);
    const double lp = skellam_logpmf(k, p.base);
    if (p.pi == 0.0) return lp;
    if (k != 0) return std::log1p(-p.pi) + lp;
    return special::log_add_exp(std::log(p.pi), std::log1p(-p.pi) + lp);
}

/// Chain rule over the mixture: only the Skellam component depends on sigma^2.
inline double zi_skellam_score_lnsigma2(int k, const ZiSkellamParams& p) {
    validate(p);
    return detail::zi_skellam_eval(k, p.base.mu, p.base.sigma2, p.pi).score;
}

}  // namespace tickvol
