#pragma once

// Special functions used by the distribution kernels: the regularized
// incomplete beta function with log-space prefactors, standard-normal tail
// probabilities valid far beyond the erfc underflow point, and exponentially
// scaled modified Bessel functions of the first kind.

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

namespace tickvol::special {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogHalf = -0.69314718055994530942;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kPi = 3.14159265358979323846;

/// Thread-safe log-gamma for positive arguments.
inline double lgamma(double x) { return boost::math::lgamma(x); }

inline double lbeta(double a, double b) { return lgamma(a) + lgamma(b) - lgamma(a + b); }

/// ln B(a, 1/2) without the cancellation lgamma differences suffer at large a.
inline double lbeta_half(double a) {
    constexpr double log_sqrt_pi = 0.57236494292470008707;
    return log_sqrt_pi + std::log(boost::math::tgamma_delta_ratio(a, 0.5));
}

/// ln(e^a + e^b) without overflow.
inline double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// ln(e^a - e^b) for a >= b.
inline double log_sub_exp(double a, double b) {
    if (b == -kInf) return a;
    const double d = b - a;
    if (d >= 0.0) return -kInf;
    return a + (d > -0.693 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d)));
}

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz).
inline double ibeta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 20000;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

/// I_x(a, b) together with its complement, both as values and logs.
struct BetaSplit {
    double p;      // I_x(a, b)
    double q;      // 1 - I_x(a, b)
    double log_p;
    double log_q;
};

/// Regularized incomplete beta function.
///
/// The caller supplies x, y = 1 - x and their logarithms separately so that
/// arguments whose x underflows (x ~ 1e-330) still carry exact log information.
/// `log_beta` is ln B(a, b). The side that is evaluated directly by the
/// continued fraction is always the smaller one, so whichever of p, q is tiny
/// keeps full relative accuracy.
inline BetaSplit ibeta(double a, double b, double x, double y, double log_x, double log_y,
                       double log_beta) {
    if (log_x == -kInf) return {0.0, 1.0, -kInf, 0.0};
    if (log_y == -kInf) return {1.0, 0.0, 0.0, -kInf};
    const double log_front = a * log_x + b * log_y - log_beta;
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double lp = log_front + std::log(detail::ibeta_cf(a, b, x)) - std::log(a);
        const double p = std::exp(lp);
        return {p, -std::expm1(lp), lp, std::log1p(-p)};
    }
    const double lq = log_front + std::log(detail::ibeta_cf(b, a, y)) - std::log(b);
    const double q = std::exp(lq);
    return {-std::expm1(lq), q, std::log1p(-q), lq};
}

inline BetaSplit ibeta(double a, double b, double x) {
    return ibeta(a, b, x, 1.0 - x, std::log(x), std::log1p(-x), lbeta(a, b));
}

/// Probabilities of a symmetric standardized distribution at x >= 0:
/// upper tail Q(x) = P(X > x) and central mass C(x) = P(0 < X <= x) = 1/2 - Q(x).
///
/// The smaller of the two is computed directly; its log is stored when it was
/// obtained in log space (and is then authoritative even where the linear
/// value underflows). Other logs are taken on demand.
struct Tails {
    double q;
    double c;
    double lq = std::numeric_limits<double>::quiet_NaN();
    double lc = std::numeric_limits<double>::quiet_NaN();

    double log_q() const { return std::isnan(lq) ? std::log(q) : lq; }
    double log_c() const { return std::isnan(lc) ? std::log(c) : lc; }
};

namespace detail {

// Mills ratio Q(x)/phi(x) by its continued fraction; intended for x > 5.
inline double mills_ratio(double x) {
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int j = 1; j < 500; ++j) {
        d = x + j * d;
        if (std::abs(d) < tiny) d = tiny;
        c = x + j / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = c * d;
        f *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return 1.0 / f;
}

}  // namespace detail

inline Tails normal_tails(double x) {
    if (x == 0.0) return {0.5, 0.0, kLogHalf, -kInf};
    if (x < 30.0) return {0.5 * std::erfc(x / kSqrt2), 0.5 * std::erf(x / kSqrt2)};
    if (x > 1e150) return {0.0, 0.5, -kInf, kLogHalf};
    const double log_q = -0.5 * x * x - kLogSqrt2Pi + std::log(detail::mills_ratio(x));
    const double q = std::exp(log_q);
    return {q, 0.5 - q, log_q};
}

inline double normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

/// Exponentially scaled modified Bessel function of the first kind:
/// `log_value` = ln(e^{-x} I_n(x)) and `ratio` = I_{n+1}(x) / I_n(x).
struct BesselScaled {
    double log_value;
    double ratio;
};

namespace detail {

// Power series, accurate for small x (x <= 1 here).
inline double bessel_i_log_series(int n, double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (k * static_cast<double>(n + k));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return n * std::log(0.5 * x) - lgamma(n + 1.0) + std::log(sum);
}

// Large-argument expansion of e^{-x} I_n(x); valid for n^2 small against x.
inline double bessel_i_log_scaled_hankel(int n, double x) {
    const double mu = 4.0 * static_cast<double>(n) * n;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -term * (mu - odd * odd) / (8.0 * k * x);
        if (std::abs(next) > std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::log(sum) - 0.5 * std::log(2.0 * kPi * x);
}

// Miller's downward recurrence normalized by e^{-x}(I_0 + 2 sum I_k) = 1.
inline BesselScaled bessel_i_scaled_miller(int n, double x) {
    constexpr double big = 1e200;
    constexpr double inv_big = 1e-200;
    const double log_big = std::log(big);
    const double m = std::max(static_cast<double>(n), std::ceil(x));
    const int start = static_cast<int>(m + 10.0 + std::ceil(std::sqrt(80.0 * (m + 1.0))));
    const double two_over_x = 2.0 / x;
    double b_next = 0.0;  // b_{j+1}
    double b = 1e-280;    // b_j
    double sum = 0.0;
    int rescales = 0, rescales_n = 0, rescales_n1 = 0;
    double rec_n = 0.0, rec_n1 = 0.0;
    for (int j = start; j >= 0; --j) {
        if (j == n + 1) {
            rec_n1 = b;
            rescales_n1 = rescales;
        }
        if (j == n) {
            rec_n = b;
            rescales_n = rescales;
        }
        sum += (j == 0 ? 1.0 : 2.0) * b;
        if (j == 0) break;
        const double b_prev = (j * two_over_x) * b + b_next;
        b_next = b;
        b = b_prev;
        if (b > big) {
            b *= inv_big;
            b_next *= inv_big;
            sum *= inv_big;
            ++rescales;
        }
    }
    double ratio = rec_n1 / rec_n;
    for (int i = rescales_n1; i < rescales_n; ++i) ratio *= inv_big;
    return {std::log(rec_n) - std::log(sum) - (rescales - rescales_n) * log_big, ratio};
}

}  // namespace detail

/// e^{-x} I_n(x) for integer n >= 0 and x > 0, in log form, plus I_{n+1}/I_n.
inline BesselScaled bessel_i_scaled(int n, double x) {
    if (x <= 1.0) {
        const double ln = detail::bessel_i_log_series(n, x);
        const double ln1 = detail::bessel_i_log_series(n + 1, x);
        return {ln - x, std::exp(ln1 - ln)};
    }
    const double n1 = n + 1.0;
    if (x > 700.0 && n1 * n1 <= 0.25 * x) {
        const double ln = detail::bessel_i_log_scaled_hankel(n, x);
        const double ln1 = detail::bessel_i_log_scaled_hankel(n + 1, x);
        return {ln, std::exp(ln1 - ln)};
    }
    return detail::bessel_i_scaled_miller(n, x);
}

}  // namespace tickvol::special
