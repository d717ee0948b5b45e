#pragma once

// Unconstrained minimization: adaptive Nelder-Mead followed by a BFGS polish
// with central-difference gradients. Non-finite objective values are treated
// as +infinity, so such probe points are never accepted.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace tickvol {

using Objective = std::function<double(const std::vector<double>&)>;

struct OptimizeOptions {
    int max_evals = 4000;
    double ftol = 1e-9;         // stop when the objective changes by less than this
    double initial_step = 0.5;  // simplex edge in unconstrained coordinates
    bool polish = true;         // run BFGS after the simplex stage
    int simplex_evals = -1;     // cap for the simplex stage; -1 = max_evals
};

struct OptimizeResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    int evals = 0;
    std::vector<double> trace;  // objective at the accepted point after each iteration
};

namespace detail {

class CountedObjective {
public:
    CountedObjective(const Objective& f, int budget) : f_(f), budget_(budget) {}

    // Past the budget every probe is rejected without evaluating.
    double operator()(const std::vector<double>& x) {
        if (evals_ >= budget_) return std::numeric_limits<double>::infinity();
        ++evals_;
        double v;
        try {
            v = f_(x);
        } catch (...) {
            v = std::numeric_limits<double>::infinity();
        }
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    }

    bool exhausted() const { return evals_ >= budget_; }
    int evals() const { return evals_; }

private:
    const Objective& f_;
    int budget_;
    int evals_ = 0;
};

inline double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

inline std::vector<double> gradient(CountedObjective& f, const std::vector<double>& x, bool& ok) {
    std::vector<double> g(x.size());
    std::vector<double> xp = x;
    ok = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = fd_step(x[i]);
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) ok = false;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline void nelder_mead(CountedObjective& f, OptimizeResult& r, const OptimizeOptions& opt,
                        int eval_cap) {
    const std::size_t n = r.x.size();
    const double dn = static_cast<double>(n);
    // Dimension-adaptive coefficients (Gao and Han).
    const double c_reflect = 1.0;
    const double c_expand = 1.0 + 2.0 / dn;
    const double c_contract = 0.75 - 0.5 / dn;
    const double c_shrink = 1.0 - 1.0 / dn;

    std::vector<std::vector<double>> pts(n + 1, r.x);
    std::vector<double> fv(n + 1);
    fv[0] = r.f;
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += opt.initial_step;
        fv[i + 1] = f(pts[i + 1]);
        if (!std::isfinite(fv[i + 1])) {
            pts[i + 1][i] = r.x[i] - opt.initial_step;
            fv[i + 1] = f(pts[i + 1]);
        }
    }
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto at = [&](double c, const std::vector<double>& worst, std::vector<double>& out) {
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + c * (centroid[j] - worst[j]);
    };
    while (f.evals() < eval_cap) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        ++r.iterations;
        r.trace.push_back(fv[best]);
        if (std::isfinite(fv[worst]) && fv[worst] - fv[best] < opt.ftol) {
            r.converged = true;
            break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / dn;
        at(c_reflect, pts[worst], xr);
        const double fr = f(xr);
        if (fr < fv[best]) {
            at(c_expand, pts[worst], xe);
            const double fe = f(xe);
            if (fe < fr) {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        bool outside = fr < fv[worst];
        at(outside ? c_contract : -c_contract, pts[worst], xc);
        const double fc = f(xc);
        if (fc < (outside ? fr : fv[worst])) {
            pts[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j)
                pts[i][j] = pts[best][j] + c_shrink * (pts[i][j] - pts[best][j]);
            fv[i] = f(pts[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    r.x = pts[best];
    r.f = fv[best];
}

inline void bfgs(CountedObjective& f, OptimizeResult& r, const OptimizeOptions& opt) {
    const std::size_t n = r.x.size();
    std::vector<double> H(n * n, 0.0);
    auto reset_h = [&] {
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
    };
    reset_h();
    bool ok = true;
    auto g = gradient(f, r.x, ok);
    if (!ok) return;
    int small_steps = 0;
    bool first_update = true;
    std::vector<double> d(n), xn(n), s(n), yv(n), Hy(n);
    while (!f.exhausted()) {
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) d[i] -= H[i * n + j] * g[j];
        }
        double slope = dot(d, g);
        if (!(slope < 0.0)) {
            reset_h();
            first_update = true;
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = dot(d, g);
            if (!(slope < 0.0)) break;
        }
        // Backtracking line search with the Armijo condition.
        double step = 1.0;
        double fn = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int k = 0; k < 30 && !f.exhausted(); ++k) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = r.x[i] + step * d[i];
            fn = f(xn);
            if (fn <= r.f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No descent along a descent direction: numerically stationary.
            r.converged = !f.exhausted();
            break;
        }
        ++r.iterations;
        const double df = r.f - fn;
        for (std::size_t i = 0; i < n; ++i) s[i] = xn[i] - r.x[i];
        r.x = xn;
        r.f = fn;
        r.trace.push_back(fn);
        if (df < opt.ftol) {
            ++small_steps;
        } else {
            small_steps = 0;
        }
        auto gn = gradient(f, r.x, ok);
        if (!ok) break;
        double gmax = 0.0;
        for (double v : gn) gmax = std::max(gmax, std::abs(v));
        if ((small_steps >= 2 && gmax < 1e-6) || small_steps >= 5) {
            r.converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) yv[i] = gn[i] - g[i];
        g = gn;
        const double sy = dot(s, yv);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(yv, yv))) {
            if (first_update) {
                // Scale the initial inverse Hessian to the observed curvature.
                const double scale = sy / dot(yv, yv);
                for (std::size_t i = 0; i < n; ++i) H[i * n + i] = scale;
                first_update = false;
            }
            for (std::size_t i = 0; i < n; ++i) {
                Hy[i] = 0.0;
                for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * yv[j];
            }
            const double yHy = dot(yv, Hy);
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    H[i * n + j] += (1.0 + yHy * rho) * rho * s[i] * s[j] -
                                    rho * (Hy[i] * s[j] + s[i] * Hy[j]);
        }
    }
}

}  // namespace detail

/// Minimizes `objective` from `x0`. The returned point is the best one seen;
/// `trace` is nonincreasing.
inline OptimizeResult minimize(const Objective& objective, std::vector<double> x0,
                               const OptimizeOptions& opt = {}) {
    detail::CountedObjective f(objective, opt.max_evals);
    OptimizeResult r;
    r.x = std::move(x0);
    r.f = f(r.x);
    if (!std::isfinite(r.f)) {
        r.evals = f.evals();
        return r;
    }
    const int cap = opt.simplex_evals < 0 ? opt.max_evals : std::min(opt.simplex_evals, opt.max_evals);
    if (!r.x.empty()) detail::nelder_mead(f, r, opt, cap);
    const bool simplex_converged = r.converged;
    if (opt.polish && !r.x.empty() && !f.exhausted()) {
        r.converged = false;
        detail::bfgs(f, r, opt);
        // A polish that cannot improve a converged simplex leaves it converged.
        if (!r.converged && simplex_converged && !f.exhausted()) r.converged = true;
    }
    if (r.x.empty()) r.converged = true;
    r.evals = f.evals();
    return r;
}

}  // namespace tickvol
