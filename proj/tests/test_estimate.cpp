#include <gtest/gtest.h>

#include "support.hpp"

using namespace tickvol;
using tickvol::testing::uniform;

namespace {

const BoundRegime kRegimes[] = {BoundRegime::rugarch_like(), BoundRegime::fgarch_like(), BoundRegime::gas_like(),
                                BoundRegime::unbounded(), BoundRegime{"nonneg", std::nullopt, true, true}};

ParamVector random_admissible(Family f, const BoundRegime& r, Rng& rng) {
    ParamVector p(f);
    for (Param n : p.names()) {
        double v = 0.0;
        switch (n) {
            case Param::mu: v = uniform(rng, -2, 2); break;
            case Param::theta: v = uniform(rng, -0.999, 0.999); break;
            case Param::omega:
                v = f == Family::garch_t ? std::exp(uniform(rng, -5, 3)) : uniform(rng, -29, 29);
                break;
            case Param::alpha:
                if (f == Family::garch_t)
                    v = uniform(rng, 0.001, 0.45);
                else
                    v = r.alpha_nonneg ? std::exp(uniform(rng, -8, 1)) : uniform(rng, -1, 1);
                break;
            case Param::phi: v = f == Family::garch_t ? uniform(rng, 0.001, 0.54) : uniform(rng, -0.999, 0.999); break;
            case Param::nu: v = r.nu_floor() + std::exp(uniform(rng, -6, 4)); break;
            case Param::pi: v = uniform(rng, 0.001, 0.999); break;
            case Param::sigma2: v = std::exp(uniform(rng, -20, 10)); break;
        }
        p.set(n, v);
    }
    return p;
}

ParamVector skellam_params(double theta, double omega, double alpha, double phi) {
    return ParamVector(Family::skellam, {theta, omega, alpha, phi});
}

std::vector<ChangeSeries> simulated_skellam(std::size_t n, std::size_t days, std::uint64_t seed) {
    SimSpec s;
    s.model = {Family::skellam};
    s.params = skellam_params(-0.3, 2.0, 0.05, 0.95);
    s.n = n;
    s.days = days;
    s.seed = seed;
    return simulate(s, 2).days;
}

}  // namespace

// --- transforms -------------------------------------------------------------------

TEST(Transform, RoundTrip) {
    Rng rng(21, 0);
    for (const auto& r : kRegimes)
        for (Family f : kAllFamilies)
            for (int i = 0; i < 1000 / 7 + 1; ++i) {
                const ParamVector p = random_admissible(f, r, rng);
                const ParamVector q = untransform(transform(p, f, r), f, r);
                for (std::size_t k = 0; k < p.size(); ++k)
                    ASSERT_NEAR(q.values()[k], p.values()[k], 1e-12 * std::max(1.0, std::abs(p.values()[k])))
                        << name(f) << ' ' << r.name << ' ' << name(p.names()[k]);
            }
}

TEST(Transform, RejectsNuAtRegimeBound) {
    for (const auto& r : {BoundRegime::rugarch_like(), BoundRegime::fgarch_like(), BoundRegime::gas_like()}) {
        ParamVector p(Family::t, {0.0, 1.0, 0.05, 0.9, r.nu_floor()});
        EXPECT_THROW(transform(p, Family::t, r), DomainError) << r.name;
        p.set(Param::nu, r.nu_floor() + 1e-9);
        EXPECT_LT(transform(p, Family::t, r)[4], -20.0);
    }
    EXPECT_THROW(transform(ParamVector(Family::t, {0.0, 1.0, 0.05, 0.9, 0.0}), Family::t, BoundRegime::unbounded()),
                 DomainError);
}

TEST(Transform, CenteredAtZero) {
    const ParamVector p(Family::t, {0.0, 0.0, 0.0, 0.0, 5.0});
    const auto x = transform(p, Family::t, BoundRegime::unbounded());
    EXPECT_EQ(x[0], 0.0);
    EXPECT_EQ(x[3], 0.0);
}

TEST(Transform, RejectsOutsideRegion) {
    const auto r = BoundRegime::unbounded();
    EXPECT_THROW(transform(ParamVector(Family::t, {1.0, 1.0, 0.05, 0.9, 5.0}), Family::t, r), DomainError);
    EXPECT_THROW(transform(ParamVector(Family::t, {0.0, 1.0, 0.05, -1.0, 5.0}), Family::t, r), DomainError);
    EXPECT_THROW(transform(ParamVector(Family::garch_t, {0.0, 0.1, 0.5, 0.6, 5.0}), Family::garch_t, r), DomainError);
    EXPECT_THROW(transform(ParamVector(Family::zi_skellam, {0.0, 1.0, 0.0, 0.5, 1.0}), Family::zi_skellam, r),
                 DomainError);
    EXPECT_THROW(transform(ParamVector(Family::skellam, {0.0, 31.0, 0.0, 0.5}), Family::skellam, r), DomainError);
    const BoundRegime nonneg{"nonneg", std::nullopt, true, true};
    EXPECT_THROW(transform(ParamVector(Family::t, {0.0, 1.0, -0.01, 0.9, 5.0}), Family::t, nonneg), DomainError);
}

TEST(Transform, GarchWithoutStationarityAllowsPersistence) {
    const auto r = BoundRegime::fgarch_like();
    const ParamVector p(Family::garch_t, {0.0, 0.1, 0.4, 0.7, 5.0});
    const ParamVector q = untransform(transform(p, Family::garch_t, r), Family::garch_t, r);
    EXPECT_NEAR(q.get(Param::alpha) + q.get(Param::phi), 1.1, 1e-12);
}

TEST(Transform, ImagesStayAdmissible) {
    Rng rng(22, 0);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> x(5);
        for (auto& v : x) v = uniform(rng, -25, 25);
        const auto g = untransform(x, Family::garch_t, BoundRegime::rugarch_like());
        EXPECT_LT(g.get(Param::alpha) + g.get(Param::phi), 1.0);
        EXPECT_GT(g.get(Param::nu), 2.1);
        const auto t = untransform(x, Family::t, BoundRegime::gas_like());
        EXPECT_LT(std::abs(t.get(Param::theta)), 1.0);
        EXPECT_LE(std::abs(t.get(Param::omega)), kOmegaBox);
        EXPECT_GE(t.get(Param::nu), 4.0);
    }
}

TEST(Regime, PresetsAndParsing) {
    EXPECT_EQ(parse_regime("rugarch-like").nu_floor(), 2.1);
    EXPECT_EQ(parse_regime("fgarch-like").nu_floor(), 2.0);
    EXPECT_EQ(parse_regime("gas-like").nu_floor(), 4.0);
    EXPECT_FALSE(parse_regime("unbounded").nu_lower.has_value());
    EXPECT_THROW(parse_regime("rugarch"), InputError);
}

// --- optimizer ----------------------------------------------------------------------------

TEST(Minimize, QuadraticBowl) {
    const std::vector<double> c = {1.5, -2.0, 0.25};
    const Objective f = [&](const std::vector<double>& x) {
        return (x[0] - c[0]) * (x[0] - c[0]) + 3 * (x[1] - c[1]) * (x[1] - c[1]) + 0.5 * (x[2] - c[2]) * (x[2] - c[2]) +
               0.2 * (x[0] - c[0]) * (x[1] - c[1]);
    };
    for (const auto& x0 : {std::vector<double>{0, 0, 0}, std::vector<double>{-30, 12, 5}, std::vector<double>{1e3, 1, -1e2}}) {
        OptimizeOptions opt;
        opt.ftol = 1e-14;
        const auto r = minimize(f, x0, opt);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.x[i], c[i], 1e-6);
        EXPECT_TRUE(r.converged);
    }
}

TEST(Minimize, Rosenbrock) {
    const Objective f = [](const std::vector<double>& x) {
        return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
    };
    OptimizeOptions opt;
    opt.max_evals = 10000;
    opt.ftol = 1e-15;
    const auto r = minimize(f, {-1.2, 1.0}, opt);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
    EXPECT_LE(r.evals, 10000);
}

TEST(Minimize, SkipsNonFiniteProbes) {
    // Minimum at x = 0.1 right next to a cliff of non-finite values.
    const Objective f = [](const std::vector<double>& x) {
        if (x[0] <= 0.0) return std::nan("");
        if (x[1] > 5.0) return std::numeric_limits<double>::infinity();
        return (x[0] - 0.1) * (x[0] - 0.1) + (x[1] - 4.9) * (x[1] - 4.9);
    };
    OptimizeOptions opt;
    opt.ftol = 1e-15;
    const auto r = minimize(f, {3.0, 0.0}, opt);
    EXPECT_NEAR(r.x[0], 0.1, 1e-6);
    EXPECT_NEAR(r.x[1], 4.9, 1e-6);
    EXPECT_TRUE(std::isfinite(r.f));
}

TEST(Minimize, TraceNeverIncreases) {
    const Objective f = [](const std::vector<double>& x) {
        return std::pow(x[0] - 1, 4) + std::abs(x[1]) + std::cos(3 * x[0]) * 0.1;
    };
    const auto r = minimize(f, {4.0, -3.0});
    ASSERT_FALSE(r.trace.empty());
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
    EXPECT_EQ(r.f, r.trace.back());
}

TEST(Minimize, BudgetExhaustionIsFlagged) {
    const Objective f = [](const std::vector<double>& x) {
        return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
    };
    OptimizeOptions opt;
    opt.max_evals = 30;
    const auto r = minimize(f, {-1.2, 1.0}, opt);
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.evals, 30);
    EXPECT_LT(r.f, f({-1.2, 1.0}));
}

TEST(Minimize, Deterministic) {
    const Objective f = [](const std::vector<double>& x) { return std::sin(x[0]) + 0.1 * x[0] * x[0] + x[1] * x[1]; };
    const auto a = minimize(f, {2.0, 1.0}), b = minimize(f, {2.0, 1.0});
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.evals, b.evals);
}

// --- fit_day --------------------------------------------------------------------------------

TEST(FitDay, ConstantZeroSkellamPushesScaleToBound) {
    const auto y = tickvol::testing::series_of(std::vector<int>(200, 0));
    const auto fit = fit_day(y, {Family::skellam}, BoundRegime::unbounded());
    EXPECT_TRUE(fit.converged);
    EXPECT_NE(std::find(fit.at_bound.begin(), fit.at_bound.end(), Param::omega), fit.at_bound.end());
    EXPECT_GT(fit.loglik_avg, -1e-9);
}

TEST(FitDay, Deterministic) {
    const auto y = tickvol::testing::skellam_sample(600, 2.0, 4);
    const auto a = fit_day(y, {Family::t}, BoundRegime::unbounded());
    const auto b = fit_day(y, {Family::t}, BoundRegime::unbounded());
    EXPECT_EQ(a.params.values(), b.params.values());
    EXPECT_EQ(a.loglik_avg, b.loglik_avg);
    EXPECT_EQ(a.objective_evals, b.objective_evals);
}

TEST(FitDay, RejectsShortSeries) {
    EXPECT_THROW(fit_day(tickvol::testing::series_of(std::vector<int>(49, 1)), {Family::t}, BoundRegime::unbounded()),
                 DomainError);
}

TEST(FitDay, StaticTDegeneratesWhenUnbounded) {
    const auto y = tickvol::testing::skellam_sample(3000, 0.8, 3);
    ASSERT_GE(tickvol::testing::zero_share(y), 0.5);
    const auto fit = fit_day(y, {Family::static_t}, BoundRegime::unbounded());
    EXPECT_TRUE(fit.sigma2_floored);
    EXPECT_LT(fit.params.get(Param::nu), 0.5);
    EXPECT_EQ(fit.params.get(Param::sigma2), std::numeric_limits<double>::denorm_min());
    EXPECT_GT(fit.loglik_avg, 10.0);
}

TEST(FitDay, RegimeEffectOnHeavyTailedZeros) {
    const auto y = tickvol::testing::heavy_zero_sample(5000, 5, 0.6, 2.0);
    ASSERT_GE(tickvol::testing::zero_share(y), 0.5);
    const auto unb = fit_day(y, {Family::static_t}, BoundRegime::unbounded());
    EXPECT_LT(unb.params.get(Param::nu), 1.0);
    const auto gas = fit_day(y, {Family::static_t}, BoundRegime::gas_like());
    EXPECT_NEAR(gas.params.get(Param::nu), 4.0, 1e-3);
    EXPECT_NE(std::find(gas.at_bound.begin(), gas.at_bound.end(), Param::nu), gas.at_bound.end());
    EXPECT_FALSE(gas.sigma2_floored);
}

TEST(FitDay, AtBoundMatchesRegime) {
    const auto y = tickvol::testing::skellam_sample(1500, 2.0, 6);
    const auto fit = fit_day(y, {Family::t}, BoundRegime::gas_like());
    EXPECT_GT(fit.params.get(Param::nu), 4.0);
    for (Param p : fit.at_bound) EXPECT_TRUE(fit.params.has(p));
}

TEST(FitDay, ZeroInflationNests) {
    for (std::uint64_t seed : {1, 2}) {
        const auto y = simulated_skellam(2340, 1, seed).front();
        const auto sk = fit_day(y, {Family::skellam}, BoundRegime::unbounded());
        FitOptions opt;
        opt.warm_starts.push_back(zero_inflated_start(sk.params));
        const auto zi = fit_day(y, {Family::zi_skellam}, BoundRegime::unbounded(), nullptr, opt);
        EXPECT_GE(zi.loglik_avg, sk.loglik_avg - 1e-8);
    }
}

TEST(FitDay, RecoversSkellamParameters) {
    SimSpec s;
    s.model = {Family::skellam};
    s.params = skellam_params(-0.3, 2.0, 0.05, 0.95);
    s.n = 23400;
    s.seed = 77;
    const auto sim = simulate(s);
    const auto fit = fit_day(sim.days[0], {Family::skellam}, BoundRegime::unbounded());
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.params.get(Param::theta), -0.3, 0.05);
    EXPECT_NEAR(fit.params.get(Param::phi), 0.95, 0.05);
    EXPECT_NEAR(fit.params.get(Param::omega), 2.0, 0.3);
}

// --- summaries --------------------------------------------------------------------------------

TEST(Median, OddEvenEmpty) {
    EXPECT_EQ(*median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(*median({4.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_FALSE(median({}).has_value());
}

TEST(FitAllDays, IdenticalDaysGiveTheSingleFit) {
    const auto y = simulated_skellam(2340, 1, 8).front();
    const std::vector<ChangeSeries> days(5, y);
    const auto single = fit_day(y, {Family::skellam}, BoundRegime::unbounded());
    ASSERT_TRUE(single.converged);
    const auto all = fit_all_days(days, {Family::skellam}, BoundRegime::unbounded(), {}, {}, 2);
    for (const auto& [p, s] : all.summary.params) {
        ASSERT_TRUE(s.median.has_value());
        EXPECT_EQ(*s.median, single.params.get(p));
    }
    ASSERT_TRUE(all.summary.loglik.median.has_value());
    EXPECT_EQ(*all.summary.loglik.median, single.loglik_avg);
    EXPECT_EQ(all.summary.not_converged, 0u);
}

TEST(FitAllDays, NotConvergedDayIsExcluded) {
    std::vector<FitResult> fits(5);
    for (int i = 0; i < 5; ++i) {
        fits[i].family = Family::skellam;
        fits[i].params = skellam_params(-0.1 * i, 1.0 + i, 0.05, 0.9);
        fits[i].loglik_avg = -1.0 - i;
        fits[i].converged = i != 2;
        fits[i].archlm = i == 4 ? std::nullopt : std::optional<double>(0.01 * i);
    }
    const auto s = summarize(fits, Family::skellam);
    EXPECT_EQ(s.not_converged, 1u);
    for (const auto& [p, st] : s.params) {
        EXPECT_EQ(st.used, 4u);
        EXPECT_EQ(st.excluded, 1u);
        if (p == Param::omega) {
            EXPECT_EQ(*st.median, 3.0);  // median of 1, 2, 4, 5
        }
    }
    EXPECT_EQ(s.archlm.used, 3u);
    EXPECT_EQ(s.archlm.excluded, 2u);
    EXPECT_NEAR(*s.archlm.median, 0.01, 1e-15);  // median of 0, 0.01, 0.03
}

TEST(FitAllDays, SimulatedSkellamMedians) {
    SimSpec s;
    s.model = {Family::skellam};
    s.params = skellam_params(-0.3, 2.0, 0.05, 0.95);
    s.n = 2340;
    s.days = 20;
    s.seed = 31;
    const auto sim = simulate(s, 2);
    const auto all = fit_all_days(sim.days, {Family::skellam}, BoundRegime::unbounded(), {}, {}, 2);
    EXPECT_EQ(all.summary.days, 20u);
    for (const auto& [p, st] : all.summary.params) {
        if (p == Param::omega) {
            EXPECT_NEAR(*st.median, 2.0, 0.2);
        }
    }
}

TEST(FitAllDays, FailedDayBecomesNotConverged) {
    std::vector<ChangeSeries> days = {simulated_skellam(2340, 1, 9).front(),
                                      tickvol::testing::series_of(std::vector<int>(10, 1))};
    const auto all = fit_all_days(days, {Family::skellam}, BoundRegime::unbounded());
    EXPECT_TRUE(all.fits[0].converged);
    EXPECT_FALSE(all.fits[1].converged);
    EXPECT_FALSE(all.fits[1].message.empty());
    EXPECT_EQ(all.summary.not_converged, 1u);
}
