// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "support.hpp"

using namespace tickvol;
namespace tt = tickvol::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome score_consistency() {
    Outcome o;
    Rng rng(101, 0);
    const int draws = 1000;
    double worst[4] = {0, 0, 0, 0};
    std::size_t skipped_normal = 0;
    // The Skellam log pmf bends sharply as sigma2 nears |mu|; the difference step shrinks with that gap.
    auto check = [&](int which, double score, const std::function<double(double)>& logp, double s2, double gap = 1.0) {
        const double fd = tt::fd_lnsigma2(logp, s2, 1e-3 * std::min(1.0, gap));
        worst[which] = std::max(worst[which], tt::rel_err(score, fd));
    };
    for (int i = 0; i < draws; ++i) {
        const int y = tt::uniform_int(rng, -20, 20);
        const double mu = tt::uniform(rng, -2.0, 2.0);
        const double s2 = std::exp(tt::uniform(rng, -4.0, 5.0));
        const double nu = std::exp(tt::uniform(rng, std::log(0.1), std::log(100.0)));
        check(0, interval_score_lnsigma2(y, mu, s2, nu), [&](double v) { return interval_logprob(y, mu, v, nu); }, s2);
    }
    for (int i = 0; i < draws; ++i) {
        // Draws whose interval mass underflows have no finite log probability to difference; redraw them.
        int y;
        double mu, s2;
        for (;;) {
            y = tt::uniform_int(rng, -20, 20);
            mu = tt::uniform(rng, -2.0, 2.0);
            s2 = std::exp(tt::uniform(rng, -4.0, 5.0));
            if (std::isfinite(interval_logprob(y, mu, s2 * std::exp(-4e-3), std::nullopt))) break;
            ++skipped_normal;
        }
        check(1, interval_score_lnsigma2(y, mu, s2, std::nullopt),
              [&](double v) { return interval_logprob(y, mu, v, std::nullopt); }, s2);
    }
    for (int i = 0; i < draws; ++i) {
        const int k = tt::uniform_int(rng, -20, 20);
        const double mu = tt::uniform(rng, -3.0, 3.0);
        const double s2 = std::abs(mu) + std::exp(tt::uniform(rng, -4.0, 4.0));
        const SkellamParams p{mu, s2};
        const double gap = (s2 - std::abs(mu)) / s2;
        check(2, skellam_score_lnsigma2(k, p), [&](double v) { return skellam_logpmf(k, {mu, v}); }, s2, gap);
        const double pi = tt::uniform(rng, 0.0, 0.9);
        const ZiSkellamParams z{p, pi};
        check(3, zi_skellam_score_lnsigma2(k, z), [&](double v) { return zi_skellam_logpmf(k, {{mu, v}, pi}); }, s2, gap);
    }
    const char* names[] = {"t", "normal", "skellam", "zi-skellam"};
    for (int i = 0; i < 4; ++i) o.require(worst[i] <= 1e-5, fmt("%s worst rel err %.3g", names[i], worst[i]));
    if (o.pass)
        o.detail = fmt("worst rel err t %.2g, normal %.2g, skellam %.2g, zi %.2g; %zu normal redraws with zero mass",
                       worst[0], worst[1], worst[2], worst[3], skipped_normal);
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    Rng rng(102, 0);
    double worst_sk = 0.0;
    for (int pair = 0; pair < 100; ++pair) {
        const double l1 = 10.0 * (1.0 - rng.uniform()), l2 = 10.0 * (1.0 - rng.uniform());
        for (int k = -20; k <= 20; ++k) {
            const double lib = std::exp(skellam_logpmf(k, {l1 - l2, l1 + l2}));
            worst_sk = std::max(worst_sk, std::abs(lib - oracle_skellam_pmf(k, l1, l2)));
        }
    }
    o.require(worst_sk <= 1e-12, fmt("skellam max abs diff %.3g", worst_sk));
    double worst_iv = 0.0;
    const double nus[] = {0.5, 1.0, 5.0, 30.0, 0.0};
    for (int i = 0; i < 200; ++i) {
        const double nu = nus[i % 5];
        const int y = tt::uniform_int(rng, -10, 10);
        const double mu = tt::uniform(rng, -2.0, 2.0);
        const double s2 = std::exp(tt::uniform(rng, std::log(0.05), std::log(50.0)));
        const double lib =
            std::exp(interval_logprob(y, mu, s2, nu > 0.0 ? std::optional<double>(nu) : std::nullopt));
        worst_iv = std::max(worst_iv, std::abs(lib - oracle_interval_prob(y, mu, s2, nu)));
    }
    o.require(worst_iv <= 1e-10, fmt("interval max abs diff %.3g", worst_iv));
    if (o.pass) o.detail = fmt("skellam max abs diff %.2g over 4100 points, interval %.2g over 200", worst_sk, worst_iv);
    return o;
}

ChangeSeries degeneracy_fixture() { return tt::skellam_sample(23400, 0.8, 3); }

Outcome degeneracy() {
    Outcome o;
    const auto y = degeneracy_fixture();
    const auto s = summarize_changes(y);
    o.require(s.zero_share >= 0.5, fmt("zero share %.3f", s.zero_share));
    o.require(s.within10_share == 1.0, "changes beyond +-10");
    const auto r = nu_scan(y, {2.0, 1.0, 0.5, 0.2, 0.1}, LikelihoodKind::continuous_density);
    for (std::size_t i = 1; i < r.loglik_avg.size(); ++i)
        o.require(r.loglik_avg[i] > r.loglik_avg[i - 1], fmt("not increasing at nu=%g", r.nu_grid[i]));
    o.require(r.floored.back() && r.sigma2_hat.back() == kDenormMin, "sigma2 not floored at nu=0.1");
    // Best interior value over nu >= 2.
    std::vector<double> high;
    for (double nu : default_nu_grid())
        if (nu >= 2.0) high.push_back(nu);
    high.push_back(2.0);
    const auto h = nu_scan(y, high, LikelihoodKind::continuous_density);
    double best = -kInf;
    for (std::size_t i = 0; i < h.nu_grid.size(); ++i)
        if (!h.floored[i]) best = std::max(best, h.loglik_avg[i]);
    const double gap = r.loglik_avg.back() - best;
    o.require(gap >= 10.0, fmt("gap %.3f", gap));
    if (o.pass)
        o.detail = fmt("zero share %.3f, ll(nu=0.1, floor) %.3f vs best nu>=2 %.3f, gap %.2f", s.zero_share,
                       r.loglik_avg.back(), best, gap);
    return o;
}

Outcome interval_cure() {
    Outcome o;
    const auto y = degeneracy_fixture();
    const auto r = nu_scan(y, default_nu_grid(), LikelihoodKind::interval);
    o.require(r.interior_max(), "maximum at the grid edge");
    const auto c = ValueCounts::of(y);
    double max_term = -kInf;
    for (std::size_t i = 0; i < r.nu_grid.size(); ++i) {
        o.require(!r.floored[i], fmt("floored at nu=%g", r.nu_grid[i]));
        for (int v : c.values) max_term = std::max(max_term, interval_logprob(v, 0.0, r.sigma2_hat[i], r.nu_grid[i]));
    }
    o.require(max_term <= 0.0, fmt("log probability term %.3g > 0", max_term));
    if (o.pass)
        o.detail = fmt("argmax nu %.3f (ll %.4f), no floor over %zu grid points, max term %.3g",
                       r.nu_grid[r.argmax()], r.loglik_avg[r.argmax()], r.nu_grid.size(), max_term);
    return o;
}

double median_of(const FitSummary& s, Param p) {
    for (const auto& [q, st] : s.params)
        if (q == p && st.median) return *st.median;
    return std::nan("");
}

Outcome recovery() {
    Outcome o;
    struct Case {
        Family f;
        std::vector<double> truth;
        std::vector<std::pair<Param, double>> tol;
    };
    const std::vector<Case> cases = {
        {Family::t,
         {-0.3, 2.5, 0.05, 0.97, 8.0},
         {{Param::theta, 0.05}, {Param::phi, 0.03}, {Param::alpha, 0.03}, {Param::nu, 2.0}}},
        {Family::skellam, {-0.3, 2.0, 0.05, 0.95}, {{Param::theta, 0.05}, {Param::phi, 0.03}, {Param::alpha, 0.03}}},
    };
    std::string summary;
    for (const auto& c : cases) {
        SimSpec s;
        s.model = {c.f};
        s.params = ParamVector(c.f, c.truth);
        s.n = 23400;
        s.days = 20;
        s.seed = 2024;
        const auto days = simulate(s, default_threads()).days;
        const auto r = fit_all_days(days, {c.f}, BoundRegime::unbounded(), {}, {}, default_threads());
        summary += std::string(name(c.f)) + ":";
        for (const auto& [p, tol] : c.tol) {
            const double m = median_of(r.summary, p), want = s.params.get(p);
            o.require(std::abs(m - want) <= tol, fmt("%s %s median %.4f vs %.4f", std::string(name(c.f)).c_str(),
                                                     std::string(name(p)).c_str(), m, want));
            summary += fmt(" %s %.4f", std::string(name(p)).c_str(), m);
        }
        summary += fmt(" (%zu/%zu converged); ", r.summary.days - r.summary.not_converged, r.summary.days);
    }
    if (o.pass) o.detail = summary;
    return o;
}

Outcome archlm_calibration() {
    Outcome o;
    int below = 0, above = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        Rng a(6000 + rep, 0), b(7000 + rep, 0);
        std::vector<double> iid(10000), arch(10000);
        double prev = 0.0;
        for (std::size_t t = 0; t < 10000; ++t) {
            iid[t] = a.normal();
            arch[t] = std::sqrt(0.5 + 0.5 * prev * prev) * b.normal();
            prev = arch[t];
        }
        const auto r0 = arch_lm(iid), r1 = arch_lm(arch);
        below += r0 && *r0 < 0.005;
        above += r1 && *r1 > 0.05;
    }
    o.require(below >= 95, fmt("iid below 0.005 in %d of 100", below));
    o.require(above >= 95, fmt("ARCH(1) above 0.05 in %d of 100", above));
    if (o.pass) o.detail = fmt("iid R2 < 0.005 in %d/100, ARCH(1) R2 > 0.05 in %d/100", below, above);
    return o;
}

Outcome failure_semantics() {
    Outcome o;
    SimSpec s;
    s.model = {Family::t};
    s.params = ParamVector(Family::t, {-0.3, 1.0, 0.05, 0.95, 5.0});
    s.n = 3000;
    s.days = 2;
    s.seed = 77;
    const auto days = simulate(s).days;
    FitOptions opt;
    opt.max_evals = 800;
    const auto normal = fit_day(days[0], {Family::normal}, BoundRegime::unbounded(), nullptr, opt);
    const auto tfit = fit_day(days[0], {Family::t}, BoundRegime::unbounded(), nullptr, opt);
    // Next day with one change of 100 long-run standard deviations of the normal fit.
    ChangeSeries next = days[1];
    const double omega = normal.params.get(Param::omega);
    const int jump = static_cast<int>(std::ceil(100.0 * std::exp(0.5 * omega)));
    next.changes[next.size() / 2] = jump;
    const auto en = evaluate_next_day(normal, next);
    const auto et = evaluate_next_day(tfit, next);
    o.require(en.failed && !en.loglik_avg_oos, "normal fit did not fail");
    o.require(!et.failed && et.loglik_avg_oos && std::isfinite(*et.loglik_avg_oos), "t fit failed");
    if (o.pass)
        o.detail = fmt("jump %d cents: normal failed (%zu zero-probability terms), t ll_F %.4f", jump, en.underflows,
                       *et.loglik_avg_oos);
    return o;
}

Outcome pipeline_invariants() {
    Outcome o;
    auto ticks = tt::synthetic_ticks(20, 808);
    Rng rng(809, 0);
    for (int i = 0; i < 40; ++i) {
        const auto at = static_cast<std::size_t>(rng.uniform() * static_cast<double>(ticks.size()));
        ticks.prices[at] *= 2;
    }
    const auto once = clean(ticks);
    const auto twice = clean(once.ticks);
    o.require(twice.report.outliers == 0 && twice.report.out_of_hours == 0 && twice.report.nonpositive_price == 0,
              "second cleaning dropped ticks");
    o.require(twice.ticks.timestamps == once.ticks.timestamps && twice.ticks.prices == once.ticks.prices,
              "second cleaning changed the series");
    const auto fine = grid_prices(once.ticks, 1.0);
    const auto coarse = grid_prices(once.ticks, 60.0);
    const auto agg = aggregate_last_tick(once.ticks, 1.0);
    o.require(fine.size() == 20 && agg.days.size() == 20, fmt("%zu days aggregated", agg.days.size()));
    std::size_t telescope_bad = 0, coarse_bad = 0;
    for (std::size_t d = 0; d < std::min(fine.size(), agg.days.size()); ++d) {
        std::int64_t sum = 0;
        for (int c : agg.days[d].changes) sum += c;
        telescope_bad += sum != fine[d].prices.back() - fine[d].prices.front();
        std::vector<std::int64_t> px, off;
        for (std::size_t i = 0; i < fine[d].prices.size(); ++i)
            if (fine[d].offset_ms[i] % 60000 == 0) {
                off.push_back(fine[d].offset_ms[i]);
                px.push_back(fine[d].prices[i]);
            }
        coarse_bad += px != coarse[d].prices || off != coarse[d].offset_ms;
    }
    o.require(telescope_bad == 0, fmt("telescope fails on %zu days", telescope_bad));
    o.require(coarse_bad == 0, fmt("coarsening fails on %zu days", coarse_bad));
    if (o.pass)
        o.detail = fmt("%zu ticks, %zu outliers removed in %zu passes, 20 days consistent", ticks.size(),
                       once.report.outliers, once.report.outlier_passes);
    return o;
}

Outcome nesting() {
    Outcome o;
    std::vector<std::pair<std::string, ChangeSeries>> fixtures;
    fixtures.emplace_back("static skellam", tt::skellam_sample(5000, 1.5, 31));
    fixtures.emplace_back("zero-heavy t", tt::heavy_zero_sample(5000, 32, 0.6, 2.0));
    {
        SimSpec s;
        s.model = {Family::zi_skellam};
        s.params = ParamVector(Family::zi_skellam, {-0.3, 1.5, 0.05, 0.95, 0.2});
        s.n = 5000;
        s.seed = 33;
        fixtures.emplace_back("dynamic zi-skellam", simulate(s).days[0]);
    }
    std::string summary;
    for (const auto& [label, y] : fixtures) {
        const auto sk = fit_day(y, {Family::skellam}, BoundRegime::unbounded());
        FitOptions opt;
        opt.warm_starts.push_back(zero_inflated_start(sk.params));
        const auto zi = fit_day(y, {Family::zi_skellam}, BoundRegime::unbounded(), nullptr, opt);
        const double d = zi.loglik_avg - sk.loglik_avg;
        o.require(d >= -1e-8, fmt("%s: zi - skellam = %.3g", label.c_str(), d));
        summary += fmt("%s %+.2e (pi %.3g); ", label.c_str(), d, zi.params.get(Param::pi));
    }
    if (o.pass) o.detail = summary;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select criteria by number.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    struct Criterion {
        int id;
        const char* title;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "score-likelihood consistency", 10, score_consistency},
        {2, "oracle equivalence", 30, oracle_equivalence},
        {3, "continuous-density degeneracy", 60, degeneracy},
        {4, "interval likelihood cure", 60, interval_cure},
        {5, "parameter recovery", 900, recovery},
        {6, "ARCH-LM calibration", 60, archlm_calibration},
        {7, "out-of-sample failure semantics", 5, failure_semantics},
        {8, "pipeline invariants", 60, pipeline_invariants},
        {9, "zero-inflation nesting", 60, nesting},
    };
    int failures = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) o.require(false, fmt("runtime %.1f s over the %.0f s limit", secs, c.limit_s));
        std::printf("%s criterion %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    std::printf("%d of %d criteria passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
