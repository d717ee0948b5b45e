// Simulates one day from the interval-t model and fits it back.

#include <cstdio>

#include "tickvol/tickvol.hpp"

using namespace tickvol;

int main() {
    SimSpec spec;
    spec.model.family = Family::t;
    spec.params = ParamVector(Family::t, {-0.3, 2.5, 0.05, 0.97, 8.0});
    spec.n = 23'400;
    spec.seed = 2024;
    const ChangeSeries day = simulate(spec).days.front();

    const ChangeSummary s = summarize_changes(day);
    std::printf("%zu changes, %.1f%% zeros\n", s.n, 100.0 * s.zero_share);

    const FitResult fit = fit_day(day, spec.model, BoundRegime::unbounded());
    std::printf("%-6s %10s %10s\n", "param", "true", "estimate");
    for (std::size_t i = 0; i < fit.params.size(); ++i)
        std::printf("%-6s %10.4f %10.4f\n", std::string(name(fit.params.names()[i])).c_str(), spec.params.values()[i],
                    fit.params.values()[i]);
    std::printf("loglik/obs %.5f, converged %s, %d evaluations\n", fit.loglik_avg, fit.converged ? "yes" : "no",
                fit.objective_evals);
    if (fit.archlm) std::printf("ARCH-LM R^2 %.5f\n", *fit.archlm);
}
