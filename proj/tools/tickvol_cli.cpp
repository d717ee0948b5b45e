// tickvol: batch command-line interface.
//
// Exit codes: 0 success, 1 model or convergence warnings, 2 input error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tickvol/tickvol.hpp"

namespace fs = std::filesystem;
using namespace tickvol;

namespace {

constexpr int kOk = 0;
constexpr int kWarnings = 1;
constexpr int kInputError = 2;

struct Common {
    std::vector<std::string> inputs;
    std::string out = "out";
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
};

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

// key=value pairs separated by commas, e.g. "timestamp=ts,price=px,unit=cents".
CsvSchema parse_schema(const std::string& s) {
    CsvSchema schema;
    for (const auto& kv : split_list(s)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InputError("schema entry '" + kv + "' is not key=value");
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "timestamp")
            schema.timestamp = v;
        else if (k == "price")
            schema.price = v;
        else if (k == "date")
            schema.date = v;
        else if (k == "unit")
            schema.unit = parse_price_unit(v);
        else if (k == "delimiter")
            schema.delimiter = v == "tab" ? '\t' : (v == "semicolon" ? ';' : (v.empty() ? ',' : v[0]));
        else if (k == "header")
            schema.header = v == "auto" ? std::nullopt : std::optional<bool>(v == "yes" || v == "true" || v == "1");
        else if (k == "day")
            schema.default_day = calendar::parse_date(v);
        else
            throw InputError("unknown schema key '" + k + "'");
    }
    return schema;
}

Json schema_json(const CsvSchema& s) {
    return Json{{"timestamp", s.timestamp},
                {"price", s.price},
                {"date", s.date},
                {"unit", s.unit == PriceUnit::dollars ? "dollars" : "cents"},
                {"delimiter", std::string(1, s.delimiter)},
                {"header", s.header ? Json(*s.header) : Json("auto")},
                {"day", calendar::format_date(s.default_day)}};
}

// Files named directly, plus the .csv / .csv.gz files of named directories
// (only those starting with `prefix`; change files are never read as ticks).
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const std::string& prefix = "") {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p)) {
                const std::string name = e.path().filename().string();
                const bool csv = name.ends_with(".csv") || name.ends_with(".csv.gz");
                const bool wanted = prefix.empty() ? !name.starts_with("changes") : name.starts_with(prefix);
                if (e.is_regular_file() && csv && wanted) found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else if (fs::exists(p)) {
            out.push_back(p);
        } else {
            throw InputError("input '" + in + "' does not exist");
        }
    }
    if (out.empty()) throw InputError("no input files");
    return out;
}

std::vector<ChangeSeries> load_changes(const std::vector<std::string>& inputs, std::optional<double> frequency) {
    std::vector<ChangeSeries> days;
    for (const auto& f : expand_inputs(inputs, "changes")) {
        auto part = read_changes_csv(f.string(), frequency);
        for (auto& d : part) {
            for (const auto& e : days)
                if (e.day == d.day) throw InputError("day " + calendar::format_date(d.day) + " appears twice");
            days.push_back(std::move(d));
        }
    }
    std::stable_sort(days.begin(), days.end(), [](const auto& a, const auto& b) { return a.day < b.day; });
    return days;
}

TickSeries load_ticks(const std::vector<std::string>& inputs, const CsvSchema& schema, Json& ingest_report) {
    TickSeries all;
    ingest_report = Json::array();
    for (const auto& f : expand_inputs(inputs)) {
        auto r = ingest_csv(f.string(), schema);
        Json j = to_json(r);
        j["file"] = f.string();
        ingest_report.push_back(j);
        for (std::size_t i = 0; i < r.ticks.size(); ++i)
            all.push_back(r.ticks.timestamps[i], r.ticks.prices[i], r.ticks.day[i], r.ticks.local_ms[i]);
    }
    // Files are sorted individually; merge them stably.
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return all.timestamps[a] < all.timestamps[b]; });
    TickSeries sorted;
    for (auto i : idx) sorted.push_back(all.timestamps[i], all.prices[i], all.day[i], all.local_ms[i]);
    return sorted;
}

void write_json(const fs::path& p, const Json& j) { atomic_write(p, j.dump(2) + "\n"); }

Json common_json(const std::string& command, const Common& c) {
    return Json{{"command", command},
                {"input", c.inputs},
                {"out", c.out},
                {"threads", c.threads},
                {"seed", c.seed ? Json(*c.seed) : Json(nullptr)}};
}

unsigned threads_of(const Common& c) { return c.threads > 0 ? c.threads : default_threads(); }

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CleanArgs {
    Common c;
    std::string schema;
    bool median = false;
};

int cmd_clean(const CleanArgs& a) {
    const CsvSchema schema = parse_schema(a.schema);
    Json ingest;
    const TickSeries ticks = load_ticks(a.c.inputs, schema, ingest);
    CleanOptions opt;
    opt.median = a.median;
    const CleanResult r = clean(ticks, opt);
    const fs::path out(a.c.out);
    std::ostringstream os;
    auto column_name = [](const std::string& spec, const char* fallback) {
        return detail::all_digits(spec) ? std::string(fallback) : spec;
    };
    write_ticks_csv(os, r.ticks, schema.unit, column_name(schema.timestamp, "timestamp"),
                    column_name(schema.price, "price"), column_name(schema.date, "date"));
    atomic_write(out / "cleaned_ticks.csv", os.str());
    Json report = to_json(r.report);
    report["ingest"] = ingest;
    write_json(out / "cleaning_report.json", report);
    Json cfg = common_json("clean", a.c);
    cfg["schema"] = schema_json(schema);
    cfg["median"] = a.median;
    write_json(out / "run_config.json", cfg);
    std::cout << "kept " << r.report.output << " of " << r.report.input << " ticks (out of hours "
              << r.report.out_of_hours << ", nonpositive " << r.report.nonpositive_price << ", outliers "
              << r.report.outliers << ")\n";
    for (const auto& w : r.report.warnings) std::cerr << "warning: " << w << '\n';
    return kOk;
}

struct AggregateArgs {
    Common c;
    std::string schema;
    double frequency = 1.0;
};

int cmd_aggregate(const AggregateArgs& a) {
    const CsvSchema schema = parse_schema(a.schema);
    Json ingest;
    const TickSeries ticks = load_ticks(a.c.inputs, schema, ingest);
    const AggregateResult r = aggregate_last_tick(ticks, a.frequency);
    const fs::path out(a.c.out);
    for (const auto& d : r.days)
        atomic_write(out / ("changes_" + calendar::format_date(d.day) + ".csv"),
                     changes_csv(std::span<const ChangeSeries>(&d, 1)));
    Json cfg = common_json("aggregate", a.c);
    cfg["schema"] = schema_json(schema);
    cfg["frequency"] = a.frequency;
    cfg["days_written"] = r.days.size();
    cfg["days_skipped"] = r.skipped_days;
    write_json(out / "run_config.json", cfg);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << r.days.size() << " day(s)\n";
    return kOk;
}

std::vector<double> parse_nu_grid(const std::string& s) {
    if (s.empty() || s == "default") return default_nu_grid();
    std::vector<double> g;
    for (const auto& v : split_list(s)) {
        try {
            g.push_back(std::stod(v));
        } catch (const std::exception&) {
            throw InputError("bad nu grid value '" + v + "'");
        }
    }
    return g;
}

ChangeSeries pooled(const std::vector<ChangeSeries>& days) {
    ChangeSeries p;
    p.day = days.front().day;
    p.frequency = days.front().frequency;
    for (const auto& d : days) p.changes.insert(p.changes.end(), d.changes.begin(), d.changes.end());
    p.time_of_day.assign(p.changes.size(), 0.0);
    return p;
}

struct ScanArgs {
    Common c;
    std::string grid;
    std::string kind = "both";
};

int cmd_scan_nu(const ScanArgs& a) {
    const auto days = load_changes(a.c.inputs, std::nullopt);
    const auto grid = parse_nu_grid(a.grid);
    std::vector<LikelihoodKind> kinds;
    if (a.kind == "both")
        kinds = {LikelihoodKind::continuous_density, LikelihoodKind::interval};
    else
        kinds = {parse_likelihood_kind(a.kind)};
    const ChangeSeries y = pooled(days);
    std::vector<NuScanResult> scans;
    for (auto k : kinds) scans.push_back(nu_scan(y, grid, k, threads_of(a.c)));
    const fs::path out(a.c.out);
    atomic_write(out / "nu_scan.csv", nu_scan_csv(scans));
    Json cfg = common_json("scan-nu", a.c);
    cfg["nu_grid"] = grid;
    cfg["kind"] = a.kind;
    write_json(out / "run_config.json", cfg);
    return kOk;
}

struct FitArgs {
    Common c;
    std::string models = "normal,t,skellam,zi-skellam";
    std::string regime = "unbounded";
    std::string diurnal = "per-day";
    std::optional<double> frequency;
    bool alpha_nonneg = false;
    bool gas_literal = false;
    int max_evals = 3000;
};

std::vector<Family> parse_models(const std::string& s) {
    std::vector<Family> out;
    for (const auto& m : split_list(s)) out.push_back(parse_family(m));
    if (out.empty()) throw InputError("no models requested");
    return out;
}

int cmd_fit(const FitArgs& a) {
    if (a.diurnal != "per-day" && a.diurnal != "pooled" && a.diurnal != "none")
        throw InputError("diurnal must be per-day, pooled or none");
    const auto days = load_changes(a.c.inputs, a.frequency);
    const auto models = parse_models(a.models);
    BoundRegime regime = parse_regime(a.regime);
    regime.alpha_nonneg = a.alpha_nonneg;
    const unsigned threads = threads_of(a.c);
    const fs::path out(a.c.out);

    std::vector<DiurnalProfile> profiles;
    const bool any_interval = std::any_of(models.begin(), models.end(), is_interval_family);
    if (any_interval && a.diurnal == "per-day") {
        profiles.resize(days.size());
        parallel_for(days.size(), threads, [&](std::size_t i) { profiles[i] = estimate_profile(days[i]); });
        for (std::size_t i = 0; i < days.size(); ++i)
            write_json(out / "profiles" / (calendar::format_date(days[i].day) + ".json"), to_json(profiles[i]));
    } else if (any_interval && a.diurnal == "pooled") {
        profiles.push_back(estimate_profile(std::span<const ChangeSeries>(days)));
        write_json(out / "profiles" / "pooled.json", to_json(profiles.front()));
    }
    atomic_write(out / "changes.csv", changes_csv(days));

    FitOptions opt;
    opt.max_evals = a.max_evals;
    std::vector<FitSummary> summaries;
    std::map<Family, std::vector<FitResult>> by_family;
    bool warnings = false;
    for (Family f : models) {
        const ModelSpec spec{f, a.gas_literal};
        std::vector<FitResult> fits(days.size());
        // Zero-inflated fits start from the Skellam estimate when one exists.
        const auto sk = by_family.find(Family::skellam);
        const std::vector<FitResult>* nest = f == Family::zi_skellam && sk != by_family.end() ? &sk->second : nullptr;
        parallel_for(days.size(), threads, [&](std::size_t i) {
            FitOptions o = opt;
            if (nest && (*nest)[i].params.all_finite())
                o.warm_starts.push_back(zero_inflated_start((*nest)[i].params));
            const DiurnalProfile* prof =
                profiles.empty() ? nullptr : (profiles.size() == 1 ? &profiles[0] : &profiles[i]);
            try {
                fits[i] = fit_day(days[i], spec, regime, is_interval_family(f) ? prof : nullptr, o);
            } catch (const std::exception& e) {
                fits[i].family = f;
                fits[i].regime = regime.name;
                fits[i].day = days[i].day;
                fits[i].n = days[i].size();
                fits[i].params = ParamVector(f);
                fits[i].message = e.what();
            }
        });
        for (const auto& fr : fits) {
            write_json(out / "fits" / std::string(name(f)) / (calendar::format_date(fr.day) + ".json"), to_json(fr));
            if (!fr.converged) {
                warnings = true;
                std::cerr << "warning: " << name(f) << " " << calendar::format_date(fr.day)
                          << " not converged: " << fr.message << '\n';
            }
        }
        summaries.push_back(summarize(fits, f));
        by_family[f] = std::move(fits);
    }
    atomic_write(out / "summary.csv", summary_table_csv(summaries));
    Json cfg = common_json("fit", a.c);
    Json model_names = Json::array();
    for (Family f : models) model_names.push_back(std::string(name(f)));
    cfg["models"] = model_names;
    cfg["regime"] = regime.name;
    cfg["nu_lower"] = regime.nu_lower ? Json(*regime.nu_lower) : Json(nullptr);
    cfg["alpha_nonneg"] = regime.alpha_nonneg;
    cfg["garch_stationarity"] = regime.garch_stationarity;
    cfg["diurnal"] = a.diurnal;
    cfg["frequency"] = a.frequency ? Json(*a.frequency) : Json("inferred");
    cfg["gas_literal"] = a.gas_literal;
    cfg["max_evals"] = a.max_evals;
    cfg["days"] = days.size();
    write_json(out / "run_config.json", cfg);
    std::cout << summary_table_csv(summaries);
    return warnings ? kWarnings : kOk;
}

struct EvalArgs {
    Common c;
    std::string fit_dir;
    std::optional<double> frequency;
};

std::optional<DiurnalProfile> profile_for(const fs::path& fit_dir, std::int32_t day) {
    const fs::path per_day = fit_dir / "profiles" / (calendar::format_date(day) + ".json");
    if (fs::exists(per_day)) return profile_from_json(parse_json(read_text(per_day), per_day.string()));
    const fs::path pooled_path = fit_dir / "profiles" / "pooled.json";
    if (fs::exists(pooled_path)) return profile_from_json(parse_json(read_text(pooled_path), pooled_path.string()));
    return std::nullopt;
}

int cmd_eval(const EvalArgs& a) {
    const fs::path fit_dir(a.fit_dir);
    if (!fs::is_directory(fit_dir / "fits")) throw InputError("'" + a.fit_dir + "' has no fits directory");
    const auto next_days = load_changes(a.c.inputs, a.frequency);
    bool gas_literal = false;
    if (fs::exists(fit_dir / "run_config.json"))
        gas_literal = parse_json(read_text(fit_dir / "run_config.json"), "run_config.json").value("gas_literal", false);

    std::vector<fs::path> model_dirs;
    for (const auto& e : fs::directory_iterator(fit_dir / "fits"))
        if (e.is_directory()) model_dirs.push_back(e.path());
    std::sort(model_dirs.begin(), model_dirs.end());
    if (model_dirs.empty()) throw InputError("no fitted models in '" + a.fit_dir + "'");

    const fs::path out(a.c.out);
    std::ostringstream days_csv;
    days_csv << "model,fit_day,eval_day,loglik_F,A_F,failed\n";
    struct Column {
        std::string model;
        std::vector<std::optional<double>> ll, archlm;
        std::size_t failed = 0, evaluated = 0, skipped = 0;
    };
    std::vector<Column> cols;
    bool warnings = false;
    for (const auto& md : model_dirs) {
        Column col;
        col.model = md.filename().string();
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(md))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& fpath : files) {
            const FitResult fit = fit_from_json(parse_json(read_text(fpath), fpath.string()));
            const auto it = std::find_if(next_days.begin(), next_days.end(), [&](const auto& d) { return d.day > fit.day; });
            if (it == next_days.end()) continue;
            if (!fit.converged) {
                ++col.skipped;
                warnings = true;
                continue;
            }
            const auto prof = profile_for(fit_dir, fit.day);
            const EvalResult r = evaluate_next_day(fit, *it, prof ? &*prof : nullptr, gas_literal);
            ++col.evaluated;
            if (r.failed) ++col.failed;
            col.ll.push_back(r.loglik_avg_oos);
            col.archlm.push_back(r.archlm_oos);
            Json j = to_json(r);
            j["fit_day"] = calendar::format_date(fit.day);
            j["eval_day"] = calendar::format_date(it->day);
            write_json(out / "eval" / col.model / (calendar::format_date(fit.day) + ".json"), j);
            days_csv << col.model << ',' << calendar::format_date(fit.day) << ',' << calendar::format_date(it->day) << ','
                     << cell(r.loglik_avg_oos) << ',' << cell(r.archlm_oos) << ',' << (r.failed ? 1 : 0) << '\n';
        }
        cols.push_back(std::move(col));
    }
    auto med = [](const std::vector<std::optional<double>>& v) {
        std::vector<double> ok;
        for (const auto& x : v)
            if (x && std::isfinite(*x)) ok.push_back(*x);
        return median(ok);
    };
    std::ostringstream sum;
    sum << "statistic";
    for (const auto& c : cols) sum << ',' << c.model;
    sum << "\nloglik_F";
    for (const auto& c : cols) sum << ',' << cell(med(c.ll));
    sum << "\nA_F";
    for (const auto& c : cols) sum << ',' << cell(med(c.archlm));
    sum << "\nevaluated_days";
    for (const auto& c : cols) sum << ',' << c.evaluated;
    sum << "\nfailed_days";
    for (const auto& c : cols) sum << ',' << c.failed;
    sum << "\nskipped_not_converged";
    for (const auto& c : cols) sum << ',' << c.skipped;
    sum << '\n';
    atomic_write(out / "eval_days.csv", days_csv.str());
    atomic_write(out / "eval_summary.csv", sum.str());
    Json cfg = common_json("eval", a.c);
    cfg["fit_dir"] = a.fit_dir;
    write_json(out / "run_config.json", cfg);
    std::cout << sum.str();
    return warnings ? kWarnings : kOk;
}

struct SimulateArgs {
    Common c;
    std::string spec;
};

int cmd_simulate(const SimulateArgs& a) {
    const Json j = parse_json(read_text(a.spec), a.spec);
    SimSpec s;
    std::int64_t start_price = 100'000;
    try {
        s.model.family = parse_family(j.at("model").get<std::string>());
        s.model.gas_literal = j.value("gas_literal", false);
        s.params = ParamVector(s.model.family);
        for (Param p : s.params.names()) {
            const std::string key(name(p));
            if (!j.at("params").contains(key)) throw InputError("simulation spec lacks parameter '" + key + "'");
            s.params.set(p, j.at("params").at(key).get<double>());
        }
        s.n = j.value("n", std::size_t{23'400});
        s.days = j.value("days", std::size_t{1});
        s.seed = j.value("seed", std::uint64_t{1});
        s.frequency = j.value("frequency", 0.0);
        if (j.contains("first_day")) s.first_day = calendar::parse_date(j.at("first_day").get<std::string>());
        if (j.contains("diurnal")) s.diurnal = profile_from_json(j.at("diurnal"));
        start_price = j.value("start_price_cents", start_price);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed simulation spec: ") + e.what());
    }
    if (a.c.seed) s.seed = *a.c.seed;
    const SimResult r = simulate(s, threads_of(a.c));
    const fs::path out(a.c.out);
    for (const auto& d : r.days) {
        const std::string date = calendar::format_date(d.day);
        atomic_write(out / ("changes_" + date + ".csv"), changes_csv(std::span<const ChangeSeries>(&d, 1)));
        // One trade per grid point at the grid price, so aggregation reproduces the changes.
        TickSeries t;
        std::int64_t price = start_price;
        const std::int64_t first_ms = kSessionOpenMs + std::llround((d.time_of_day.front() - d.frequency) * 1000.0);
        t.push_back(calendar::from_exchange_local(d.day, first_ms), price, d.day, first_ms);
        for (std::size_t i = 0; i < d.size(); ++i) {
            price += d.changes[i];
            const std::int64_t ms = kSessionOpenMs + std::llround(d.time_of_day[i] * 1000.0);
            t.push_back(calendar::from_exchange_local(d.day, ms), price, d.day, ms);
        }
        std::ostringstream os;
        write_ticks_csv(os, t, PriceUnit::cents);
        atomic_write(out / ("ticks_" + date + ".csv"), os.str());
    }
    Json cfg = common_json("simulate", a.c);
    cfg["spec"] = j;
    cfg["seed_used"] = s.seed;
    cfg["rate_floored"] = r.rate_floored;
    cfg["clamped"] = r.clamped;
    write_json(out / "run_config.json", cfg);
    std::cout << "simulated " << r.days.size() << " day(s) of " << s.n << " changes\n";
    return r.clamped > 0 ? kWarnings : kOk;
}

struct ReportArgs {
    Common c;
    std::string grid;
};

int cmd_report(const ReportArgs& a) {
    if (a.c.inputs.size() != 1) throw InputError("report takes one results directory");
    const fs::path dir(a.c.inputs.front());
    if (!fs::exists(dir / "changes.csv")) throw InputError("'" + dir.string() + "' is not a fit output directory");
    const auto days = read_changes_csv((dir / "changes.csv").string());
    BoundRegime regime = BoundRegime::unbounded();
    bool gas_literal = false;
    if (fs::exists(dir / "run_config.json")) {
        const Json cfg = parse_json(read_text(dir / "run_config.json"), "run_config.json");
        regime = parse_regime(cfg.value("regime", "unbounded"));
        gas_literal = cfg.value("gas_literal", false);
    }
    const fs::path out(a.c.out);
    const ChangeSeries all = pooled(days);
    const ChangeSummary summary = summarize_changes(std::span<const ChangeSeries>(days));
    const int lo = summary.counts.begin()->first, hi = summary.counts.rbegin()->first;

    // Figure 1: histogram and static-t densities on a 0.01 grid.
    {
        std::ostringstream os;
        os << "change_cents,count,share\n";
        for (const auto& [k, c] : summary.counts) os << k << ',' << c << ',' << format_double(summary.share(k)) << '\n';
        atomic_write(out / "fig1_histogram.csv", os.str());
        std::vector<BoundRegime> regimes = {BoundRegime::unbounded()};
        if (regime.name != "unbounded") regimes.push_back(regime);
        std::vector<FitResult> fits;
        for (const auto& r : regimes) {
            FitOptions o;
            o.min_length = 1;
            fits.push_back(fit_day(all, {Family::static_t}, r, nullptr, o));
        }
        std::ostringstream dens;
        dens << "x";
        for (const auto& r : regimes) dens << ",static_t_" << r.name;
        dens << '\n';
        const auto steps = static_cast<long>(std::llround((hi - lo + 1.0) * 100.0));
        for (long i = 0; i <= steps; ++i) {
            const double x = lo - 0.5 + static_cast<double>(i) / 100.0;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", x);
            dens << buf;
            for (const auto& f : fits) {
                const double s2 = f.params.get(Param::sigma2), nu = f.params.get(Param::nu);
                std::snprintf(buf, sizeof buf, ",%.10g", std::exp(t_log_density(x, 0.0, s2, StudentT(nu))));
                dens << buf;
            }
            dens << '\n';
        }
        atomic_write(out / "fig1_density.csv", dens.str());
    }
    // Figure 2: static nu scans of both likelihoods.
    {
        const auto grid = parse_nu_grid(a.grid);
        std::vector<NuScanResult> scans;
        for (auto k : {LikelihoodKind::continuous_density, LikelihoodKind::interval})
            scans.push_back(nu_scan(all, grid, k, threads_of(a.c)));
        atomic_write(out / "fig2_nu_scan.csv", nu_scan_csv(scans));
    }
    // Figure 3: observed minus fitted probabilities, averaged over days.
    bool warnings = false;
    if (fs::is_directory(dir / "fits")) {
        std::vector<std::string> names;
        std::vector<std::vector<double>> diffs;
        std::vector<fs::path> model_dirs;
        for (const auto& e : fs::directory_iterator(dir / "fits"))
            if (e.is_directory()) model_dirs.push_back(e.path());
        std::sort(model_dirs.begin(), model_dirs.end());
        for (const auto& md : model_dirs) {
            std::vector<double> acc(static_cast<std::size_t>(hi - lo + 1), 0.0);
            std::size_t used = 0;
            for (const auto& d : days) {
                const fs::path fp = md / (calendar::format_date(d.day) + ".json");
                if (!fs::exists(fp)) continue;
                const FitResult fit = fit_from_json(parse_json(read_text(fp), fp.string()));
                if (!fit.converged) {
                    warnings = true;
                    continue;
                }
                const auto prof = profile_for(dir, d.day);
                const auto rows = fitted_vs_observed(fit, d, lo, hi, prof ? &*prof : nullptr, gas_literal);
                for (std::size_t i = 0; i < rows.size(); ++i) acc[i] += rows[i].diff;
                ++used;
            }
            if (used == 0) continue;
            for (auto& v : acc) v /= static_cast<double>(used);
            names.push_back(md.filename().string());
            diffs.push_back(std::move(acc));
        }
        std::ostringstream os;
        os << "change_cents";
        for (const auto& n : names) os << ',' << n;
        os << '\n';
        for (int k = lo; k <= hi; ++k) {
            os << k;
            for (const auto& d : diffs) os << ',' << format_double(d[static_cast<std::size_t>(k - lo)]);
            os << '\n';
        }
        os << "sum";
        for (const auto& d : diffs) {
            double s = 0.0;
            for (double v : d) s += v;
            os << ',' << format_double(s);
        }
        os << '\n';
        atomic_write(out / "fig3_differences.csv", os.str());
    }
    Json cfg = common_json("report", a.c);
    cfg["nu_grid"] = parse_nu_grid(a.grid);
    write_json(out / "run_config.json", cfg);
    return warnings ? kWarnings : kOk;
}

void add_common(CLI::App* sub, Common& c, bool with_seed = false) {
    sub->add_option("--input", c.inputs, "Input files or directories")->required();
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads (0 = automatic)")->envname("TICKVOL_THREADS");
    if (with_seed) sub->add_option("--seed", c.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tickvol: volatility models for integer price changes"};
    app.set_config("--config", "", "Configuration file (key = value lines; [command] sections)");
    app.require_subcommand(1);

    CleanArgs clean_args;
    auto* clean_cmd = app.add_subcommand("clean", "Clean tick data");
    add_common(clean_cmd, clean_args.c);
    clean_cmd->add_option("--schema", clean_args.schema, "Column mapping, e.g. timestamp=ts,price=px,unit=cents");
    clean_cmd->add_flag("--median", clean_args.median, "Median-based outlier rule");

    AggregateArgs agg_args;
    auto* agg_cmd = app.add_subcommand("aggregate", "Last-tick aggregation to price changes");
    add_common(agg_cmd, agg_args.c);
    agg_cmd->add_option("--schema", agg_args.schema, "Column mapping");
    agg_cmd->add_option("--frequency", agg_args.frequency, "Seconds per grid step")->capture_default_str();

    ScanArgs scan_args;
    auto* scan_cmd = app.add_subcommand("scan-nu", "Static profile likelihood over nu");
    add_common(scan_cmd, scan_args.c);
    scan_cmd->add_option("--nu-grid", scan_args.grid, "Comma-separated nu values or 'default'");
    scan_cmd->add_option("--kind", scan_args.kind, "continuous_density, interval or both")->capture_default_str();

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit daily models");
    add_common(fit_cmd, fit_args.c);
    fit_cmd->add_option("--models", fit_args.models, "Comma-separated model names")->capture_default_str();
    fit_cmd->add_option("--regime", fit_args.regime, "rugarch-like, fgarch-like, gas-like or unbounded")
        ->capture_default_str();
    fit_cmd->add_option("--diurnal", fit_args.diurnal, "per-day, pooled or none")->capture_default_str();
    fit_cmd->add_option("--frequency", fit_args.frequency, "Seconds per change (default: inferred)");
    fit_cmd->add_flag("--alpha-nonneg", fit_args.alpha_nonneg, "Constrain the score coefficient to be >= 0");
    fit_cmd->add_flag("--gas-literal", fit_args.gas_literal, "GAS recursion on sigma2 instead of ln sigma2");
    fit_cmd->add_option("--max-evals", fit_args.max_evals, "Objective evaluations per fit")->capture_default_str();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate fits on the following day");
    add_common(eval_cmd, eval_args.c);
    eval_cmd->add_option("--fit-dir", eval_args.fit_dir, "Output directory of 'fit'")->required();
    eval_cmd->add_option("--frequency", eval_args.frequency, "Seconds per change (default: inferred)");

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate change and tick files");
    sim_cmd->add_option("--spec", sim_args.spec, "Simulation spec (JSON)")->required();
    sim_cmd->add_option("--out", sim_args.c.out, "Output directory")->capture_default_str();
    sim_cmd->add_option("--threads", sim_args.c.threads, "Worker threads")->envname("TICKVOL_THREADS");
    sim_cmd->add_option("--seed", sim_args.c.seed, "Override the spec's seed");

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "Figure data from a fit output directory");
    add_common(report_cmd, report_args.c);
    report_cmd->add_option("--nu-grid", report_args.grid, "Comma-separated nu values or 'default'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return kInputError;
    }

    try {
        if (*clean_cmd) return cmd_clean(clean_args);
        if (*agg_cmd) return cmd_aggregate(agg_args);
        if (*scan_cmd) return cmd_scan_nu(scan_args);
        if (*fit_cmd) return cmd_fit(fit_args);
        if (*eval_cmd) return cmd_eval(eval_args);
        if (*sim_cmd) return cmd_simulate(sim_args);
        if (*report_cmd) return cmd_report(report_args);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kWarnings;
    }
    return kOk;
}
