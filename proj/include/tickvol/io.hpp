#pragma once

// JSON and CSV forms of fits, profiles, reports and tables, plus atomic file
// writes.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tickvol/calendar.hpp"
#include "tickvol/diagnose.hpp"
#include "tickvol/diurnal.hpp"
#include "tickvol/error.hpp"
#include "tickvol/estimate.hpp"
#include "tickvol/model.hpp"
#include "tickvol/pipeline.hpp"

namespace tickvol {

using Json = nlohmann::ordered_json;

/// Writes to a temporary file beside `path` and renames it into place.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InputError("cannot write '" + tmp.string() + "'");
        os << content;
        if (!os.flush()) throw InputError("cannot write '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("invalid JSON in " + what + ": " + e.what());
    }
}

namespace detail {

inline Json number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

inline std::optional<double> optional_number(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

inline Json to_json(const ParamVector& p) {
    Json j = Json::object();
    for (std::size_t i = 0; i < p.size(); ++i) j[std::string(name(p.names()[i]))] = detail::number_or_null(p.values()[i]);
    return j;
}

inline Json to_json(const FitResult& f) {
    Json bounds = Json::array();
    for (Param p : f.at_bound) bounds.push_back(std::string(name(p)));
    return Json{{"family", std::string(name(f.family))},
                {"regime", f.regime},
                {"day", calendar::format_date(f.day)},
                {"n", f.n},
                {"params", to_json(f.params)},
                {"loglik_avg", detail::number_or_null(f.loglik_avg)},
                {"converged", f.converged},
                {"iterations", f.iterations},
                {"objective_evals", f.objective_evals},
                {"at_bound", bounds},
                {"sigma2_floored", f.sigma2_floored},
                {"rate_floored", f.rate_floored},
                {"archlm", detail::number_or_null(f.archlm)},
                {"message", f.message}};
}

inline FitResult fit_from_json(const Json& j) {
    try {
        FitResult f;
        f.family = parse_family(j.at("family").get<std::string>());
        f.regime = j.value("regime", "");
        f.day = calendar::parse_date(j.at("day").get<std::string>());
        f.n = j.value("n", std::size_t{0});
        f.params = ParamVector(f.family);
        for (Param p : f.params.names()) {
            const auto v = detail::optional_number(j.at("params"), std::string(name(p)).c_str());
            f.params.set(p, v.value_or(std::nan("")));
        }
        f.loglik_avg = detail::optional_number(j, "loglik_avg").value_or(std::nan(""));
        f.converged = j.value("converged", false);
        f.iterations = j.value("iterations", 0);
        f.objective_evals = j.value("objective_evals", 0);
        for (const auto& b : j.value("at_bound", Json::array())) f.at_bound.push_back(parse_param(b.get<std::string>()));
        f.sigma2_floored = j.value("sigma2_floored", false);
        f.rate_floored = j.value("rate_floored", std::size_t{0});
        f.archlm = detail::optional_number(j, "archlm");
        f.message = j.value("message", "");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed fit document: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

inline Json to_json(const DiurnalProfile& p) {
    return Json{{"knots", p.knots}, {"values", p.values}, {"floor", p.floor}, {"bin_width", p.bin_width},
                {"lambda", p.lambda}};
}

inline DiurnalProfile profile_from_json(const Json& j) {
    try {
        DiurnalProfile p;
        p.knots = j.at("knots").get<std::vector<double>>();
        p.values = j.at("values").get<std::vector<double>>();
        p.floor = j.at("floor").get<double>();
        p.bin_width = j.value("bin_width", 300.0);
        p.lambda = j.value("lambda", 0.0);
        if (p.knots.size() != p.values.size() || p.knots.empty())
            throw InputError("profile knots and values differ in length");
        for (std::size_t i = 1; i < p.knots.size(); ++i)
            if (!(p.knots[i] > p.knots[i - 1])) throw InputError("profile knots not increasing");
        p.second = detail::natural_spline_second(p.knots, p.values);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed profile document: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json to_json(const CleaningReport& r) {
    return Json{{"input", r.input},
                {"out_of_hours", r.out_of_hours},
                {"nonpositive_price", r.nonpositive_price},
                {"outliers", r.outliers},
                {"output", r.output},
                {"outlier_passes", r.outlier_passes},
                {"warnings", r.warnings}};
}

inline Json to_json(const IngestResult& r) {
    return Json{{"rows", r.rows},
                {"empty_price", r.empty_price},
                {"malformed", r.malformed},
                {"first_malformed_line", r.first_malformed_line ? Json(*r.first_malformed_line) : Json(nullptr)},
                {"header", r.header}};
}

inline Json to_json(const EvalResult& r) {
    return Json{{"loglik_avg_oos", detail::number_or_null(r.loglik_avg_oos)},
                {"archlm_oos", detail::number_or_null(r.archlm_oos)},
                {"failed", r.failed},
                {"underflows", r.underflows},
                {"message", r.message}};
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

/// Table cell: "x" when unavailable.
inline std::string cell(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return "x";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

/// One column per model, one row per statistic, "x" for anything unavailable.
inline std::string summary_table_csv(const std::vector<FitSummary>& cols) {
    std::vector<Param> rows = {Param::theta, Param::omega, Param::alpha, Param::phi, Param::nu, Param::pi};
    bool has_mu = false, has_s2 = false;
    for (const auto& c : cols)
        for (const auto& [p, s] : c.params) {
            has_mu |= p == Param::mu;
            has_s2 |= p == Param::sigma2;
        }
    if (has_mu) rows.insert(rows.begin(), Param::mu);
    if (has_s2) rows.push_back(Param::sigma2);
    std::ostringstream os;
    os << "statistic";
    for (const auto& c : cols) os << ',' << name(c.family);
    os << '\n';
    for (Param p : rows) {
        os << name(p);
        for (const auto& c : cols) {
            std::optional<double> v;
            for (const auto& [q, s] : c.params)
                if (q == p) v = s.median;
            os << ',' << cell(v);
        }
        os << '\n';
    }
    os << "A";
    for (const auto& c : cols) os << ',' << cell(c.archlm.median);
    os << "\nloglik";
    for (const auto& c : cols) os << ',' << cell(c.loglik.median);
    os << "\ndays";
    for (const auto& c : cols) os << ',' << c.days;
    os << "\nnot_converged";
    for (const auto& c : cols) os << ',' << c.not_converged;
    os << "\nA_excluded";
    for (const auto& c : cols) os << ',' << c.archlm.excluded;
    os << '\n';
    return os.str();
}

inline std::string nu_scan_csv(const std::vector<NuScanResult>& scans) {
    std::ostringstream os;
    os << "nu,kind,sigma2_hat,loglik_avg,floored,is_max\n";
    for (const auto& s : scans) {
        const std::size_t best = s.argmax();
        for (std::size_t i = 0; i < s.nu_grid.size(); ++i) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%.10g,%s,%.10g,%.10g,%d,%d\n", s.nu_grid[i], std::string(name(s.kind)).c_str(),
                          s.sigma2_hat[i], s.loglik_avg[i], s.floored[i] ? 1 : 0, i == best ? 1 : 0);
            os << buf;
        }
    }
    return os.str();
}

inline std::string changes_csv(std::span<const ChangeSeries> days) {
    std::ostringstream os;
    write_changes_csv(os, days);
    return os.str();
}

}  // namespace tickvol
