#pragma once

// Model families and named parameter vectors shared by the filters, the
// estimator, the diagnostics and the simulator.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tickvol/error.hpp"

namespace tickvol {

enum class Family {
    garch_t,     // continuous t with GARCH(1,1) variance
    gas_t,       // continuous t with score-driven log variance
    static_t,    // continuous t, constant scale, zero location
    normal,      // interval normal with MA(1) location and score-driven log variance
    t,           // interval t, same dynamics
    skellam,     // Skellam pmf, same dynamics
    zi_skellam,  // zero-inflated Skellam pmf, same dynamics
};

enum class DistKind { normal, t, skellam, zi_skellam };

enum class Param { mu, theta, omega, alpha, phi, nu, pi, sigma2 };

inline constexpr std::array<Family, 7> kAllFamilies = {
    Family::garch_t, Family::gas_t, Family::static_t, Family::normal,
    Family::t,       Family::skellam, Family::zi_skellam};

inline std::string_view name(Family f) {
    switch (f) {
        case Family::garch_t: return "garch-t";
        case Family::gas_t: return "gas-t";
        case Family::static_t: return "static-t";
        case Family::normal: return "normal";
        case Family::t: return "t";
        case Family::skellam: return "skellam";
        case Family::zi_skellam: return "zi-skellam";
    }
    return "?";
}

inline std::string_view name(Param p) {
    switch (p) {
        case Param::mu: return "mu";
        case Param::theta: return "theta";
        case Param::omega: return "omega";
        case Param::alpha: return "alpha";
        case Param::phi: return "phi";
        case Param::nu: return "nu";
        case Param::pi: return "pi";
        case Param::sigma2: return "sigma2";
    }
    return "?";
}

inline Family parse_family(std::string_view s) {
    for (auto f : kAllFamilies)
        if (name(f) == s) return f;
    throw InputError("unknown model '" + std::string(s) + "'");
}

inline Param parse_param(std::string_view s) {
    for (auto p : {Param::mu, Param::theta, Param::omega, Param::alpha, Param::phi, Param::nu,
                   Param::pi, Param::sigma2})
        if (name(p) == s) return p;
    throw InputError("unknown parameter '" + std::string(s) + "'");
}

inline bool is_interval_family(Family f) {
    return f == Family::normal || f == Family::t || f == Family::skellam ||
           f == Family::zi_skellam;
}

inline DistKind dist_kind(Family f) {
    switch (f) {
        case Family::normal: return DistKind::normal;
        case Family::skellam: return DistKind::skellam;
        case Family::zi_skellam: return DistKind::zi_skellam;
        default: return DistKind::t;
    }
}

struct ModelSpec {
    Family family = Family::t;
    // Reads the score-driven continuous recursion literally, with phi multiplying
    // sigma^2 rather than ln sigma^2. Only for comparison runs.
    bool gas_literal = false;
};

/// Parameter names of a family, in their fixed order.
inline std::vector<Param> param_names(Family f) {
    switch (f) {
        case Family::garch_t:
        case Family::gas_t: return {Param::mu, Param::omega, Param::alpha, Param::phi, Param::nu};
        case Family::static_t: return {Param::sigma2, Param::nu};
        case Family::normal:
        case Family::skellam: return {Param::theta, Param::omega, Param::alpha, Param::phi};
        case Family::t: return {Param::theta, Param::omega, Param::alpha, Param::phi, Param::nu};
        case Family::zi_skellam:
            return {Param::theta, Param::omega, Param::alpha, Param::phi, Param::pi};
    }
    return {};
}

/// Ordered named parameters of one model family.
class ParamVector {
public:
    ParamVector() = default;

    explicit ParamVector(Family f) : names_(param_names(f)), values_(names_.size(), 0.0) {}

    ParamVector(Family f, std::vector<double> values) : names_(param_names(f)), values_(std::move(values)) {
        if (values_.size() != names_.size())
            throw DomainError("expected " + std::to_string(names_.size()) + " parameters for " +
                              std::string(name(f)));
    }

    std::size_t size() const { return names_.size(); }
    const std::vector<Param>& names() const { return names_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool has(Param p) const { return std::find(names_.begin(), names_.end(), p) != names_.end(); }

    double get(Param p) const { return values_[index(p)]; }
    std::optional<double> find(Param p) const {
        if (!has(p)) return std::nullopt;
        return get(p);
    }
    void set(Param p, double v) { values_[index(p)] = v; }

    std::size_t index(Param p) const {
        const auto it = std::find(names_.begin(), names_.end(), p);
        if (it == names_.end()) throw DomainError("parameter '" + std::string(name(p)) + "' not in model");
        return static_cast<std::size_t>(it - names_.begin());
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<Param> names_;
    std::vector<double> values_;
};

}  // namespace tickvol
