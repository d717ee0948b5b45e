#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace tickvol {

/// Argument outside a function's mathematical domain (nu <= 0, sigma2 <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A score with respect to ln sigma^2 could not be evaluated.
///
/// Raised by the distribution kernels at the Skellam boundary and when an
/// interval probability is zero even in log space. Filters rethrow it with
/// the offending observation index attached.
class ScoreUndefinedError : public std::runtime_error {
public:
    explicit ScoreUndefinedError(const std::string& what,
                                 std::optional<std::size_t> index = std::nullopt)
        : std::runtime_error(what), index_(index) {}

    std::optional<std::size_t> index() const { return index_; }

private:
    std::optional<std::size_t> index_;
};

/// The variance recursion produced a non-finite value.
class FilterDivergedError : public std::runtime_error {
public:
    FilterDivergedError(const std::string& what, std::size_t index)
        : std::runtime_error(what), index_(index) {}

    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Malformed input file or configuration. `line()` is 1-based when known.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what, std::optional<std::size_t> line = std::nullopt)
        : std::runtime_error(line ? what + " (line " + std::to_string(*line) + ")" : what),
          line_(line) {}

    std::optional<std::size_t> line() const { return line_; }

private:
    std::optional<std::size_t> line_;
};

}  // namespace tickvol
