#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pdsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or violated parameter invariant. `field()` names the
/// offending input when there is one.
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what, std::string field = {})
        : Error(what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, std::size_t pivot)
        : Error(what), pivot_(pivot) {}

    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// A filter or factorization broke down. Filters attach the 0-based
/// observation index where it happened.
class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what,
                              std::optional<std::size_t> time_index = std::nullopt)
        : Error(what), time_index_(time_index) {}

    std::optional<std::size_t> time_index() const noexcept { return time_index_; }

private:
    std::optional<std::size_t> time_index_;
};

} // namespace pdsim
