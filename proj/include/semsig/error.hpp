#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semsig {

enum class ErrorKind {
    invalid_argument,
    empty_input,
    numerical_singularity,
    invalid_distribution,
    undefined_metric,
    parse_error,
    validation_error,
    io_error,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::numerical_singularity: return "numerical-singularity";
    case ErrorKind::invalid_distribution: return "invalid-distribution";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::validation_error: return "validation-error";
    case ErrorKind::io_error: return "io-error";
    }
    return "unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what)
        , kind_(kind)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

inline void require(bool cond, ErrorKind kind, const std::string& what)
{
    if (!cond) {
        throw Error(kind, what);
    }
}

} // namespace detail
} // namespace semsig
