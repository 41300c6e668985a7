#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psel
{

/// Broad error categories. The CLI maps each one to its own exit status.
enum class ErrorKind
{
    invalid_argument,
    out_of_range,
    missing_section,
    length_mismatch,
    zero_variance,
    numeric,
    parse,
    invariant,
    version,
    io,
};

constexpr std::string_view to_string(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::missing_section: return "missing_section";
    case ErrorKind::length_mismatch: return "length_mismatch";
    case ErrorKind::zero_variance: return "zero_variance";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invariant: return "invariant";
    case ErrorKind::version: return "version";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

} // namespace psel
