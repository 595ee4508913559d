#pragma once

#include <stdexcept>
#include <string>

namespace epinet {

enum class ErrorKind {
    DimensionMismatch,
    InvalidParameter,
    Disconnected,
    NotIrreducible,
    NoConvergence,
    WrongRegime,
    NonFiniteState,
    StepUnderflow,
    InvalidScenario,
    Io,
};

inline const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::InvalidParameter: return "invalid parameter";
    case ErrorKind::Disconnected: return "disconnected";
    case ErrorKind::NotIrreducible: return "not irreducible";
    case ErrorKind::NoConvergence: return "no convergence";
    case ErrorKind::WrongRegime: return "wrong regime";
    case ErrorKind::NonFiniteState: return "non-finite state";
    case ErrorKind::StepUnderflow: return "step-size underflow";
    case ErrorKind::InvalidScenario: return "invalid scenario";
    case ErrorKind::Io: return "i/o error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail)
        , kind_(kind)
        , detail_(detail)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

inline void require_same_size(std::size_t expected, std::size_t got, const char* what)
{
    if (expected != got) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + " has length " + std::to_string(got) + ", expected " +
                        std::to_string(expected));
    }
}

} // namespace epinet
