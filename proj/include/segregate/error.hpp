#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace segregate {

enum class ErrorKind {
    NoConvergence,
    InvalidExponent,
    TailNotSettled,
    DiscretizationTooCoarse,
    QuadratureBudgetExceeded,
    FitRejected,
    ModeUnsupported,
    CaseUnresolved,
    NoSignChange,
    EmptyInterval,
    NearResonance,
    SolverFailure,
    NoContraction,
    GridTooCoarse,
    UnknownCommand,
    ConfigInvalid,
    IoFailure,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Validation problems map to exit status 1, numerical ones to 2.
    bool is_validation() const noexcept {
        switch (kind_) {
        case ErrorKind::InvalidExponent:
        case ErrorKind::ModeUnsupported:
        case ErrorKind::EmptyInterval:
        case ErrorKind::UnknownCommand:
        case ErrorKind::ConfigInvalid:
        case ErrorKind::IoFailure:
        case ErrorKind::InvalidArgument:
            return true;
        default:
            return false;
        }
    }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InvalidExponent: return "InvalidExponent";
    case ErrorKind::TailNotSettled: return "TailNotSettled";
    case ErrorKind::DiscretizationTooCoarse: return "DiscretizationTooCoarse";
    case ErrorKind::QuadratureBudgetExceeded: return "QuadratureBudgetExceeded";
    case ErrorKind::FitRejected: return "FitRejected";
    case ErrorKind::ModeUnsupported: return "ModeUnsupported";
    case ErrorKind::CaseUnresolved: return "CaseUnresolved";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::NearResonance: return "NearResonance";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::NoContraction: return "NoContraction";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::UnknownCommand: return "UnknownCommand";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace segregate
