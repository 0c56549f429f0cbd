#ifndef CIRLS_COMMON_HPP
#define CIRLS_COMMON_HPP

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace cirls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
    DimensionMismatch,
    RankDeficientConstraints,
    InvalidBounds,
    ZeroRow,
    UnboundedRow,
    IndexOutOfRange,
    TooFewIndices,
    RunTooShort,
    TooManyConstraints,
    SupportViolation,
    NumericOverflow,
    NonPositiveDf,
    Infeasible,
    NotPositiveDefinite,
    MaxIterationsExceeded,
    NonFiniteDeviance,
    RankDeficientDesign,
    SingularInformation,
    DegenerateTruncation,
    TooFewDraws,
    EmptyInterval,
    MissingDataset,
    InvalidConfig,
    InvalidData,
};

inline const char *error_code_name(ErrorCode c)
{
    switch (c) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficientConstraints: return "RankDeficientConstraints";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::UnboundedRow: return "UnboundedRow";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TooFewIndices: return "TooFewIndices";
    case ErrorCode::RunTooShort: return "RunTooShort";
    case ErrorCode::TooManyConstraints: return "TooManyConstraints";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::NumericOverflow: return "NumericOverflow";
    case ErrorCode::NonPositiveDf: return "NonPositiveDf";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::NonFiniteDeviance: return "NonFiniteDeviance";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::DegenerateTruncation: return "DegenerateTruncation";
    case ErrorCode::TooFewDraws: return "TooFewDraws";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::MissingDataset: return "MissingDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidData: return "InvalidData";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
          code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what)
{
    throw Error(code, what);
}

} // namespace cirls

#endif
