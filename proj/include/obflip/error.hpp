#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obflip {

enum class ErrorCode {
  RankDeficient,
  TooFewRows,
  DegenerateMeans,
  DimensionMismatch,
  NonPositiveParameter,
  QuadratureNotConverged,
  InvalidDrawCount,
  PointFitFailed,
  TooManyFailedReplicates,
  ZeroStandardError,
  UnknownColumn,
  EmptyDataset,
  FileNotFound,
  MissingColumn,
  FewerThanTwoGroups,
  AllRowsDropped,
  InvalidConfig,
  NonFiniteValue,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DegenerateMeans: return "DegenerateMeans";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveParameter: return "NonPositiveParameter";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::InvalidDrawCount: return "InvalidDrawCount";
    case ErrorCode::PointFitFailed: return "PointFitFailed";
    case ErrorCode::TooManyFailedReplicates: return "TooManyFailedReplicates";
    case ErrorCode::ZeroStandardError: return "ZeroStandardError";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::FewerThanTwoGroups: return "FewerThanTwoGroups";
    case ErrorCode::AllRowsDropped: return "AllRowsDropped";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace obflip
