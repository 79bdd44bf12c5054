#include "oracleloom/error.hpp"

namespace oracleloom {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoKeyword: return "NoKeyword";
    case ErrorCode::BadDate: return "BadDate";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::EmptyLexicon: return "EmptyLexicon";
    case ErrorCode::BadThresholds: return "BadThresholds";
    case ErrorCode::DayMismatch: return "DayMismatch";
    case ErrorCode::BadLexicon: return "BadLexicon";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadArgument: return "BadArgument";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::NonContiguous: return "NonContiguous";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::BadFixture: return "BadFixture";
    case ErrorCode::LiveDisabled: return "LiveDisabled";
    case ErrorCode::UpstreamError: return "UpstreamError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ProviderUnknown: return "ProviderUnknown";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::EmptyClause: return "EmptyClause";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::MalformedMarkers: return "MalformedMarkers";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::IncompleteReport: return "IncompleteReport";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace oracleloom
