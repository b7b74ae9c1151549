#include "selrag/error.hpp"

namespace selrag {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::invalid_argument: return "InvalidArgument";
  case ErrorCode::unsupported_language: return "UnsupportedLanguage";
  case ErrorCode::empty_input: return "EmptyInput";
  case ErrorCode::service_unavailable: return "ServiceUnavailable";
  case ErrorCode::dimension_mismatch: return "DimensionMismatch";
  case ErrorCode::zero_vector: return "ZeroVector";
  case ErrorCode::index_empty: return "IndexEmpty";
  case ErrorCode::index_missing: return "IndexMissing";
  case ErrorCode::invalid_format: return "InvalidFormat";
  case ErrorCode::duplicate_id: return "DuplicateId";
  case ErrorCode::empty_target: return "EmptyTarget";
  case ErrorCode::marker_collision: return "MarkerCollision";
  case ErrorCode::empty_sequence: return "EmptySequence";
  case ErrorCode::parse_failure: return "ParseFailure";
  case ErrorCode::backend_unavailable: return "BackendUnavailable";
  case ErrorCode::backend_contract: return "BackendContract";
  case ErrorCode::file_not_found: return "FileNotFound";
  case ErrorCode::all_rows_invalid: return "AllRowsInvalid";
  case ErrorCode::insufficient_records: return "InsufficientRecords";
  case ErrorCode::invalid_config: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, std::string_view stage, const std::string& message) {
  std::string out;
  if (!stage.empty()) {
    out.append("[").append(stage).append("] ");
  }
  out.append(to_string(code)).append(": ").append(message);
  return out;
}

} // namespace

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(format_message(code, {}, message)), code_(code), detail_(message) {}

Error::Error(ErrorCode code, std::string stage, const std::string& message)
    : std::runtime_error(format_message(code, stage, message)), code_(code), stage_(std::move(stage)),
      detail_(message) {}

Error Error::with_stage(std::string stage) const { return Error(code_, std::move(stage), detail_); }

} // namespace selrag
