#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selrag {

enum class ErrorCode {
  invalid_argument,
  unsupported_language,
  empty_input,
  service_unavailable,
  dimension_mismatch,
  zero_vector,
  index_empty,
  index_missing,
  invalid_format,
  duplicate_id,
  empty_target,
  marker_collision,
  empty_sequence,
  parse_failure,
  backend_unavailable,
  backend_contract,
  file_not_found,
  all_rows_invalid,
  insufficient_records,
  invalid_config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Transport-level failures that a caller may retry.
constexpr bool is_retryable(ErrorCode code) noexcept {
  return code == ErrorCode::service_unavailable || code == ErrorCode::backend_unavailable;
}

/// Single exception type for the library. `stage()` is set when an error
/// crosses a pipeline boundary (retrieve, prompt, generate, ...).
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, std::string stage, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  /// The message without code and stage prefixes.
  const std::string& detail() const noexcept { return detail_; }
  bool retryable() const noexcept { return is_retryable(code_); }

  /// Same error, tagged with the pipeline stage it surfaced from.
  Error with_stage(std::string stage) const;

private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

} // namespace selrag
