#pragma once

#include "selrag/retrieval.hpp"
#include "selrag/tokenizer.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace selrag::prompt {

inline constexpr std::string_view kBugMarker = "[BUG]";
inline constexpr std::string_view kFixMarker = "[FIX]";

bool contains_marker(std::string_view code) noexcept;

/// `[BUG] RBC1 [FIX] RFC1 ... [BUG] BC [FIX]`
struct RepairPrompt {
  std::string text;
  std::size_t token_count = 0;
  std::size_t pairs_included = 0;
  /// Pairs dropped because their code contains a marker literal.
  std::vector<std::string> warnings;
};

using CodePairView = std::pair<std::string_view, std::string_view>;

/// Plain formatting, no validation: each code segment is trimmed and joined
/// with single spaces; nothing follows the final `[FIX]`.
std::string render_prompt(std::span<const CodePairView> pairs, std::string_view target);

/// Throws Error(empty_target) for blank targets and Error(marker_collision)
/// if the target contains a marker literal.
void check_target(std::string_view target);

/// Serializes the context in order. Token count is measured on the full text.
RepairPrompt assemble_prompt(const retrieval::RetrievedContext& context, std::string_view target,
                             const Tokenizer& tokenizer);

struct ParsedPrompt {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string target;
};

/// Inverse of `render_prompt` for marker-free code. Throws
/// Error(invalid_format) if `text` does not follow the prompt grammar.
ParsedPrompt parse_prompt(std::string_view text);

struct ExportSkip {
  std::string id;
  std::string error;
};

struct ExportSummary {
  std::size_t rows = 0;
  std::vector<ExportSkip> skipped;
};

/// Writes one `{"prompt","completion"}` JSON line per sample. Retrieval
/// failures become skip records instead of aborting the stream. A null
/// `retriever` exports zero-pair prompts.
ExportSummary export_training_rows(std::span<const retrieval::BugFixPair> dataset,
                                   const retrieval::Retriever* retriever, const retrieval::GateConfig& gate,
                                   const Tokenizer& tokenizer, std::ostream& out);

} // namespace selrag::prompt
