#include "selrag/prompt.hpp"

#include "selrag/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <ostream>

namespace selrag::prompt {

bool contains_marker(std::string_view code) noexcept {
  return code.find(kBugMarker) != std::string_view::npos || code.find(kFixMarker) != std::string_view::npos;
}

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) {
    s.remove_suffix(1);
  }
  return s;
}

} // namespace

std::string render_prompt(std::span<const CodePairView> pairs, std::string_view target) {
  std::size_t size = target.size() + 12;
  for (const auto& [bug, fix] : pairs) {
    size += bug.size() + fix.size() + 14;
  }
  std::string text;
  text.reserve(size);
  for (const auto& [bug, fix] : pairs) {
    text.append(kBugMarker).append(" ").append(strip(bug)).append(" ");
    text.append(kFixMarker).append(" ").append(strip(fix)).append(" ");
  }
  text.append(kBugMarker).append(" ").append(strip(target)).append(" ").append(kFixMarker);
  return text;
}

void check_target(std::string_view target) {
  if (std::all_of(target.begin(), target.end(), [](unsigned char c) { return std::isspace(c) != 0; })) {
    throw Error(ErrorCode::empty_target, "target buggy code is empty");
  }
  if (contains_marker(target)) {
    throw Error(ErrorCode::marker_collision, "target code contains a [BUG]/[FIX] literal");
  }
}

RepairPrompt assemble_prompt(const retrieval::RetrievedContext& context, std::string_view target,
                             const Tokenizer& tokenizer) {
  check_target(target);
  RepairPrompt prompt;
  std::vector<CodePairView> pairs;
  pairs.reserve(context.selected.size());
  for (const auto& scored : context.selected) {
    const auto& pair = scored.pair;
    if (contains_marker(pair.buggy_code) || contains_marker(pair.fixed_code)) {
      prompt.warnings.push_back("pair '" + pair.id + "' dropped: code contains a prompt marker");
      continue;
    }
    pairs.emplace_back(pair.buggy_code, pair.fixed_code);
  }
  prompt.text = render_prompt(pairs, target);
  prompt.token_count = tokenizer.count(prompt.text);
  prompt.pairs_included = pairs.size();
  return prompt;
}

ParsedPrompt parse_prompt(std::string_view text) {
  // Segments alternate: [BUG] code [FIX] code [BUG] ... [BUG] target [FIX]
  std::vector<std::pair<std::string_view, std::string_view>> segments; // (marker, body)
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto bug = text.find(kBugMarker, pos);
    const auto fix = text.find(kFixMarker, pos);
    const auto next = std::min(bug, fix);
    if (next == std::string_view::npos) {
      break;
    }
    if (!segments.empty()) {
      segments.back().second = text.substr(pos, next - pos);
    } else if (!strip(text.substr(0, next)).empty()) {
      throw Error(ErrorCode::invalid_format, "prompt does not start with [BUG]");
    }
    segments.emplace_back(text.substr(next, kBugMarker.size()), std::string_view{});
    pos = next + kBugMarker.size();
  }
  if (segments.empty()) {
    throw Error(ErrorCode::invalid_format, "prompt has no markers");
  }
  if (!strip(text.substr(pos)).empty()) {
    throw Error(ErrorCode::invalid_format, "prompt must end with [FIX]");
  }
  if (segments.size() % 2 != 0) {
    throw Error(ErrorCode::invalid_format, "unbalanced [BUG]/[FIX] markers");
  }
  ParsedPrompt parsed;
  for (std::size_t i = 0; i < segments.size(); i += 2) {
    if (segments[i].first != kBugMarker || segments[i + 1].first != kFixMarker) {
      throw Error(ErrorCode::invalid_format, "markers must alternate [BUG], [FIX]");
    }
    const bool last = i + 2 == segments.size();
    if (last) {
      parsed.target = std::string(strip(segments[i].second));
      if (!strip(segments[i + 1].second).empty()) {
        throw Error(ErrorCode::invalid_format, "text after final [FIX]");
      }
    } else {
      parsed.pairs.emplace_back(std::string(strip(segments[i].second)), std::string(strip(segments[i + 1].second)));
    }
  }
  return parsed;
}

ExportSummary export_training_rows(std::span<const retrieval::BugFixPair> dataset,
                                   const retrieval::Retriever* retriever, const retrieval::GateConfig& gate,
                                   const Tokenizer& tokenizer, std::ostream& out) {
  ExportSummary summary;
  for (const auto& sample : dataset) {
    try {
      retrieval::RetrievedContext context;
      if (retriever != nullptr) {
        context = retriever->retrieve(sample.buggy_code, sample.language, gate, tokenizer);
      }
      const auto prompt = assemble_prompt(context, sample.buggy_code, tokenizer);
      nlohmann::ordered_json row;
      row["prompt"] = prompt.text;
      row["completion"] = sample.fixed_code;
      out << row.dump() << '\n';
      ++summary.rows;
    } catch (const Error& e) {
      summary.skipped.push_back({sample.id, e.what()});
    }
  }
  return summary;
}

} // namespace selrag::prompt
