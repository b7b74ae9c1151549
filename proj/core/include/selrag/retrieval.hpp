#pragma once

#include "selrag/embedding.hpp"
#include "selrag/grammar.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selrag::prompt {
class Tokenizer;
}

namespace selrag::retrieval {

/// A buggy method and its developer fix.
struct BugFixPair {
  std::string id;
  std::string buggy_code;
  std::string fixed_code;
  std::string language;

  friend bool operator==(const BugFixPair&, const BugFixPair&) = default;
};

/// Which vector drives similarity. `semantic_only` drops the structural
/// retriever ("sr" on the command line), `structural_only` drops the semantic
/// one ("ssdr").
enum class RetrievalMode { hybrid, semantic_only, structural_only };

std::string_view to_string(RetrievalMode mode) noexcept;
/// Accepts hybrid|sr|ssdr and the long names. Throws Error(invalid_config).
RetrievalMode parse_retrieval_mode(std::string_view text);

struct IndexEntry {
  BugFixPair pair;
  embed::FeatureVector semantic;
  embed::FeatureVector structural;
  embed::FeatureVector hybrid;
};

/// Immutable after construction; safe for concurrent readers.
class CodebaseIndex {
public:
  /// Throws Error(duplicate_id), Error(dimension_mismatch) or Error(index_empty).
  CodebaseIndex(embed::EmbedderSpec embedder, RetrievalMode mode, std::vector<IndexEntry> entries);

  const embed::EmbedderSpec& embedder_spec() const noexcept { return embedder_; }
  RetrievalMode mode() const noexcept { return mode_; }
  std::span<const IndexEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// nullptr when no entry has this id.
  const IndexEntry* find(std::string_view id) const noexcept;

  /// The vector compared against queries under this index's mode.
  const embed::FeatureVector& scoring_vector(const IndexEntry& entry) const noexcept;

  /// Same entries scored under another ablation mode.
  CodebaseIndex with_mode(RetrievalMode mode) const;

private:
  embed::EmbedderSpec embedder_;
  RetrievalMode mode_;
  std::vector<IndexEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

struct SkippedPair {
  std::string id;
  std::string reason;
};

struct BuildResult {
  CodebaseIndex index;
  std::vector<SkippedPair> skipped;
};

/// Embeds every pair's buggy code. Pairs with blank code are skipped and
/// reported; embedder errors propagate. Throws Error(index_empty) when
/// nothing survives. Stored vectors are rounded to float precision so a
/// saved index reloads bit-identically.
BuildResult build_index(std::span<const BugFixPair> pairs, const embed::Embedder& embedder, RetrievalMode mode,
                        const ast::GrammarRegistry& registry = ast::default_registry());

/// (a·b) / (‖a‖‖b‖), clamped to [-1, 1]. Throws Error(zero_vector) or
/// Error(dimension_mismatch).
double cosine_similarity(const embed::FeatureVector& a, const embed::FeatureVector& b);

struct GateConfig {
  /// Strictly-greater-than admission threshold; -1 admits everything.
  double threshold = 0.9;
  std::size_t max_context_tokens = 512;
  std::size_t max_pairs = 10;

  void validate() const;
};

/// Defaults used for the three corpus families: short methods (< 50 tokens),
/// medium methods (50-100 tokens) and long C/C++ functions.
enum class CorpusProfile { short_methods, medium_methods, long_functions };
GateConfig default_gate(CorpusProfile profile);

struct ScoredPair {
  BugFixPair pair;
  double similarity = 0.0;
};

struct RankedId {
  std::string id;
  double similarity = 0.0;

  friend bool operator==(const RankedId&, const RankedId&) = default;
};

struct RetrievedContext {
  /// Similarity-descending, id-ascending on ties.
  std::vector<ScoredPair> selected;
  std::size_t candidates_considered = 0;
  /// Entries whose similarity cleared the threshold.
  std::size_t admitted = 0;
  std::vector<std::string> skipped_for_budget;
  std::vector<std::string> rejected_for_markers;
};

/// Orders a full scan: similarity descending, ties by ascending id.
void sort_ranking(std::vector<RankedId>& ranking);

/// Binds an index to the embedder and grammars needed to score queries.
class Retriever {
public:
  /// Throws Error(invalid_config) if `embedder` is not the model the index
  /// was built with.
  Retriever(const CodebaseIndex& index, std::shared_ptr<const embed::Embedder> embedder,
            const ast::GrammarRegistry& registry = ast::default_registry());

  const CodebaseIndex& index() const noexcept { return *index_; }

  /// Query vector under the index mode. Throws Error(empty_input) or
  /// Error(zero_vector).
  embed::FeatureVector query_vector(std::string_view code, std::string_view language) const;

  /// Exact scan of every entry, pre-gate.
  std::vector<RankedId> rank(const embed::FeatureVector& query) const;

  /// Threshold gate plus token-budget packing. A pair that would overflow the
  /// budget is skipped and packing continues with the next one.
  RetrievedContext retrieve(std::string_view target, std::string_view language, const GateConfig& gate,
                            const prompt::Tokenizer& tokenizer) const;

  RetrievedContext select(const std::vector<RankedId>& ranking, std::string_view target, const GateConfig& gate,
                          const prompt::Tokenizer& tokenizer) const;

private:
  const CodebaseIndex* index_;
  std::shared_ptr<const embed::Embedder> embedder_;
  const ast::GrammarRegistry* registry_;
};

/// Independent naive re-implementation of the pre-gate ranking (repeated
/// arg-max with its own scalar cosine loop); used to check `Retriever::rank`.
std::vector<RankedId> brute_force_topk(const CodebaseIndex& index, const embed::FeatureVector& query,
                                       std::size_t k);

// --- persistence ---------------------------------------------------------------

/// "SRIX" container, format version 1, little-endian, vectors as float32.
std::string serialize_index(const CodebaseIndex& index);
/// Throws Error(invalid_format) on bad magic, version or truncation.
CodebaseIndex deserialize_index(std::string_view bytes);

void save_index(const CodebaseIndex& index, const std::filesystem::path& path);
/// Throws Error(index_missing) when `path` is absent or not a regular file.
CodebaseIndex load_index(const std::filesystem::path& path);

inline constexpr std::uint32_t kIndexFormatVersion = 1;

} // namespace selrag::retrieval
