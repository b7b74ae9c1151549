#pragma once

#include "selrag/ast.hpp"
#include "selrag/grammar.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace selrag::metrics {

/// Lexical code tokens: identifiers, numbers, string/char literals, comments
/// and maximal-munch operators. Whitespace only separates.
std::vector<std::string> tokenize_code(std::string_view code);

/// Token-sequence equality after tokenization, so formatting is ignored.
bool exact_match(std::string_view candidate, std::string_view reference);

// --- BLEU --------------------------------------------------------------------

enum class Smoothing { none, epsilon };
inline constexpr double kSmoothingEpsilon = 1e-9;

struct BleuConfig {
  std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
  Smoothing smoothing = Smoothing::none;

  /// Non-negative weights summing to 1 within 1e-9.
  void validate() const;
};

/// 1 when the candidate is longer than the reference, exp(1 - r/c) otherwise.
double brevity_penalty(std::size_t candidate_length, std::size_t reference_length);

/// Clipped n-gram precisions of orders 1..4 with per-n-gram weights
/// (all 1 for standard BLEU).
struct NgramPrecisions {
  std::array<double, 4> matched{};
  std::array<double, 4> total{};
  /// Order n has no n-grams on either side (both sequences shorter than n).
  std::array<bool, 4> vacuous{};
};

/// BP * exp(sum w_n log p_n). An order with no n-grams on either side is
/// dropped and the remaining weights renormalized, so identical sequences
/// always score 1. Throws Error(empty_sequence).
double bleu4(std::span<const std::string> candidate, std::span<const std::string> reference,
             const BleuConfig& cfg = {});

/// Token weights for the keyword-weighted unigram precision. Keywords carry
/// `keyword_weight`, everything else `other_weight`.
struct KeywordWeights {
  std::unordered_map<std::string, double> weights;
  double other_weight = 0.2;

  double weight(const std::string& token) const;
  static KeywordWeights from_keywords(std::span<const std::string> keywords, double keyword_weight = 1.0,
                                      double other_weight = 0.2);
};

/// Counts behind BLEU; `unigram_weights` switches on keyword weighting.
NgramPrecisions ngram_precisions(std::span<const std::string> candidate, std::span<const std::string> reference,
                                 const KeywordWeights* unigram_weights = nullptr);

/// Keyword lists compiled in from core/data/keywords; empty for unknown ids.
std::vector<std::string> builtin_keywords(std::string_view language);
/// One keyword per line, `#` comments.
std::vector<std::string> load_keywords(const std::string& path);

/// BLEU where unigram matches are weighted by `keywords`; higher orders are
/// unweighted. Same brevity penalty and vacuous-order rule as `bleu4`.
double weighted_ngram_bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                           const KeywordWeights& keywords, const BleuConfig& cfg = {});

// --- syntax and data flow ----------------------------------------------------

/// Clipped fraction of reference subtrees (rooted at inner nodes, compared by
/// node-type shape) that also occur in the candidate.
double match_ast(const ast::AstNode& candidate, const ast::AstNode& reference);

/// One def-use link. `variable` is the canonical name (v0, v1, ... in order
/// of first appearance); ordinals count that variable's defs and uses.
/// `def_ordinal` is -1 for a use with no prior definition in the snippet.
struct DataflowEdge {
  std::string variable;
  int def_ordinal = -1;
  int use_ordinal = 0;

  friend bool operator==(const DataflowEdge&, const DataflowEdge&) = default;
  friend auto operator<=>(const DataflowEdge&, const DataflowEdge&) = default;
};

/// Single pass over the tree: declarations and assignments define,
/// identifier reads use; the right-hand side is read before the left-hand
/// side is written.
std::vector<DataflowEdge> extract_dataflow(const ast::AstNode& tree, std::string_view language);

/// Clipped fraction of reference edges found in the candidate; 1 when both
/// sides have no edges, 0 when only the reference has none.
double match_dataflow(std::span<const DataflowEdge> candidate, std::span<const DataflowEdge> reference);

/// Parses both sides. Throws Error(parse_failure) if either cannot be parsed.
double match_df(std::string_view candidate, std::string_view reference, std::string_view language,
                const ast::GrammarRegistry& registry = ast::default_registry());

// --- CodeBLEU ----------------------------------------------------------------

struct CodeBleuConfig {
  double alpha = 0.25;   // BLEU
  double beta = 0.25;    // keyword-weighted BLEU
  double gamma = 0.25;   // AST match
  double epsilon = 0.25; // data-flow match
  KeywordWeights keywords;

  /// Non-negative, summing to 1 within 1e-9. Throws Error(invalid_config).
  void validate() const;

  /// Equal weights and the built-in keyword list for `language`.
  static CodeBleuConfig for_language(std::string_view language);
  /// Parses "a,b,g,e".
  void set_weights(std::string_view csv);
};

struct CodeBleuScore {
  double bleu = 0.0;
  double weighted_bleu = 0.0;
  double ast_match = 0.0;
  double df_match = 0.0;
  double score = 0.0;
  /// Components that could not be computed and contributed 0.
  std::vector<std::string> flags;
};

/// Never throws for bad candidates; failed components score 0 and are
/// flagged. Unsupported languages and invalid configs still throw.
CodeBleuScore codebleu(std::string_view candidate, std::string_view reference, std::string_view language,
                       const CodeBleuConfig& cfg, const ast::GrammarRegistry& registry = ast::default_registry());

// --- batch reports -----------------------------------------------------------

struct EvalSample {
  std::string id;
  std::string candidate;
  std::string reference;
};

struct SampleScore {
  std::string id;
  bool exact = false;
  double bleu4 = 0.0;
  CodeBleuScore code;
};

struct EvalReport {
  double em_rate = 0.0;
  double bleu4 = 0.0;
  double codebleu = 0.0;
  std::vector<SampleScore> samples;
};

/// Scores every sample (in parallel when `workers` > 1) and averages.
/// Rows keep input order.
EvalReport evaluate(std::span<const EvalSample> samples, std::string_view language, const CodeBleuConfig& cfg,
                    std::size_t workers = 1, const ast::GrammarRegistry& registry = ast::default_registry());

/// Per-sample bleu4 under the default BleuConfig.
double sentence_bleu4(std::string_view candidate, std::string_view reference);

void write_report_json(const EvalReport& report, std::ostream& out);
/// id,exact_match,bleu4,codebleu,bleu,weighted_bleu,ast_match,df_match,flags
void write_samples_csv(const EvalReport& report, std::ostream& out);

} // namespace selrag::metrics
