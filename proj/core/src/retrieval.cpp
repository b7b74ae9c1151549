#include "selrag/retrieval.hpp"

#include "selrag/error.hpp"
#include "selrag/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace selrag::retrieval {

std::string_view to_string(RetrievalMode mode) noexcept {
  switch (mode) {
  case RetrievalMode::hybrid: return "hybrid";
  case RetrievalMode::semantic_only: return "sr";
  case RetrievalMode::structural_only: return "ssdr";
  }
  return "unknown";
}

RetrievalMode parse_retrieval_mode(std::string_view text) {
  if (text == "hybrid") {
    return RetrievalMode::hybrid;
  }
  if (text == "sr" || text == "semantic" || text == "semantic-only") {
    return RetrievalMode::semantic_only;
  }
  if (text == "ssdr" || text == "structural" || text == "structural-only") {
    return RetrievalMode::structural_only;
  }
  throw Error(ErrorCode::invalid_config, "unknown retrieval mode '" + std::string(text) + "'");
}

CodebaseIndex::CodebaseIndex(embed::EmbedderSpec embedder, RetrievalMode mode, std::vector<IndexEntry> entries)
    : embedder_(std::move(embedder)), mode_(mode), entries_(std::move(entries)) {
  if (entries_.empty()) {
    throw Error(ErrorCode::index_empty, "codebase index has no entries");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!by_id_.emplace(e.pair.id, i).second) {
      throw Error(ErrorCode::duplicate_id, "duplicate pair id '" + e.pair.id + "'");
    }
    if (e.semantic.dim() != embedder_.dim || e.structural.dim() != embedder_.dim || e.hybrid.dim() != embedder_.dim) {
      throw Error(ErrorCode::dimension_mismatch, "entry '" + e.pair.id + "' does not match embedder dim " +
                                                     std::to_string(embedder_.dim));
    }
  }
}

const IndexEntry* CodebaseIndex::find(std::string_view id) const noexcept {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

const embed::FeatureVector& CodebaseIndex::scoring_vector(const IndexEntry& entry) const noexcept {
  switch (mode_) {
  case RetrievalMode::semantic_only: return entry.semantic;
  case RetrievalMode::structural_only: return entry.structural;
  case RetrievalMode::hybrid: break;
  }
  return entry.hybrid;
}

CodebaseIndex CodebaseIndex::with_mode(RetrievalMode mode) const { return CodebaseIndex(embedder_, mode, entries_); }

namespace {

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

struct QueryVectors {
  embed::FeatureVector semantic;
  embed::FeatureVector structural;
};

QueryVectors embed_both(std::string_view code, std::string_view language, const embed::Embedder& embedder,
                        const ast::GrammarRegistry& registry) {
  const ast::AstNode tree = ast::parse_source(code, language, registry);
  return {embed::embed_code(code, embedder), embed::embed_ast(ast::ast_traversal(tree), embedder)};
}

} // namespace

BuildResult build_index(std::span<const BugFixPair> pairs, const embed::Embedder& embedder, RetrievalMode mode,
                        const ast::GrammarRegistry& registry) {
  if (pairs.empty()) {
    throw Error(ErrorCode::index_empty, "no bug-fix pairs to index");
  }
  std::vector<IndexEntry> entries;
  std::vector<SkippedPair> skipped;
  entries.reserve(pairs.size());
  for (const auto& pair : pairs) {
    if (is_blank(pair.buggy_code) || is_blank(pair.fixed_code)) {
      skipped.push_back({pair.id, is_blank(pair.buggy_code) ? "EmptyInput: buggy_code" : "EmptyInput: fixed_code"});
      continue;
    }
    auto [semantic, structural] = embed_both(pair.buggy_code, pair.language, embedder, registry);
    auto hybrid = embed::hybrid_vector(semantic, structural);
    entries.push_back({pair, semantic.to_float_precision(), structural.to_float_precision(),
                       hybrid.to_float_precision()});
  }
  if (entries.empty()) {
    throw Error(ErrorCode::index_empty, "all " + std::to_string(pairs.size()) + " pairs were skipped");
  }
  return {CodebaseIndex(embedder.spec(), mode, std::move(entries)), std::move(skipped)};
}

double cosine_similarity(const embed::FeatureVector& a, const embed::FeatureVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::dimension_mismatch,
                "cosine over dims " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    aa += av[i] * av[i];
    bb += bv[i] * bv[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    throw Error(ErrorCode::zero_vector, "cosine similarity is undefined for a zero vector");
  }
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

void GateConfig::validate() const {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::invalid_config, "gate threshold must lie in [-1, 1]");
  }
  if (max_context_tokens < 1 || max_pairs < 1) {
    throw Error(ErrorCode::invalid_config, "gate budget and max_pairs must be at least 1");
  }
}

GateConfig default_gate(CorpusProfile profile) {
  switch (profile) {
  case CorpusProfile::short_methods: return {0.9, 512, 10};
  case CorpusProfile::medium_methods: return {0.8, 1024, 10};
  case CorpusProfile::long_functions: return {0.8, 1500, 10};
  }
  return {};
}

void sort_ranking(std::vector<RankedId>& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const RankedId& x, const RankedId& y) {
    if (x.similarity != y.similarity) {
      return x.similarity > y.similarity;
    }
    return x.id < y.id;
  });
}

Retriever::Retriever(const CodebaseIndex& index, std::shared_ptr<const embed::Embedder> embedder,
                     const ast::GrammarRegistry& registry)
    : index_(&index), embedder_(std::move(embedder)), registry_(&registry) {
  if (!embedder_) {
    throw Error(ErrorCode::invalid_config, "retriever needs an embedder");
  }
  if (!embedder_->spec().same_model(index.embedder_spec())) {
    throw Error(ErrorCode::invalid_config, "embedder does not match the one the index was built with");
  }
}

embed::FeatureVector Retriever::query_vector(std::string_view code, std::string_view language) const {
  embed::FeatureVector query;
  switch (index_->mode()) {
  case RetrievalMode::semantic_only:
    query = embed::embed_code(code, *embedder_);
    break;
  case RetrievalMode::structural_only:
    query = embed::embed_ast(ast::ast_traversal(ast::parse_source(code, language, *registry_)), *embedder_);
    break;
  case RetrievalMode::hybrid: {
    auto [semantic, structural] = embed_both(code, language, *embedder_, *registry_);
    query = embed::hybrid_vector(semantic, structural);
    break;
  }
  }
  if (query.is_zero()) {
    throw Error(ErrorCode::zero_vector, "target code embeds to the zero vector");
  }
  return query;
}

std::vector<RankedId> Retriever::rank(const embed::FeatureVector& query) const {
  std::vector<RankedId> ranking;
  ranking.reserve(index_->size());
  for (const auto& entry : index_->entries()) {
    ranking.push_back({entry.pair.id, cosine_similarity(index_->scoring_vector(entry), query)});
  }
  sort_ranking(ranking);
  return ranking;
}

RetrievedContext Retriever::select(const std::vector<RankedId>& ranking, std::string_view target,
                                   const GateConfig& gate, const prompt::Tokenizer& tokenizer) const {
  gate.validate();
  prompt::check_target(target);

  RetrievedContext context;
  context.candidates_considered = ranking.size();

  std::vector<prompt::CodePairView> packed;
  for (const auto& candidate : ranking) {
    if (!(candidate.similarity > gate.threshold)) {
      // Ranking is descending: nothing further can clear the gate.
      break;
    }
    ++context.admitted;
    if (context.selected.size() >= gate.max_pairs) {
      continue;
    }
    const IndexEntry* entry = index_->find(candidate.id);
    if (entry == nullptr) {
      throw Error(ErrorCode::invalid_argument, "ranking refers to unknown id '" + candidate.id + "'");
    }
    const BugFixPair& pair = entry->pair;
    if (prompt::contains_marker(pair.buggy_code) || prompt::contains_marker(pair.fixed_code)) {
      context.rejected_for_markers.push_back(pair.id);
      continue;
    }
    packed.emplace_back(pair.buggy_code, pair.fixed_code);
    if (tokenizer.count(prompt::render_prompt(packed, target)) > gate.max_context_tokens) {
      packed.pop_back();
      context.skipped_for_budget.push_back(pair.id);
      continue;
    }
    context.selected.push_back({pair, candidate.similarity});
  }
  return context;
}

RetrievedContext Retriever::retrieve(std::string_view target, std::string_view language, const GateConfig& gate,
                                     const prompt::Tokenizer& tokenizer) const {
  prompt::check_target(target);
  return select(rank(query_vector(target, language)), target, gate, tokenizer);
}

} // namespace selrag::retrieval
