#include "corpus.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

#include "selrag/prompt.hpp"
#include "selrag/retrieval.hpp"
#include "selrag/tokenizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

using namespace selrag;
using retrieval::GateConfig;
using retrieval::RankedId;
using retrieval::RetrievalMode;

namespace {

embed::FeatureVector vec(std::vector<double> v) { return embed::FeatureVector(std::move(v)); }

std::shared_ptr<const embed::Embedder> baseline(std::size_t dim = 256) {
  return embed::make_embedder(embed::EmbedderSpec::baseline(dim));
}

/// Index over arbitrary code with a shared unit vector; only the ranking
/// passed to select() matters for these tests.
retrieval::CodebaseIndex code_index(const std::vector<retrieval::BugFixPair>& pairs) {
  std::vector<retrieval::IndexEntry> entries;
  for (const auto& p : pairs) {
    const auto v = vec({1.0, 0.0});
    entries.push_back({p, v, v, v});
  }
  return retrieval::CodebaseIndex(embed::EmbedderSpec::baseline(2), RetrievalMode::hybrid, std::move(entries));
}

std::vector<std::string> ids_of(const retrieval::RetrievedContext& ctx) {
  std::vector<std::string> ids;
  for (const auto& s : ctx.selected) {
    ids.push_back(s.pair.id);
  }
  return ids;
}

const prompt::WhitespaceTokenizer kTokens;

} // namespace

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(retrieval::cosine_similarity(vec({1, 0}), vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(retrieval::cosine_similarity(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(retrieval::cosine_similarity(vec({1, 0}), vec({-1, 0})), -1.0);
  EXPECT_NEAR(retrieval::cosine_similarity(vec({1, 1}), vec({1, 0})), std::sqrt(0.5), 1e-12);
}

TEST(Cosine, Errors) {
  EXPECT_SELRAG_ERROR(retrieval::cosine_similarity(vec({0, 0}), vec({1, 0})), ErrorCode::zero_vector);
  EXPECT_SELRAG_ERROR(retrieval::cosine_similarity(vec({1, 0}), vec({1, 0, 0})), ErrorCode::dimension_mismatch);
}

TEST(Cosine, MatchesOracleClampedAndScaleInvariant) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto a = testdata::random_values(rng, 33);
    const auto b = testdata::random_values(rng, 33);
    const double got = retrieval::cosine_similarity(vec(a), vec(b));
    EXPECT_NEAR(got, oracle::cosine(a, b), 1e-12);
    EXPECT_LE(std::abs(got), 1.0);
    EXPECT_NEAR(retrieval::cosine_similarity(vec(a).scaled(3.5), vec(b).scaled(0.01)), got, 1e-12);
  }
  // Parallel vectors can round slightly past 1 before clamping.
  const auto a = vec({0.1, 0.2, 0.3});
  EXPECT_LE(retrieval::cosine_similarity(a, a.scaled(7.0)), 1.0);
}

TEST(Cosine, Symmetric) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto a = vec(testdata::random_values(rng, 12));
    const auto b = vec(testdata::random_values(rng, 12));
    EXPECT_EQ(retrieval::cosine_similarity(a, b), retrieval::cosine_similarity(b, a));
  }
}

TEST(RetrievalMode, ParseAndPrint) {
  EXPECT_EQ(retrieval::parse_retrieval_mode("sr"), RetrievalMode::semantic_only);
  EXPECT_EQ(retrieval::parse_retrieval_mode("ssdr"), RetrievalMode::structural_only);
  EXPECT_EQ(retrieval::parse_retrieval_mode("hybrid"), RetrievalMode::hybrid);
  EXPECT_EQ(retrieval::to_string(RetrievalMode::semantic_only), "sr");
  EXPECT_SELRAG_ERROR(retrieval::parse_retrieval_mode("dense"), ErrorCode::invalid_config);
}

TEST(BuildIndex, SkipsBlankPairs) {
  std::vector<retrieval::BugFixPair> pairs = testdata::synthetic_pairs(3, 1);
  pairs.push_back({"blank", "   \n", "int x;", "java"});
  pairs.push_back({"nofix", "int x;", "", "java"});
  const auto built = retrieval::build_index(pairs, *baseline(), RetrievalMode::hybrid);
  EXPECT_EQ(built.index.size(), 3U);
  ASSERT_EQ(built.skipped.size(), 2U);
  EXPECT_EQ(built.skipped[0].id, "blank");
  EXPECT_EQ(built.skipped[1].id, "nofix");
  EXPECT_EQ(built.index.find("blank"), nullptr);
}

TEST(BuildIndex, Errors) {
  EXPECT_SELRAG_ERROR(retrieval::build_index({}, *baseline(), RetrievalMode::hybrid), ErrorCode::index_empty);
  const std::vector<retrieval::BugFixPair> blanks = {{"a", " ", "x", "java"}};
  EXPECT_SELRAG_ERROR(retrieval::build_index(blanks, *baseline(), RetrievalMode::hybrid), ErrorCode::index_empty);
  auto pairs = testdata::synthetic_pairs(2, 1);
  pairs[1].id = pairs[0].id;
  EXPECT_SELRAG_ERROR(retrieval::build_index(pairs, *baseline(), RetrievalMode::hybrid), ErrorCode::duplicate_id);
}

TEST(BuildIndex, EntriesHoldAllThreeVectors) {
  const auto pairs = testdata::synthetic_pairs(5, 3);
  const auto built = retrieval::build_index(pairs, *baseline(64), RetrievalMode::hybrid);
  for (const auto& e : built.index.entries()) {
    ASSERT_EQ(e.semantic.dim(), 64U);
    ASSERT_EQ(e.structural.dim(), 64U);
    for (std::size_t i = 0; i < 64; ++i) {
      EXPECT_NEAR(e.hybrid[i], (e.semantic[i] + e.structural[i]) / 2.0, 1e-6);
    }
    EXPECT_EQ(e.semantic, e.semantic.to_float_precision());
  }
  const auto sr = built.index.with_mode(RetrievalMode::semantic_only);
  EXPECT_EQ(&sr.scoring_vector(sr.entries()[0]), &sr.entries()[0].semantic);
  const auto ssdr = built.index.with_mode(RetrievalMode::structural_only);
  EXPECT_EQ(&ssdr.scoring_vector(ssdr.entries()[0]), &ssdr.entries()[0].structural);
}

TEST(Gate, ThresholdIsStrict) {
  const auto index = testdata::index_from_vectors({{"A", {1, 0}}, {"B", {1, 0}}, {"C", {1, 0}}});
  const retrieval::Retriever r(index, baseline(2));
  const std::vector<RankedId> ranking = {{"A", 0.95}, {"B", 0.85}, {"C", 0.6}};
  auto ctx = r.select(ranking, "target", {0.8, 512, 10}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(ctx.admitted, 2U);
  EXPECT_EQ(ctx.candidates_considered, 3U);
  EXPECT_DOUBLE_EQ(ctx.selected[0].similarity, 0.95);

  ctx = r.select(ranking, "target", {0.85, 512, 10}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"A"}));

  ctx = r.select(ranking, "target", {0.95, 512, 10}, kTokens);
  EXPECT_TRUE(ctx.selected.empty());
  EXPECT_EQ(ctx.admitted, 0U);

  ctx = r.select(ranking, "target", {-1.0, 512, 10}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(Gate, BudgetKeepsOnlyWhatFits) {
  const auto index = testdata::index_from_vectors({{"A", {1, 0}}, {"B", {1, 0}}, {"C", {1, 0}}});
  const retrieval::Retriever r(index, baseline(2));
  const std::vector<RankedId> ranking = {{"A", 0.95}, {"B", 0.85}, {"C", 0.6}};
  // "[BUG] target [FIX]" is 3 tokens, each "[BUG] buggy X [FIX] fixed X" pair adds 6.
  auto ctx = r.select(ranking, "target", {0.8, 10, 10}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"A"}));
  EXPECT_EQ(ctx.skipped_for_budget, (std::vector<std::string>{"B"}));
  EXPECT_EQ(ctx.admitted, 2U);

  ctx = r.select(ranking, "target", {0.8, 15, 10}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"A", "B"}));

  // Budget smaller than the bare target: nothing fits, but no error.
  ctx = r.select(ranking, "target", {0.8, 2, 10}, kTokens);
  EXPECT_TRUE(ctx.selected.empty());
  EXPECT_EQ(ctx.skipped_for_budget.size(), 2U);
}

TEST(Gate, OverflowingPairIsSkippedAndPackingContinues) {
  const auto index = code_index({{"big", std::string(200, 'x') + " a b c d e f g h i j", "fix", "java"},
                                 {"small", "x", "y", "java"}});
  const retrieval::Retriever r(index, baseline(2));
  const std::vector<RankedId> ranking = {{"big", 0.99}, {"small", 0.98}};
  const auto ctx = r.select(ranking, "t", {0.5, 10, 10}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"small"}));
  EXPECT_EQ(ctx.skipped_for_budget, (std::vector<std::string>{"big"}));
}

TEST(Gate, MaxPairsStopsSelection) {
  const auto index = testdata::index_from_vectors({{"A", {1, 0}}, {"B", {1, 0}}, {"C", {1, 0}}});
  const retrieval::Retriever r(index, baseline(2));
  const std::vector<RankedId> ranking = {{"A", 0.95}, {"B", 0.94}, {"C", 0.93}};
  const auto ctx = r.select(ranking, "target", {0.5, 512, 2}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(ctx.admitted, 3U);
  EXPECT_TRUE(ctx.skipped_for_budget.empty());
}

TEST(Gate, MarkerPairsAreRejected) {
  const auto index = code_index({{"m", "a [FIX] b", "c", "java"}, {"ok", "x", "y", "java"}});
  const retrieval::Retriever r(index, baseline(2));
  const auto ctx = r.select({{"m", 0.9}, {"ok", 0.8}}, "t", {0.5, 512, 10}, kTokens);
  EXPECT_EQ(ids_of(ctx), (std::vector<std::string>{"ok"}));
  EXPECT_EQ(ctx.rejected_for_markers, (std::vector<std::string>{"m"}));
}

TEST(Gate, TargetAndConfigValidation) {
  const auto index = testdata::index_from_vectors({{"A", {1, 0}}});
  const retrieval::Retriever r(index, baseline(2));
  EXPECT_SELRAG_ERROR(r.select({}, "  ", {}, kTokens), ErrorCode::empty_target);
  EXPECT_SELRAG_ERROR(r.select({}, "x [BUG] y", {}, kTokens), ErrorCode::marker_collision);
  EXPECT_SELRAG_ERROR(r.select({}, "x", {1.5, 512, 10}, kTokens), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(r.select({}, "x", {0.5, 0, 10}, kTokens), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(r.select({}, "x", {0.5, 10, 0}, kTokens), ErrorCode::invalid_config);
}

TEST(Gate, Defaults) {
  const auto s = retrieval::default_gate(retrieval::CorpusProfile::short_methods);
  EXPECT_EQ(s.threshold, 0.9);
  EXPECT_EQ(s.max_context_tokens, 512U);
  const auto m = retrieval::default_gate(retrieval::CorpusProfile::medium_methods);
  EXPECT_EQ(m.threshold, 0.8);
  EXPECT_EQ(m.max_context_tokens, 1024U);
  const auto l = retrieval::default_gate(retrieval::CorpusProfile::long_functions);
  EXPECT_EQ(l.max_context_tokens, 1500U);
  EXPECT_EQ(l.max_pairs, 10U);
}

TEST(Rank, TiesBreakById) {
  const auto index = testdata::index_from_vectors({{"b", {1, 0}}, {"a", {2, 0}}, {"c", {0, 1}}});
  const retrieval::Retriever r(index, baseline(2));
  const auto ranking = r.rank(vec({1, 0}));
  ASSERT_EQ(ranking.size(), 3U);
  EXPECT_EQ(ranking[0].id, "a");
  EXPECT_EQ(ranking[1].id, "b");
  EXPECT_EQ(ranking[2].id, "c");
}

TEST(Rank, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (int i = 0; i < 60; ++i) {
      rows.emplace_back("e" + std::to_string(i), testdata::random_values(rng, 16));
    }
    // Duplicate vectors force ties.
    rows.emplace_back("dup", rows[5].second);
    const auto index = testdata::index_from_vectors(rows);
    const retrieval::Retriever r(index, baseline(16));
    const auto query = vec(testdata::random_values(rng, 16));
    const auto ranking = r.rank(query);
    const auto oracle = retrieval::brute_force_topk(index, query, index.size());
    ASSERT_EQ(ranking.size(), oracle.size());
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      EXPECT_EQ(ranking[i].id, oracle[i].id) << "seed " << seed << " pos " << i;
      EXPECT_NEAR(ranking[i].similarity, oracle[i].similarity, 1e-12);
    }
    EXPECT_EQ(retrieval::brute_force_topk(index, query, 5).size(), 5U);
  }
}

TEST(Rank, ScaleInvariant) {
  std::mt19937_64 rng(11);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int i = 0; i < 30; ++i) {
    rows.emplace_back("e" + std::to_string(i), testdata::random_values(rng, 8));
  }
  const auto index = testdata::index_from_vectors(rows);
  const retrieval::Retriever r(index, baseline(8));
  const auto q = vec(testdata::random_values(rng, 8));
  const auto a = r.rank(q);
  const auto b = r.rank(q.scaled(123.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_NEAR(a[i].similarity, b[i].similarity, 1e-12);
  }
}

TEST(Retrieve, SelfIsRankedFirst) {
  const auto pairs = testdata::synthetic_pairs(40, 5);
  for (auto mode : {RetrievalMode::hybrid, RetrievalMode::semantic_only, RetrievalMode::structural_only}) {
    const auto built = retrieval::build_index(pairs, *baseline(), mode);
    const retrieval::Retriever r(built.index, baseline());
    for (const auto& p : pairs) {
      const auto ranking = r.rank(r.query_vector(p.buggy_code, "java"));
      EXPECT_NEAR(ranking[0].similarity, 1.0, 1e-6);
      if (mode != RetrievalMode::structural_only) {
        // Structure alone can tie across pairs from the same template.
        const auto& top = ranking[0].id == p.id ? ranking[0] : ranking[1];
        EXPECT_EQ(top.id, p.id);
      }
    }
  }
}

TEST(Retrieve, HybridQueryIsMeanOfParts) {
  const auto pairs = testdata::synthetic_pairs(4, 2);
  const auto built = retrieval::build_index(pairs, *baseline(), RetrievalMode::hybrid);
  const retrieval::Retriever hybrid(built.index, baseline());
  const auto sr_index = built.index.with_mode(RetrievalMode::semantic_only);
  const auto ssdr_index = built.index.with_mode(RetrievalMode::structural_only);
  const retrieval::Retriever sr(sr_index, baseline());
  const retrieval::Retriever ssdr(ssdr_index, baseline());
  const std::string code = "int f(int a) { return a * 2; }";
  const auto h = hybrid.query_vector(code, "java");
  const auto s = sr.query_vector(code, "java");
  const auto t = ssdr.query_vector(code, "java");
  for (std::size_t i = 0; i < h.dim(); ++i) {
    EXPECT_NEAR(h[i], (s[i] + t[i]) / 2.0, 1e-12);
  }
}

TEST(Rank, HybridWithEqualPartsMatchesSemanticOnly) {
  std::mt19937_64 rng(12);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int i = 0; i < 40; ++i) {
    rows.emplace_back("e" + std::to_string(i), testdata::random_values(rng, 10));
  }
  const auto hybrid = testdata::index_from_vectors(rows, RetrievalMode::hybrid);
  const auto semantic = testdata::index_from_vectors(rows, RetrievalMode::semantic_only);
  const retrieval::Retriever h(hybrid, baseline(10));
  const retrieval::Retriever s(semantic, baseline(10));
  const auto q = vec(testdata::random_values(rng, 10));
  EXPECT_EQ(h.rank(q), s.rank(q));
}

TEST(Retrieve, ThresholdMonotonicity) {
  const auto pairs = testdata::synthetic_pairs(80, 9);
  const auto built = retrieval::build_index(pairs, *baseline(), RetrievalMode::hybrid);
  const retrieval::Retriever r(built.index, baseline());
  const auto targets = testdata::synthetic_pairs(15, 99, "q");
  for (const auto& t : targets) {
    std::size_t prev_pairs = SIZE_MAX;
    std::size_t prev_tokens = SIZE_MAX;
    for (double th : {-1.0, 0.0, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99}) {
      const auto ctx = r.retrieve(t.buggy_code, "java", {th, 512, 10}, kTokens);
      for (const auto& s : ctx.selected) {
        EXPECT_GT(s.similarity, th);
      }
      const auto prompt = prompt::assemble_prompt(ctx, t.buggy_code, kTokens);
      EXPECT_LE(prompt.token_count, 512U);
      EXPECT_LE(ctx.selected.size(), prev_pairs);
      EXPECT_LE(prompt.token_count, prev_tokens);
      prev_pairs = ctx.selected.size();
      prev_tokens = prompt.token_count;
    }
  }
}

namespace {

class ZeroEmbedder final : public embed::Embedder {
public:
  const embed::EmbedderSpec& spec() const noexcept override { return spec_; }
  std::vector<embed::FeatureVector> embed_texts(std::span<const std::string> texts) const override {
    return std::vector<embed::FeatureVector>(texts.size(), vec({0.0, 0.0}));
  }

private:
  embed::EmbedderSpec spec_ = embed::EmbedderSpec::baseline(2);
};

} // namespace

TEST(Retrieve, ZeroQueryVector) {
  const auto index = testdata::index_from_vectors({{"A", {1, 0}}});
  const retrieval::Retriever r(index, std::make_shared<ZeroEmbedder>());
  EXPECT_SELRAG_ERROR(r.retrieve("int x = 1;", "java", {}, kTokens), ErrorCode::zero_vector);
}

TEST(Retrieve, EmbedderMustMatchIndex) {
  const auto index = testdata::index_from_vectors({{"A", {1, 0}}});
  EXPECT_SELRAG_ERROR(retrieval::Retriever(index, baseline(4)), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(retrieval::Retriever(index, nullptr), ErrorCode::invalid_config);
}

TEST(Retrieve, UnknownLanguage) {
  const auto built = retrieval::build_index(testdata::synthetic_pairs(3, 1), *baseline(), RetrievalMode::hybrid);
  const retrieval::Retriever r(built.index, baseline());
  EXPECT_SELRAG_ERROR(r.retrieve("x = 1", "cobol", {}, kTokens), ErrorCode::unsupported_language);
}

TEST(Retrieve, ConcurrentReadersAgree) {
  const auto pairs = testdata::synthetic_pairs(50, 4);
  const auto built = retrieval::build_index(pairs, *baseline(), RetrievalMode::hybrid);
  const retrieval::Retriever r(built.index, baseline());
  const auto targets = testdata::synthetic_pairs(16, 8, "q");
  std::vector<std::vector<std::string>> serial;
  for (const auto& t : targets) {
    serial.push_back(ids_of(r.retrieve(t.buggy_code, "java", {0.5, 512, 10}, kTokens)));
  }
  std::vector<std::vector<std::string>> parallel(targets.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      pool.emplace_back([&, i] { parallel[i] = ids_of(r.retrieve(targets[i].buggy_code, "java", {0.5, 512, 10}, kTokens)); });
    }
  }
  EXPECT_EQ(serial, parallel);
}
