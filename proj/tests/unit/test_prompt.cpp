#include "corpus.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

#include "selrag/prompt.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <sstream>

using namespace selrag;
using prompt::CodePairView;

namespace {

const prompt::WhitespaceTokenizer kTokens;

std::string read_golden(const std::string& name) {
  std::ifstream in(std::string(SELRAG_GOLDEN_DIR) + "/" + name, std::ios::binary);
  EXPECT_TRUE(in.good()) << name;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

retrieval::RetrievedContext context_of(const std::vector<retrieval::BugFixPair>& pairs) {
  retrieval::RetrievedContext ctx;
  double sim = 0.99;
  for (const auto& p : pairs) {
    ctx.selected.push_back({p, sim});
    sim -= 0.01;
  }
  return ctx;
}

const std::string kTarget = "int dec(int x) { return x + 1; }";

const std::vector<retrieval::BugFixPair> kPairs = {
    {"p1", "int inc(int x) { return x - 1; }", "int inc(int x) { return x + 1; }", "java"},
    {"p2", "boolean isEmpty(List<String> l) { return l.size() == 1; }",
     "boolean isEmpty(List<String> l) { return l.size() == 0; }", "java"},
    {"p3", "int max(int a, int b) {\n  return a < b ? a : b;\n}\n", "\nint max(int a, int b) {\n  return a > b ? a : b;\n}",
     "java"},
};

} // namespace

TEST(Prompt, ZeroPairs) {
  const auto p = prompt::assemble_prompt({}, kTarget, kTokens);
  EXPECT_EQ(p.text, "[BUG] int dec(int x) { return x + 1; } [FIX]");
  EXPECT_EQ(p.pairs_included, 0U);
  EXPECT_EQ(p.token_count, 11U);
}

TEST(Prompt, MatchesGoldenFiles) {
  EXPECT_EQ(prompt::assemble_prompt(context_of({}), kTarget, kTokens).text, read_golden("prompt_0.txt"));
  EXPECT_EQ(prompt::assemble_prompt(context_of({kPairs[0]}), kTarget, kTokens).text, read_golden("prompt_1.txt"));
  EXPECT_EQ(prompt::assemble_prompt(context_of(kPairs), kTarget, kTokens).text, read_golden("prompt_3.txt"));
}

TEST(Prompt, PairsKeepContextOrder) {
  auto ctx = context_of({kPairs[1], kPairs[0]});
  const auto p = prompt::assemble_prompt(ctx, kTarget, kTokens);
  EXPECT_LT(p.text.find("isEmpty"), p.text.find("inc("));
  EXPECT_EQ(p.pairs_included, 2U);
}

TEST(Prompt, Structure) {
  std::mt19937_64 rng(5);
  for (int n = 0; n <= 6; ++n) {
    const auto pairs = testdata::synthetic_pairs(static_cast<std::size_t>(n), rng());
    const auto p = prompt::assemble_prompt(context_of(pairs), kTarget, kTokens);
    std::size_t bugs = 0;
    std::size_t fixes = 0;
    for (auto pos = p.text.find("[BUG]"); pos != std::string::npos; pos = p.text.find("[BUG]", pos + 1)) {
      ++bugs;
    }
    for (auto pos = p.text.find("[FIX]"); pos != std::string::npos; pos = p.text.find("[FIX]", pos + 1)) {
      ++fixes;
    }
    EXPECT_EQ(bugs, static_cast<std::size_t>(n) + 1);
    EXPECT_EQ(fixes, static_cast<std::size_t>(n) + 1);
    EXPECT_TRUE(p.text.starts_with("[BUG] "));
    EXPECT_TRUE(p.text.ends_with(" [FIX]"));
    EXPECT_EQ(p.token_count, oracle::whitespace_tokens(p.text));
  }
}

TEST(Prompt, TargetValidation) {
  EXPECT_SELRAG_ERROR(prompt::assemble_prompt({}, "", kTokens), ErrorCode::empty_target);
  EXPECT_SELRAG_ERROR(prompt::assemble_prompt({}, " \n\t ", kTokens), ErrorCode::empty_target);
  EXPECT_SELRAG_ERROR(prompt::assemble_prompt({}, "int x; // [FIX]", kTokens), ErrorCode::marker_collision);
  EXPECT_SELRAG_ERROR(prompt::assemble_prompt({}, "[BUG]", kTokens), ErrorCode::marker_collision);
}

TEST(Prompt, MarkerPairsAreDroppedWithWarning) {
  auto pairs = kPairs;
  pairs[1].fixed_code = "return \"[BUG]\";";
  const auto p = prompt::assemble_prompt(context_of(pairs), kTarget, kTokens);
  EXPECT_EQ(p.pairs_included, 2U);
  ASSERT_EQ(p.warnings.size(), 1U);
  EXPECT_NE(p.warnings[0].find("p2"), std::string::npos);
  EXPECT_EQ(p.text.find("isEmpty"), std::string::npos);
}

TEST(Tokenizer, WhitespaceCounts) {
  EXPECT_EQ(kTokens.count(""), 0U);
  EXPECT_EQ(kTokens.count("   \n"), 0U);
  EXPECT_EQ(kTokens.count("a b\tc\n d"), 4U);
  EXPECT_EQ(kTokens.count("[BUG] x [FIX]"), 3U);
  EXPECT_EQ(kTokens.count("[BUG]x[FIX]"), 3U);
  EXPECT_EQ(kTokens.count("a[BUG][FIX]b"), 4U);
  EXPECT_EQ(kTokens.count("[BUG][BUG]"), 2U);
  EXPECT_EQ(kTokens.count("[BUG"), 1U);
}

TEST(Tokenizer, BackendCounter) {
  const prompt::BackendTokenizer t([](std::string_view s) { return s.size(); });
  EXPECT_EQ(t.count("abcd"), 4U);
  EXPECT_EQ(t.kind(), prompt::TokenizerKind::backend_provided);
  EXPECT_SELRAG_ERROR(prompt::BackendTokenizer(nullptr), ErrorCode::invalid_argument);
}

TEST(Prompt, MoreContextNeverMeansFewerTokens) {
  const auto pairs = testdata::synthetic_pairs(10, 77);
  std::size_t prev = 0;
  for (std::size_t n = 0; n <= pairs.size(); ++n) {
    const std::vector<retrieval::BugFixPair> prefix(pairs.begin(), pairs.begin() + static_cast<long>(n));
    const auto p = prompt::assemble_prompt(context_of(prefix), kTarget, kTokens);
    EXPECT_GT(p.token_count, n == 0 ? 0 : prev);
    prev = p.token_count;
  }
}

TEST(ParsePrompt, RoundTrip) {
  const auto p = prompt::assemble_prompt(context_of(kPairs), kTarget, kTokens);
  const auto parsed = prompt::parse_prompt(p.text);
  EXPECT_EQ(parsed.target, kTarget);
  ASSERT_EQ(parsed.pairs.size(), 3U);
  EXPECT_EQ(parsed.pairs[0].first, kPairs[0].buggy_code);
  EXPECT_EQ(parsed.pairs[2].second, "int max(int a, int b) {\n  return a > b ? a : b;\n}");

  std::mt19937_64 rng(1);
  for (int i = 0; i < 30; ++i) {
    const auto pairs = testdata::synthetic_pairs(i % 5, rng());
    const auto target = testdata::synthetic_pairs(1, rng(), "t")[0].buggy_code;
    const auto text = prompt::assemble_prompt(context_of(pairs), target, kTokens).text;
    const auto back = prompt::parse_prompt(text);
    ASSERT_EQ(back.pairs.size(), pairs.size());
    std::vector<CodePairView> views;
    for (const auto& [b, f] : back.pairs) {
      views.emplace_back(b, f);
    }
    EXPECT_EQ(prompt::render_prompt(views, back.target), text);
  }
}

TEST(ParsePrompt, RejectsMalformedText) {
  for (const char* bad : {"", "no markers", "x [BUG] a [FIX]", "[BUG] a", "[FIX] a [BUG]", "[BUG] a [FIX] b",
                          "[BUG] a [BUG] b [FIX]", "[BUG] a [FIX] b [FIX] c [BUG]"}) {
    SCOPED_TRACE(bad);
    EXPECT_SELRAG_ERROR(prompt::parse_prompt(bad), ErrorCode::invalid_format);
  }
}

TEST(Export, WritesPromptCompletionRows) {
  const auto codebase = testdata::synthetic_pairs(30, 2);
  const auto embedder = embed::make_embedder(embed::EmbedderSpec::baseline());
  const auto built = retrieval::build_index(codebase, *embedder, retrieval::RetrievalMode::hybrid);
  const retrieval::Retriever retriever(built.index, embedder);
  auto dataset = testdata::synthetic_pairs(6, 3, "d");
  dataset.push_back({"bad", "x [BUG] y", "z", "java"});

  std::ostringstream out;
  const auto summary = prompt::export_training_rows(dataset, &retriever, {0.5, 512, 3}, kTokens, out);
  EXPECT_EQ(summary.rows, 6U);
  ASSERT_EQ(summary.skipped.size(), 1U);
  EXPECT_EQ(summary.skipped[0].id, "bad");
  EXPECT_NE(summary.skipped[0].error.find("MarkerCollision"), std::string::npos);

  std::istringstream lines(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto row = nlohmann::json::parse(line);
    EXPECT_EQ(row.size(), 2U);
    EXPECT_EQ(row["completion"], dataset[n].fixed_code);
    const auto parsed = prompt::parse_prompt(row["prompt"].get<std::string>());
    EXPECT_LE(parsed.pairs.size(), 3U);
    EXPECT_LE(kTokens.count(row["prompt"].get<std::string>()), 512U);
    ++n;
  }
  EXPECT_EQ(n, 6U);

  std::ostringstream again;
  prompt::export_training_rows(dataset, &retriever, {0.5, 512, 3}, kTokens, again);
  EXPECT_EQ(out.str(), again.str());
}

TEST(Export, WithoutRetrieverUsesBareTargets) {
  const auto dataset = testdata::synthetic_pairs(3, 3);
  std::ostringstream out;
  const auto summary = prompt::export_training_rows(dataset, nullptr, {}, kTokens, out);
  EXPECT_EQ(summary.rows, 3U);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  const auto row = nlohmann::json::parse(line);
  EXPECT_TRUE(prompt::parse_prompt(row["prompt"].get<std::string>()).pairs.empty());
}
