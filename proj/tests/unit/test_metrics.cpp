#include "corpus.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

#include "selrag/grammar.hpp"
#include "selrag/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace selrag;
using metrics::BleuConfig;
using metrics::DataflowEdge;
using Tokens = std::vector<std::string>;

namespace selrag::metrics {
void PrintTo(const DataflowEdge& e, std::ostream* os) {
  *os << "(" << e.variable << "," << e.def_ordinal << "," << e.use_ordinal << ")";
}
} // namespace selrag::metrics

namespace {

Tokens split(const std::string& s) {
  Tokens out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) {
    out.push_back(w);
  }
  return out;
}

std::vector<oracle::Edge> as_tuples(const std::vector<DataflowEdge>& edges) {
  std::vector<oracle::Edge> out;
  for (const auto& e : edges) {
    out.emplace_back(e.variable, e.def_ordinal, e.use_ordinal);
  }
  return out;
}

std::vector<DataflowEdge> java_flow(const std::string& code) {
  return metrics::extract_dataflow(ast::parse_source(code, "java"), "java");
}

} // namespace

TEST(CodeTokens, Lexing) {
  EXPECT_EQ(metrics::tokenize_code("a+=b"), (Tokens{"a", "+=", "b"}));
  EXPECT_EQ(metrics::tokenize_code("x.y(1)"), (Tokens{"x", ".", "y", "(", "1", ")"}));
  EXPECT_EQ(metrics::tokenize_code("s = \"a b\";"), (Tokens{"s", "=", "\"a b\"", ";"}));
  EXPECT_EQ(metrics::tokenize_code("x>>>=2 // note\ny"), (Tokens{"x", ">>>=", "2", "// note", "y"}));
  EXPECT_EQ(metrics::tokenize_code("1.5e-3f+0x1F"), (Tokens{"1.5e-3f", "+", "0x1F"}));
  EXPECT_EQ(metrics::tokenize_code("/* a\n b */c"), (Tokens{"/* a\n b */", "c"}));
  EXPECT_EQ(metrics::tokenize_code("'\\''"), (Tokens{"'\\''"}));
  EXPECT_TRUE(metrics::tokenize_code(" \n\t").empty());
}

TEST(ExactMatch, IgnoresFormatting) {
  EXPECT_TRUE(metrics::exact_match("int f(){return 1;}", "int f() {\n  return 1;\n}"));
  EXPECT_FALSE(metrics::exact_match("return a+b;", "return a-b;"));
  EXPECT_FALSE(metrics::exact_match("return \"a b\";", "return \"a  b\";"));
  EXPECT_TRUE(metrics::exact_match("", "  "));
}

TEST(Bleu, WorkedExamples) {
  EXPECT_DOUBLE_EQ(metrics::bleu4(split("a b c d"), split("a b c d")), 1.0);
  // p = 4/5, 3/4, 2/3, 1/2 and equal lengths.
  EXPECT_NEAR(metrics::bleu4(split("a b c d e"), split("a b c d f")), std::pow(0.8 * 0.75 * (2.0 / 3) * 0.5, 0.25),
              1e-12);
  // No 4-gram in the candidate while the reference has one: precision 0.
  EXPECT_EQ(metrics::bleu4(split("a b c"), split("a b c d")), 0.0);
  EXPECT_EQ(metrics::bleu4(split("a x"), split("a b")), 0.0);
}

TEST(Bleu, ShortCandidateFixture) {
  // Every n-gram of "a b c d" occurs in the reference; only the brevity penalty bites.
  const double got = metrics::bleu4(split("a b c d"), split("a b c d e"));
  EXPECT_NEAR(got, std::exp(-0.25), 1e-12);
  EXPECT_NEAR(got, 0.7788, 1e-4);
  EXPECT_NEAR(got, oracle::bleu(split("a b c d"), split("a b c d e")), 1e-12);
  EXPECT_EQ(metrics::bleu4(split("p q r s"), split("a b c d e")), 0.0);
}

TEST(Bleu, ShortSequencesDropVacuousOrders) {
  EXPECT_DOUBLE_EQ(metrics::bleu4(split("a"), split("a")), 1.0);
  EXPECT_DOUBLE_EQ(metrics::bleu4(split("a b"), split("a b")), 1.0);
  EXPECT_DOUBLE_EQ(metrics::bleu4(split("a b c"), split("a b c")), 1.0);
  // Orders 3 and 4 are vacuous; p1 = 1/2, p2 = 0/1 -> 0.
  EXPECT_EQ(metrics::bleu4(split("a c"), split("a b")), 0.0);
  // Only order 1 exists: p1 = 1/2 with equal lengths.
  EXPECT_DOUBLE_EQ(metrics::bleu4(split("a b"), split("a c"), {{1.0, 0.0, 0.0, 0.0}}), 0.5);
  const auto precisions = metrics::ngram_precisions(split("a b"), split("a b"));
  EXPECT_FALSE(precisions.vacuous[1]);
  EXPECT_TRUE(precisions.vacuous[2]);
  EXPECT_TRUE(precisions.vacuous[3]);
}

TEST(Bleu, BrevityPenalty) {
  EXPECT_DOUBLE_EQ(metrics::brevity_penalty(5, 4), 1.0);
  EXPECT_DOUBLE_EQ(metrics::brevity_penalty(4, 4), 1.0);
  EXPECT_DOUBLE_EQ(metrics::brevity_penalty(2, 4), std::exp(1.0 - 2.0));
  // Candidate is a prefix of the reference: all precisions are 1.
  EXPECT_NEAR(metrics::bleu4(split("a b c d e f"), split("a b c d e f g h")), std::exp(1.0 - 8.0 / 6.0), 1e-12);
}

TEST(Bleu, Smoothing) {
  BleuConfig smooth;
  smooth.smoothing = metrics::Smoothing::epsilon;
  // p4 has 0 candidate 4-grams, so it becomes eps / 1.
  const double expected = std::exp(1.0 - 4.0 / 3.0) * std::pow(metrics::kSmoothingEpsilon, 0.25);
  EXPECT_NEAR(metrics::bleu4(split("a b c"), split("a b c d"), smooth), expected, 1e-12);
  const double got = metrics::bleu4(split("a b c x y"), split("a b c d e"), smooth);
  EXPECT_GT(got, 0.0);
  EXPECT_LT(got, 1.0);
}

TEST(Bleu, ConfigAndEmptyInput) {
  EXPECT_SELRAG_ERROR(metrics::bleu4({}, split("a")), ErrorCode::empty_sequence);
  EXPECT_SELRAG_ERROR(metrics::bleu4(split("a"), {}), ErrorCode::empty_sequence);
  EXPECT_SELRAG_ERROR(metrics::bleu4(split("a"), split("a"), {{0.5, 0.5, 0.5, 0.0}}), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(metrics::bleu4(split("a"), split("a"), {{1.5, -0.5, 0.0, 0.0}}), ErrorCode::invalid_config);
}

TEST(Bleu, MatchesOracleOnRandomSequences) {
  std::mt19937_64 rng(2024);
  const std::array<std::array<double, 4>, 3> weight_sets = {
      {{0.25, 0.25, 0.25, 0.25}, {0.4, 0.3, 0.2, 0.1}, {0.5, 0.5, 0.0, 0.0}}};
  int nonzero = 0;
  for (int i = 0; i < 300; ++i) {
    const auto cand = testdata::random_tokens(rng, 1, 14, 3);
    const auto ref = testdata::random_tokens(rng, 1, 14, 3);
    const auto& w = weight_sets[static_cast<std::size_t>(i) % weight_sets.size()];
    const double got = metrics::bleu4(cand, ref, {w});
    const double want = oracle::bleu(cand, ref, w);
    EXPECT_NEAR(got, want, 1e-9) << i;
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
    nonzero += got > 0.0 ? 1 : 0;
    EXPECT_DOUBLE_EQ(metrics::bleu4(cand, cand, {w}), 1.0);
  }
  EXPECT_GT(nonzero, 100);
}

TEST(Bleu, InvariantUnderWhitespaceReformatting) {
  const std::string a = "int f(int x){return x+1;}";
  const std::string b = "int  f ( int x )\n{\n  return x + 1 ;\n}";
  const std::string ref = "int f(int x) { return x - 1; }";
  EXPECT_DOUBLE_EQ(metrics::sentence_bleu4(a, ref), metrics::sentence_bleu4(b, ref));
  EXPECT_DOUBLE_EQ(metrics::sentence_bleu4(a, b), 1.0);
  EXPECT_EQ(metrics::sentence_bleu4("", ref), 0.0);
}

TEST(WeightedBleu, WorkedExample) {
  const auto kw = metrics::KeywordWeights::from_keywords(Tokens{"if", "return"});
  const auto cand = split("if ( x ) return y ;");
  const auto ref = split("if ( x ) return z ;");
  // Unigrams: matched if,(,x,),return,; = 1+.2+.2+.2+1+.2 = 2.8 of 3.0.
  const double expected = std::pow((2.8 / 3.0) * (4.0 / 6.0) * (3.0 / 5.0) * (2.0 / 4.0), 0.25);
  EXPECT_NEAR(metrics::weighted_ngram_bleu(cand, ref, kw), expected, 1e-12);
  const double plain = std::pow((6.0 / 7.0) * (4.0 / 6.0) * (3.0 / 5.0) * (2.0 / 4.0), 0.25);
  EXPECT_NEAR(metrics::bleu4(cand, ref), plain, 1e-12);
  EXPECT_DOUBLE_EQ(kw.weight("if"), 1.0);
  EXPECT_DOUBLE_EQ(kw.weight("x"), 0.2);
}

TEST(WeightedBleu, MatchesOracle) {
  const auto keywords = metrics::builtin_keywords("java");
  const auto kw = metrics::KeywordWeights::from_keywords(keywords);
  const std::set<std::string> kwset(keywords.begin(), keywords.end());
  const auto weight = [&](const std::string& t) { return kwset.contains(t) ? 1.0 : 0.2; };
  std::mt19937_64 rng(99);
  const auto pairs = testdata::synthetic_pairs(120, 4);
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    const auto cand = metrics::tokenize_code(pairs[i].buggy_code);
    const auto ref = metrics::tokenize_code(i % 3 == 0 ? pairs[i + 1].fixed_code : pairs[i].fixed_code);
    EXPECT_NEAR(metrics::weighted_ngram_bleu(cand, ref, kw), oracle::bleu(cand, ref, {0.25, 0.25, 0.25, 0.25}, weight),
                1e-9);
  }
}

TEST(Keywords, Builtin) {
  const auto java = metrics::builtin_keywords("java");
  EXPECT_NE(std::find(java.begin(), java.end(), "return"), java.end());
  EXPECT_NE(std::find(java.begin(), java.end(), "synchronized"), java.end());
  EXPECT_EQ(std::find(java.begin(), java.end(), "#"), java.end());
  const auto c = metrics::builtin_keywords("c");
  EXPECT_NE(std::find(c.begin(), c.end(), "typedef"), c.end());
  EXPECT_TRUE(metrics::builtin_keywords("cobol").empty());
  EXPECT_SELRAG_ERROR(metrics::load_keywords("/nonexistent/keywords.txt"), ErrorCode::file_not_found);
}

TEST(AstMatch, Examples) {
  using ast::AstNode;
  const auto tree = [](std::string op) {
    return AstNode::branch("binary", {AstNode::leaf("identifier", "a"), AstNode::leaf("op", std::move(op)),
                                      AstNode::leaf("identifier", "b")});
  };
  // Leaf values are ignored: only shapes count.
  EXPECT_DOUBLE_EQ(metrics::match_ast(tree("+"), tree("-")), 1.0);
  const auto ref = AstNode::branch("block", {tree("+"), AstNode::branch("ret", {AstNode::leaf("identifier", "x")})});
  const auto cand = AstNode::branch("block", {tree("+")});
  // Reference subtrees: block, binary, ret. Candidate shares only binary.
  EXPECT_DOUBLE_EQ(metrics::match_ast(cand, ref), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(metrics::match_ast(ref, ref), 1.0);
  // Clipping: two binary subtrees in the reference, one in the candidate.
  const auto twice = AstNode::branch("block", {tree("+"), tree("*")});
  EXPECT_DOUBLE_EQ(metrics::match_ast(cand, twice), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(metrics::match_ast(AstNode::leaf("x", "1"), AstNode::leaf("x", "2")), 1.0);
  EXPECT_DOUBLE_EQ(metrics::match_ast(cand, AstNode::leaf("x", "2")), 0.0);
  EXPECT_DOUBLE_EQ(metrics::match_ast(AstNode::leaf("identifier", "a"), ref), 0.0);
}

TEST(Metrics, ExactMatchImpliesPerfectScores) {
  const auto cfg = metrics::CodeBleuConfig::for_language("java");
  for (const auto& p : testdata::synthetic_pairs(20, 14)) {
    std::string spaced;
    for (const auto& t : metrics::tokenize_code(p.fixed_code)) {
      spaced += t + "\n  ";
    }
    ASSERT_TRUE(metrics::exact_match(spaced, p.fixed_code));
    EXPECT_DOUBLE_EQ(metrics::sentence_bleu4(spaced, p.fixed_code), 1.0);
    EXPECT_DOUBLE_EQ(metrics::codebleu(spaced, p.fixed_code, "java", cfg).score, 1.0);
  }
}

TEST(AstMatch, MatchesOracle) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const auto a = testdata::random_tree(rng, 5, 3);
    const auto b = testdata::random_tree(rng, 5, 3);
    const double got = metrics::match_ast(a, b);
    EXPECT_NEAR(got, oracle::subtree_match(a, b), 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
  const auto pairs = testdata::synthetic_pairs(40, 6);
  for (const auto& p : pairs) {
    const auto a = ast::parse_source(p.buggy_code, "java");
    const auto b = ast::parse_source(p.fixed_code, "java");
    EXPECT_NEAR(metrics::match_ast(a, b), oracle::subtree_match(a, b), 1e-12);
  }
}

TEST(Dataflow, CompoundAssignment) {
  const auto edges = java_flow("int f() { int x = 1; x += 2; return x; }");
  EXPECT_EQ(edges, (std::vector<DataflowEdge>{{"v0", 0, 0}, {"v0", 1, 1}}));
}

TEST(Dataflow, RightHandSideIsReadFirst) {
  // y is read before x is defined, so y is v0.
  const auto edges = java_flow("void f(int y) { int x = y + 1; x = x * y; }");
  EXPECT_EQ(edges, (std::vector<DataflowEdge>{{"v0", 0, 0}, {"v1", 0, 0}, {"v0", 0, 1}}));
}

TEST(Dataflow, UndefinedUsesAndNames) {
  // Method names, field names and invoked methods are not variables.
  const auto edges = java_flow("int g() { return this.count + size(); }");
  EXPECT_TRUE(edges.empty());
  const auto free_use = java_flow("int g() { return n; }");
  EXPECT_EQ(free_use, (std::vector<DataflowEdge>{{"v0", -1, 0}}));
}

TEST(Dataflow, UpdateExpressionUsesThenDefines) {
  const auto edges = java_flow("void f() { int i = 0; i++; g(i); }");
  EXPECT_EQ(edges, (std::vector<DataflowEdge>{{"v0", 0, 0}, {"v0", 1, 1}}));
}

TEST(Dataflow, RenamingDoesNotMatter) {
  const auto a = java_flow("int f(int a, int b) { int t = a; a = b; b = t; return a + b; }");
  const auto b = java_flow("int f(int p, int q) { int tmp = p; p = q; q = tmp; return p + q; }");
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a.empty());
}

TEST(Dataflow, MatchesOracleOnJavaCorpus) {
  const auto pairs = testdata::synthetic_pairs(120, 8);
  for (const auto& p : pairs) {
    for (const auto* code : {&p.buggy_code, &p.fixed_code}) {
      const auto tree = ast::parse_source(*code, "java");
      EXPECT_EQ(as_tuples(metrics::extract_dataflow(tree, "java")), oracle::java_dataflow(tree)) << *code;
    }
  }
}

TEST(Dataflow, CDeclarators) {
  const auto tree = ast::parse_source("int f(int *p) { int a[3], b = *p; b += a[0]; return b; }", "c");
  const auto edges = metrics::extract_dataflow(tree, "c");
  // Names in order of first event: p (param def), a (declared), b. `b += a[0]` reads a then b.
  EXPECT_EQ(edges, (std::vector<DataflowEdge>{{"v0", 0, 0}, {"v1", 0, 0}, {"v2", 0, 0}, {"v2", 1, 1}}));
}

TEST(DataflowMatch, Scoring) {
  const std::vector<DataflowEdge> ref = {{"v0", 0, 0}, {"v0", 0, 1}, {"v1", -1, 0}};
  EXPECT_DOUBLE_EQ(metrics::match_dataflow(ref, ref), 1.0);
  EXPECT_DOUBLE_EQ(metrics::match_dataflow({}, ref), 0.0);
  EXPECT_DOUBLE_EQ(metrics::match_dataflow({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(metrics::match_dataflow(ref, {}), 0.0);
  const std::vector<DataflowEdge> cand = {{"v0", 0, 0}, {"v0", 0, 0}, {"v1", -1, 0}};
  EXPECT_DOUBLE_EQ(metrics::match_dataflow(cand, ref), 2.0 / 3.0);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> small(0, 2);
  for (int i = 0; i < 200; ++i) {
    std::vector<DataflowEdge> a;
    std::vector<DataflowEdge> b;
    for (int k = small(rng) * 2; k > 0; --k) {
      a.push_back({"v" + std::to_string(small(rng)), small(rng) - 1, small(rng)});
    }
    for (int k = small(rng) * 2; k > 0; --k) {
      b.push_back({"v" + std::to_string(small(rng)), small(rng) - 1, small(rng)});
    }
    EXPECT_DOUBLE_EQ(metrics::match_dataflow(a, b), oracle::dataflow_match(as_tuples(a), as_tuples(b)));
  }
}

TEST(DataflowMatch, FromSource) {
  EXPECT_DOUBLE_EQ(metrics::match_df("int f(int x) { return x + 1; }", "int f(int y) { return y - 1; }", "java"), 1.0);
  EXPECT_SELRAG_ERROR(metrics::match_df("", "int f() {}", "java"), ErrorCode::parse_failure);
  EXPECT_SELRAG_ERROR(metrics::match_df("x", "x", "cobol"), ErrorCode::unsupported_language);
}
