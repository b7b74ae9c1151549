#include "selrag/embedding.hpp"
#include "selrag/error.hpp"
#include "selrag/grammar.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using selrag::Error;
using selrag::ErrorCode;
using selrag::embed::BaselineEmbedder;
using selrag::embed::EmbedderSpec;
using selrag::embed::FeatureVector;

namespace {

BaselineEmbedder baseline(std::size_t dim = 256, std::size_t max_tokens = 1024) {
  return BaselineEmbedder(EmbedderSpec::baseline(dim, max_tokens));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no selrag::Error thrown";
  return ErrorCode::invalid_argument;
}

std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

} // namespace

TEST(BaselineEmbedder, UnitNorm) {
  const auto e = baseline();
  const auto v = selrag::embed::embed_code("int x;", e);
  EXPECT_EQ(v.dim(), 256U);
  EXPECT_NEAR(v.norm(), 1.0, 1e-9);
}

TEST(BaselineEmbedder, Deterministic) {
  const auto e = baseline();
  EXPECT_EQ(selrag::embed::embed_code("int x;", e), selrag::embed::embed_code("int x;", e));
  EXPECT_EQ(baseline().embed_one("return a + b;"), baseline().embed_one("return a + b;"));
}

TEST(BaselineEmbedder, HashedTrigramBucket) {
  // A three-byte text is a single 3-gram: one-hot at its FNV-1a bucket.
  const auto v = baseline().embed_one("abc");
  const auto bucket = fnv1a("abc") % 256;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    EXPECT_DOUBLE_EQ(v[i], i == bucket ? 1.0 : 0.0) << i;
  }
}

TEST(BaselineEmbedder, RepeatedTrigramsCountAsFrequencies) {
  // "aaaa" has the 3-gram "aaa" twice; still one bucket after normalization.
  const auto v = baseline().embed_one("aaaa");
  EXPECT_DOUBLE_EQ(v[fnv1a("aaa") % 256], 1.0);
  // "abcd" has two distinct grams of weight 1 each.
  const auto w = baseline().embed_one("abcd");
  const auto b1 = fnv1a("abc") % 256;
  const auto b2 = fnv1a("bcd") % 256;
  if (b1 != b2) {
    EXPECT_NEAR(w[b1], 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(w[b2], 1.0 / std::sqrt(2.0), 1e-12);
  }
}

TEST(BaselineEmbedder, ShortTextIsOneGram) {
  const auto v = baseline().embed_one("x");
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(v[fnv1a("x") % 256], 1.0);
}

TEST(EmbedAst, MarkerDifferenceChangesVector) {
  const auto e = baseline();
  const selrag::ast::AstSequence a{{"AST#block#Left", "x", "AST#block#Right"}};
  const selrag::ast::AstSequence b{{"AST#call#Left", "x", "AST#call#Right"}};
  EXPECT_NE(selrag::embed::embed_ast(a, e), selrag::embed::embed_ast(b, e));
}

TEST(EmbedAst, SingleTokenIsUnitVector) {
  const auto v = selrag::embed::embed_ast({{"x"}}, baseline());
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(EmbedAst, HeadTruncation) {
  const auto e = baseline(256, 8);
  selrag::ast::AstSequence seq;
  for (int i = 0; i < 30; ++i) {
    seq.tokens.push_back("tok" + std::to_string(i));
  }
  selrag::ast::AstSequence head;
  head.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + 8);
  EXPECT_EQ(selrag::embed::embed_ast(seq, e), selrag::embed::embed_ast(head, e));
  EXPECT_EQ(selrag::embed::embed_ast(seq, e), e.embed_one(head.joined()));
}

TEST(EmbedCode, HeadTruncationAndEmptyInput) {
  const auto e = baseline(256, 3);
  EXPECT_EQ(selrag::embed::embed_code("a b c d e f", e), e.embed_one("a b c"));
  EXPECT_EQ(selrag::embed::truncate_head("a  b\tc d", 3), "a b c");
  EXPECT_EQ(selrag::embed::truncate_head("a  b", 3), "a  b");
  EXPECT_EQ(code_of([&] { selrag::embed::embed_code("   ", e); }), ErrorCode::empty_input);
}

TEST(HybridVector, Examples) {
  using selrag::embed::hybrid_vector;
  EXPECT_EQ(hybrid_vector(FeatureVector({1, 0}), FeatureVector({0, 1})), FeatureVector({0.5, 0.5}));
  const FeatureVector v({0.3, -2.0, 7.5});
  EXPECT_EQ(hybrid_vector(v, v), v);
  EXPECT_EQ(hybrid_vector(FeatureVector({2, 4}), FeatureVector({0, -4})), FeatureVector({1, 0}));
}

TEST(HybridVector, CommutesAndChecksDims) {
  using selrag::embed::hybrid_vector;
  const FeatureVector a({0.1, 0.7, -0.3});
  const FeatureVector b({1.5, -0.2, 0.9});
  EXPECT_EQ(hybrid_vector(a, b), hybrid_vector(b, a));
  EXPECT_EQ(code_of([] { hybrid_vector(FeatureVector({1, 2}), FeatureVector({1, 2, 3})); }),
            ErrorCode::dimension_mismatch);
}

TEST(FeatureVector, Invariants) {
  EXPECT_EQ(code_of([] { FeatureVector({1.0, std::numeric_limits<double>::quiet_NaN()}); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { FeatureVector({std::numeric_limits<double>::infinity()}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { FeatureVector(std::vector<double>{}); }), ErrorCode::invalid_argument);
  EXPECT_TRUE(FeatureVector({0.0, 0.0}).is_zero());
  EXPECT_FALSE(FeatureVector({0.0, 1e-300}).is_zero());
  EXPECT_EQ(FeatureVector({1, 2}).scaled(2.0), FeatureVector({2, 4}));
}

TEST(EmbedderSpec, Validation) {
  EXPECT_NO_THROW(EmbedderSpec::baseline().validate());
  EXPECT_NO_THROW(EmbedderSpec::remote("http://localhost:1", 16).validate());
  auto bad = EmbedderSpec::baseline();
  bad.endpoint = "http://x";
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::invalid_config);
  auto no_endpoint = EmbedderSpec::remote("http://x", 16);
  no_endpoint.endpoint.reset();
  EXPECT_EQ(code_of([&] { no_endpoint.validate(); }), ErrorCode::invalid_config);
  auto zero_dim = EmbedderSpec::baseline();
  zero_dim.dim = 0;
  EXPECT_EQ(code_of([&] { zero_dim.validate(); }), ErrorCode::invalid_config);
}

TEST(BaselineEmbedder, AllVectorsShareTheSpecDimension) {
  const auto e = baseline(64);
  const std::vector<std::string> texts{"a", "int x;", "for (;;) {}", "AST#x#Left y AST#x#Right"};
  for (const auto& v : e.embed_texts(texts)) {
    EXPECT_EQ(v.dim(), 64U);
  }
}
