#include "corpus.hpp"
#include "oracles.hpp"

#include "selrag/ast.hpp"
#include "selrag/error.hpp"

#include <gtest/gtest.h>

using selrag::ast::AstNode;
using selrag::ast::AstSequence;
using Tokens = std::vector<std::string>;

namespace {

AstNode binary_abc() {
  return AstNode::branch("binary_expression",
                         {AstNode::leaf("identifier", "a"), AstNode::leaf("+", "+"), AstNode::leaf("identifier", "b")});
}

} // namespace

TEST(AstTraversal, LeafContributesValue) {
  EXPECT_EQ(selrag::ast::ast_traversal(AstNode::leaf("identifier", "x")).tokens, Tokens{"x"});
}

TEST(AstTraversal, BinaryExpression) {
  const Tokens expected{"AST#binary_expression#Left", "a", "+", "b", "AST#binary_expression#Right"};
  EXPECT_EQ(selrag::ast::ast_traversal(binary_abc()).tokens, expected);
  EXPECT_EQ(selrag::oracle::traversal(binary_abc()), expected);
}

TEST(AstTraversal, TwoLevelTree) {
  const auto root = AstNode::branch("program", {binary_abc()});
  const Tokens expected{"AST#program#Left",           "AST#binary_expression#Left", "a", "+", "b",
                        "AST#binary_expression#Right", "AST#program#Right"};
  EXPECT_EQ(selrag::ast::ast_traversal(root).tokens, expected);
  EXPECT_EQ(selrag::oracle::traversal(root), expected);
}

TEST(AstTraversal, MarkersAreCapitalized) {
  EXPECT_EQ(selrag::ast::left_marker("block"), "AST#block#Left");
  EXPECT_EQ(selrag::ast::right_marker("block"), "AST#block#Right");
  EXPECT_TRUE(selrag::ast::is_left_marker("AST#block#Left"));
  EXPECT_TRUE(selrag::ast::is_right_marker("AST#block#Right"));
  EXPECT_FALSE(selrag::ast::is_marker("AST#block#left"));
  EXPECT_FALSE(selrag::ast::is_marker("block"));
}

TEST(LeafTokenStream, Examples) {
  EXPECT_EQ(selrag::ast::leaf_token_stream(AstNode::leaf("identifier", "x")), Tokens{"x"});
  EXPECT_EQ(selrag::ast::leaf_token_stream(binary_abc()), (Tokens{"a", "+", "b"}));
  EXPECT_EQ(selrag::ast::leaf_token_stream(AstNode::branch("program", {binary_abc()})), (Tokens{"a", "+", "b"}));
}

TEST(AstTraversal, RandomTreesMatchOracle) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto tree = selrag::testdata::random_tree(rng, 6, 4);
    const auto seq = selrag::ast::ast_traversal(tree);
    ASSERT_EQ(seq.tokens, selrag::oracle::traversal(tree));
    ASSERT_TRUE(selrag::ast::markers_balanced(seq));
    ASSERT_EQ(selrag::ast::strip_markers(seq), selrag::ast::leaf_token_stream(tree));
    ASSERT_EQ(selrag::ast::leaf_token_stream(tree), selrag::oracle::leaves(tree));
  }
}

TEST(AstTraversal, EveryInnerNodeGetsOneBracketPair) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto tree = selrag::testdata::random_tree(rng, 5, 3);
    const auto seq = selrag::ast::ast_traversal(tree);
    std::size_t lefts = 0;
    std::size_t rights = 0;
    for (const auto& t : seq.tokens) {
      lefts += selrag::ast::is_left_marker(t) ? 1 : 0;
      rights += selrag::ast::is_right_marker(t) ? 1 : 0;
    }
    const std::size_t leaves = selrag::ast::leaf_token_stream(tree).size();
    EXPECT_EQ(lefts, rights);
    EXPECT_EQ(lefts, selrag::ast::node_count(tree) - leaves);
  }
}

TEST(AstTraversal, DeepChainDoesNotRecurse) {
  AstNode node = AstNode::leaf("identifier", "x");
  for (int i = 0; i < 200000; ++i) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(node));
    node = AstNode::branch("wrap", std::move(kids));
  }
  const auto seq = selrag::ast::ast_traversal(node);
  EXPECT_EQ(seq.size(), 400001U);
  EXPECT_TRUE(selrag::ast::markers_balanced(seq));
  // Let the tree go without a 200000-deep recursive destructor.
  while (!node.children.empty()) {
    AstNode child = std::move(node.children.front());
    node = std::move(child);
  }
}

TEST(MarkersBalanced, DetectsBadNesting) {
  EXPECT_TRUE(selrag::ast::markers_balanced(AstSequence{{"AST#a#Left", "x", "AST#a#Right"}}));
  EXPECT_FALSE(selrag::ast::markers_balanced(AstSequence{{"AST#a#Left", "x"}}));
  EXPECT_FALSE(selrag::ast::markers_balanced(AstSequence{{"AST#a#Right", "AST#a#Left"}}));
  EXPECT_FALSE(selrag::ast::markers_balanced(AstSequence{{"AST#a#Left", "AST#b#Right"}}));
  EXPECT_FALSE(
      selrag::ast::markers_balanced(AstSequence{{"AST#a#Left", "AST#b#Left", "AST#a#Right", "AST#b#Right"}}));
}

TEST(ValidateTree, RejectsBrokenInvariants) {
  EXPECT_NO_THROW(selrag::ast::validate_tree(binary_abc()));

  AstNode empty_type = AstNode::leaf("x", "x");
  empty_type.type.clear();
  EXPECT_THROW(selrag::ast::validate_tree(empty_type), selrag::Error);

  AstNode leaf_without_value;
  leaf_without_value.type = "identifier";
  EXPECT_THROW(selrag::ast::validate_tree(leaf_without_value), selrag::Error);

  AstNode inner_with_value = binary_abc();
  inner_with_value.value = "a + b";
  EXPECT_THROW(selrag::ast::validate_tree(inner_with_value), selrag::Error);
}

TEST(AstSequence, JoinedUsesSingleSpaces) {
  EXPECT_EQ(selrag::ast::ast_traversal(binary_abc()).joined(),
            "AST#binary_expression#Left a + b AST#binary_expression#Right");
}
