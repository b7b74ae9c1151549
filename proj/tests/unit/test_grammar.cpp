#include "selrag/ast.hpp"
#include "selrag/error.hpp"
#include "selrag/grammar.hpp"
#include "selrag/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <thread>

using selrag::Error;
using selrag::ErrorCode;
namespace ast = selrag::ast;

namespace {

std::string without_space(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) == 0) {
      out.push_back(c);
    }
  }
  return out;
}

std::string concat(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    out += t;
  }
  return out;
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

} // namespace

TEST(ParseSource, JavaDeclarationLeavesInLexicalOrder) {
  const auto tree = ast::parse_source("int x;", "java");
  EXPECT_EQ(tree.type, "program");
  ASSERT_EQ(tree.children.size(), 1U);
  EXPECT_EQ(tree.children[0].type, "local_variable_declaration");
  const auto leaves = ast::leaf_token_stream(tree);
  EXPECT_EQ(leaves, (std::vector<std::string>{"int", "x", ";"}));
  EXPECT_EQ(leaves, selrag::metrics::tokenize_code("int x;"));
}

TEST(ParseSource, ExpressionGrammarSingleToken) {
  const auto tree = ast::parse_source("x", "expr");
  EXPECT_EQ(concat(ast::leaf_token_stream(tree)), "x");
  EXPECT_NO_THROW(ast::validate_tree(tree));
}

TEST(ParseSource, ExpressionGrammarStructure) {
  const auto tree = ast::parse_source("a + b * (c - 1)", "expr");
  const auto seq = ast::ast_traversal(tree);
  EXPECT_TRUE(ast::markers_balanced(seq));
  EXPECT_EQ(ast::leaf_token_stream(tree), (std::vector<std::string>{"a", "+", "b", "*", "(", "c", "-", "1", ")"}));
  ASSERT_EQ(tree.children.size(), 1U);
  EXPECT_EQ(tree.children[0].type, "binary_expression");
}

TEST(ParseSource, EmptyInput) {
  EXPECT_EQ(code_of([] { ast::parse_source("", "java"); }), ErrorCode::empty_input);
  EXPECT_EQ(code_of([] { ast::parse_source(" \n\t", "expr"); }), ErrorCode::empty_input);
}

TEST(ParseSource, UnsupportedLanguage) {
  EXPECT_EQ(code_of([] { ast::parse_source("x", "cobol"); }), ErrorCode::unsupported_language);
  EXPECT_EQ(code_of([] { ast::parse_source("", "cobol"); }), ErrorCode::unsupported_language);
}

TEST(ParseSource, InvalidCodeYieldsErrorNodesNotFailure) {
  const auto tree = ast::parse_source("int f( { return ;; }}}", "java");
  EXPECT_NO_THROW(ast::validate_tree(tree));
  EXPECT_TRUE(ast::has_error_nodes(tree));
  EXPECT_TRUE(ast::markers_balanced(ast::ast_traversal(tree)));
  EXPECT_EQ(without_space(concat(ast::leaf_token_stream(tree))), without_space("int f( { return ;; }}}"));
}

TEST(ParseSource, LeavesReproduceSourceModuloWhitespace) {
  const char* sources[] = {
      "public int max(int a, int b) { if (a > b) { return a; } return b; }",
      "String s(Object o) { // note\n return o == null ? \"\" : o.toString(); }",
      "void f() { for (int i = 0; i < n; i++) { sum += xs[i] * 2.5e3; } }",
      "class A { /* block */ int x = 'c'; }",
  };
  for (const char* src : sources) {
    const auto tree = ast::parse_source(src, "java");
    EXPECT_EQ(without_space(concat(ast::leaf_token_stream(tree))), without_space(src)) << src;
    EXPECT_NO_THROW(ast::validate_tree(tree));
  }
}

TEST(ParseSource, CommentsAreLeaves) {
  const auto leaves = ast::leaf_token_stream(ast::parse_source("int x; // trailing", "java"));
  EXPECT_NE(std::find(leaves.begin(), leaves.end(), "// trailing"), leaves.end());
}

TEST(ParseSource, CAndCpp) {
  const auto c = ast::parse_source("int main(void) { int *p = 0; return p == 0; }", "c");
  EXPECT_EQ(c.type, "translation_unit");
  EXPECT_FALSE(ast::has_error_nodes(c));
  EXPECT_EQ(ast::parse_source("int x;", "cpp"), ast::parse_source("int x;", "c"));
}

TEST(ParseSource, FieldNamesRecorded) {
  const auto tree = ast::parse_source("a + b", "expr");
  const auto& bin = tree.children.at(0);
  ASSERT_EQ(bin.children.size(), 3U);
  EXPECT_EQ(bin.children[0].field, "left");
  EXPECT_EQ(bin.children[1].field, "operator");
  EXPECT_EQ(bin.children[2].field, "right");

  const auto java = ast::parse_source("x = y;", "java");
  const auto seq = ast::ast_traversal(java).tokens;
  EXPECT_NE(std::find(seq.begin(), seq.end(), "AST#assignment_expression#Left"), seq.end());
}

TEST(ParseSource, Deterministic) {
  const std::string src = "int f(int a) { return a * a + 1; }";
  EXPECT_EQ(ast::ast_traversal(ast::parse_source(src, "java")), ast::ast_traversal(ast::parse_source(src, "java")));
}

TEST(ParseSource, ConcurrentParsesAgree) {
  const std::string src = "int f(int[] xs) { int s = 0; for (int x : xs) { s += x; } return s; }";
  const auto expected = ast::ast_traversal(ast::parse_source(src, "java"));
  std::vector<ast::AstSequence> results(8);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < results.size(); ++i) {
      threads.emplace_back([&, i] {
        for (int k = 0; k < 20; ++k) {
          results[i] = ast::ast_traversal(ast::parse_source(src, "java"));
        }
      });
    }
  }
  for (const auto& r : results) {
    EXPECT_EQ(r, expected);
  }
}

TEST(GrammarRegistry, BuiltinsAndLookup) {
  const auto reg = ast::GrammarRegistry::with_builtins();
  EXPECT_TRUE(reg.contains("java"));
  EXPECT_TRUE(reg.contains("c"));
  EXPECT_TRUE(reg.contains("cpp"));
  EXPECT_TRUE(reg.contains("expr"));
  EXPECT_FALSE(reg.contains("go"));
  EXPECT_EQ(code_of([&] { reg.get("go"); }), ErrorCode::unsupported_language);
}

class ManifestTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("selrag_manifest_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path write(const std::string& text) {
    const auto path = dir_ / "grammars.txt";
    std::ofstream(path) << text;
    return path;
  }

  std::filesystem::path dir_;
};

TEST_F(ManifestTest, BuiltinAlias) {
  auto reg = ast::GrammarRegistry::with_builtins();
  reg.load_manifest(write("# aliases\njavalike = builtin:java\n\n"));
  EXPECT_EQ(ast::parse_source("int x;", "javalike", reg), ast::parse_source("int x;", "java", reg));
}

TEST_F(ManifestTest, LoadsSharedLibraryGrammarWithRelativePath) {
  std::filesystem::copy_file(SELRAG_TEST_GRAMMAR, dir_ / "libjava_grammar.so");
  auto reg = ast::GrammarRegistry::with_builtins();
  reg.load_manifest(write("dyn = libjava_grammar.so#tree_sitter_java\n"));
  EXPECT_EQ(ast::ast_traversal(ast::parse_source("int x = 1;", "dyn", reg)),
            ast::ast_traversal(ast::parse_source("int x = 1;", "java", reg)));
}

TEST_F(ManifestTest, Errors) {
  auto reg = ast::GrammarRegistry::with_builtins();
  EXPECT_EQ(code_of([&] { reg.load_manifest(write("x = builtin:nope\n")); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([&] { reg.load_manifest(write("x = missing.so\n")); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([&] { reg.load_manifest(write("no equals sign\n")); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([&] { reg.load_manifest(dir_ / "absent.txt"); }), ErrorCode::file_not_found);
}
