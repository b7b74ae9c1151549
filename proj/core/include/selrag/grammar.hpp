#pragma once

#include "selrag/ast.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

struct TSLanguage;

namespace selrag::ast {

/// A parser for one programming language. Parsing is total: malformed regions
/// come back as `ERROR` leaves instead of failures.
class Grammar {
public:
  virtual ~Grammar() = default;
  virtual std::string_view name() const noexcept = 0;
  /// `code` is known to contain non-whitespace characters.
  virtual AstNode parse(std::string_view code) const = 0;
};

/// Grammar backed by a tree-sitter language table.
class TreeSitterGrammar final : public Grammar {
public:
  /// `keepalive` owns whatever memory backs `language` (e.g. a dlopen handle).
  TreeSitterGrammar(std::string name, const TSLanguage* language, std::shared_ptr<void> keepalive = {});

  std::string_view name() const noexcept override { return name_; }
  AstNode parse(std::string_view code) const override;

private:
  std::string name_;
  const TSLanguage* language_;
  std::shared_ptr<void> keepalive_;
};

/// Arithmetic expressions over identifiers and numbers: `+ - * / %`, unary
/// minus, parentheses. Small enough to reason about by hand in tests.
class ExpressionGrammar final : public Grammar {
public:
  std::string_view name() const noexcept override { return "expr"; }
  AstNode parse(std::string_view code) const override;
};

/// Maps language ids to grammars.
///
/// Manifest format, one entry per line (`#` starts a comment):
///
///     java = builtin:java
///     go   = grammars/libtree-sitter-go.so            # symbol tree_sitter_go
///     kt   = /opt/grammars/kotlin.so#tree_sitter_kotlin
///
/// Relative library paths resolve against the manifest's directory.
class GrammarRegistry {
public:
  /// java, c, cpp (C grammar) and expr.
  static GrammarRegistry with_builtins();

  void add(std::string language, std::shared_ptr<const Grammar> grammar);
  void load_manifest(const std::filesystem::path& manifest);

  bool contains(std::string_view language) const;
  /// Throws Error(unsupported_language).
  const Grammar& get(std::string_view language) const;
  std::vector<std::string> languages() const;

private:
  std::map<std::string, std::shared_ptr<const Grammar>, std::less<>> grammars_;
};

/// Process-wide registry with the built-in grammars. Safe for concurrent reads.
const GrammarRegistry& default_registry();

/// Throws Error(empty_input) for empty/whitespace-only code and
/// Error(unsupported_language) for unknown ids.
AstNode parse_source(std::string_view code, std::string_view language,
                     const GrammarRegistry& registry = default_registry());

} // namespace selrag::ast
