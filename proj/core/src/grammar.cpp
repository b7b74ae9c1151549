#include "selrag/grammar.hpp"

#include "selrag/error.hpp"

#include <tree_sitter/api.h>

#include <dlfcn.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>

extern "C" {
const TSLanguage* tree_sitter_java(void);
const TSLanguage* tree_sitter_c(void);
}

namespace selrag::ast {

namespace {

struct ParserDeleter {
  void operator()(TSParser* p) const noexcept { ts_parser_delete(p); }
};
struct TreeDeleter {
  void operator()(TSTree* t) const noexcept { ts_tree_delete(t); }
};

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

class TreeConverter {
public:
  explicit TreeConverter(std::string_view source) : source_(source) {}

  std::optional<AstNode> convert(TSTreeCursor* cursor) {
    TSNode node = ts_tree_cursor_current_node(cursor);
    if (ts_node_is_missing(node)) {
      return std::nullopt;
    }
    const char* field_name = ts_tree_cursor_current_field_name(cursor);
    std::string field = field_name != nullptr ? field_name : "";
    std::string_view text = slice(node);
    std::string type = ts_node_type(node);

    // Anonymous tokens and error regions collapse to a leaf holding their text.
    if (!ts_node_is_named(node) || ts_node_is_error(node) || ts_node_child_count(node) == 0) {
      if (is_blank(text)) {
        return std::nullopt;
      }
      return AstNode::leaf(std::move(type), std::string(text), std::move(field));
    }

    std::vector<AstNode> children;
    if (ts_tree_cursor_goto_first_child(cursor)) {
      do {
        if (auto child = convert(cursor)) {
          children.push_back(std::move(*child));
        }
      } while (ts_tree_cursor_goto_next_sibling(cursor));
      ts_tree_cursor_goto_parent(cursor);
    }
    if (children.empty()) {
      if (is_blank(text)) {
        return std::nullopt;
      }
      return AstNode::leaf(std::move(type), std::string(text), std::move(field));
    }
    return AstNode::branch(std::move(type), std::move(children), std::move(field));
  }

private:
  std::string_view slice(TSNode node) const {
    const auto begin = std::min<std::size_t>(ts_node_start_byte(node), source_.size());
    const auto end = std::min<std::size_t>(ts_node_end_byte(node), source_.size());
    return source_.substr(begin, end > begin ? end - begin : 0);
  }

  std::string_view source_;
};

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) {
    return {};
  }
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::shared_ptr<const Grammar> builtin_grammar(std::string_view name) {
  if (name == "java") {
    return std::make_shared<TreeSitterGrammar>("java", tree_sitter_java());
  }
  if (name == "c") {
    return std::make_shared<TreeSitterGrammar>("c", tree_sitter_c());
  }
  if (name == "expr") {
    return std::make_shared<ExpressionGrammar>();
  }
  return nullptr;
}

std::shared_ptr<const Grammar> load_shared_grammar(const std::string& language, const std::filesystem::path& lib,
                                                    std::string symbol) {
  if (symbol.empty()) {
    symbol = "tree_sitter_" + language;
  }
  void* handle = ::dlopen(lib.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (handle == nullptr) {
    const char* why = ::dlerror();
    throw Error(ErrorCode::invalid_config,
                "cannot load grammar library " + lib.string() + ": " + (why != nullptr ? why : "unknown"));
  }
  std::shared_ptr<void> keepalive(handle, [](void* h) { ::dlclose(h); });
  using LanguageFn = const TSLanguage* (*)();
  auto fn = reinterpret_cast<LanguageFn>(::dlsym(handle, symbol.c_str()));
  if (fn == nullptr) {
    throw Error(ErrorCode::invalid_config, "grammar library " + lib.string() + " has no symbol " + symbol);
  }
  return std::make_shared<TreeSitterGrammar>(language, fn(), std::move(keepalive));
}

} // namespace

TreeSitterGrammar::TreeSitterGrammar(std::string name, const TSLanguage* language, std::shared_ptr<void> keepalive)
    : name_(std::move(name)), language_(language), keepalive_(std::move(keepalive)) {
  const auto version = ts_language_version(language_);
  if (version < TREE_SITTER_MIN_COMPATIBLE_LANGUAGE_VERSION || version > TREE_SITTER_LANGUAGE_VERSION) {
    throw Error(ErrorCode::invalid_config,
                "grammar '" + name_ + "' has incompatible ABI version " + std::to_string(version));
  }
}

AstNode TreeSitterGrammar::parse(std::string_view code) const {
  // TSParser is not thread-safe; one per call keeps parse_source reentrant.
  std::unique_ptr<TSParser, ParserDeleter> parser(ts_parser_new());
  if (!ts_parser_set_language(parser.get(), language_)) {
    throw Error(ErrorCode::parse_failure, "tree-sitter rejected grammar '" + name_ + "'");
  }
  std::unique_ptr<TSTree, TreeDeleter> tree(
      ts_parser_parse_string(parser.get(), nullptr, code.data(), static_cast<uint32_t>(code.size())));
  if (!tree) {
    throw Error(ErrorCode::parse_failure, "tree-sitter returned no tree");
  }
  TSNode root = ts_tree_root_node(tree.get());
  TSTreeCursor cursor = ts_tree_cursor_new(root);
  TreeConverter converter(code);
  auto result = converter.convert(&cursor);
  ts_tree_cursor_delete(&cursor);
  if (!result) {
    throw Error(ErrorCode::parse_failure, "parse produced an empty tree");
  }
  return std::move(*result);
}

// --- expression grammar ------------------------------------------------------

namespace {

struct ExprToken {
  std::string type;
  std::string text;
};

std::vector<ExprToken> lex_expression(std::string_view code) {
  std::vector<ExprToken> tokens;
  std::size_t i = 0;
  while (i < code.size()) {
    const unsigned char c = code[i];
    if (std::isspace(c) != 0) {
      ++i;
    } else if (std::isalpha(c) != 0 || c == '_') {
      std::size_t j = i;
      while (j < code.size() && (std::isalnum(static_cast<unsigned char>(code[j])) != 0 || code[j] == '_')) {
        ++j;
      }
      tokens.push_back({"identifier", std::string(code.substr(i, j - i))});
      i = j;
    } else if (std::isdigit(c) != 0) {
      std::size_t j = i;
      while (j < code.size() && (std::isdigit(static_cast<unsigned char>(code[j])) != 0 || code[j] == '.')) {
        ++j;
      }
      tokens.push_back({"number", std::string(code.substr(i, j - i))});
      i = j;
    } else if (std::string_view("+-*/%()").find(static_cast<char>(c)) != std::string_view::npos) {
      tokens.push_back({std::string(1, static_cast<char>(c)), std::string(1, static_cast<char>(c))});
      ++i;
    } else {
      tokens.push_back({"ERROR", std::string(1, static_cast<char>(c))});
      ++i;
    }
  }
  return tokens;
}

class ExpressionParser {
public:
  explicit ExpressionParser(std::vector<ExprToken> tokens) : tokens_(std::move(tokens)) {}

  AstNode parse_program() {
    std::vector<AstNode> items;
    while (pos_ < tokens_.size()) {
      const std::size_t before = pos_;
      if (auto expr = parse_additive()) {
        items.push_back(std::move(*expr));
      }
      if (pos_ == before) {
        // Unusable token (stray ')' or operator): keep its text as an error leaf.
        items.push_back(AstNode::leaf("ERROR", tokens_[pos_].text));
        ++pos_;
      }
    }
    return AstNode::branch("program", std::move(items));
  }

private:
  const ExprToken* peek() const { return pos_ < tokens_.size() ? &tokens_[pos_] : nullptr; }

  bool peek_is(std::string_view a, std::string_view b = {}, std::string_view c = {}) const {
    const auto* t = peek();
    return t != nullptr && (t->type == a || (!b.empty() && t->type == b) || (!c.empty() && t->type == c));
  }

  AstNode take_leaf(std::string field = {}) {
    const auto& t = tokens_[pos_++];
    return AstNode::leaf(t.type, t.text, std::move(field));
  }

  std::optional<AstNode> parse_additive() {
    auto left = parse_multiplicative();
    while (left && peek_is("+", "-")) {
      auto op = take_leaf("operator");
      auto right = parse_multiplicative();
      left = binary(std::move(*left), std::move(op), std::move(right));
    }
    return left;
  }

  std::optional<AstNode> parse_multiplicative() {
    auto left = parse_unary();
    while (left && peek_is("*", "/", "%")) {
      auto op = take_leaf("operator");
      auto right = parse_unary();
      left = binary(std::move(*left), std::move(op), std::move(right));
    }
    return left;
  }

  std::optional<AstNode> parse_unary() {
    if (peek_is("-")) {
      auto op = take_leaf("operator");
      std::vector<AstNode> children{std::move(op)};
      if (auto operand = parse_unary()) {
        operand->field = "operand";
        children.push_back(std::move(*operand));
      }
      return AstNode::branch("unary_expression", std::move(children));
    }
    return parse_primary();
  }

  std::optional<AstNode> parse_primary() {
    if (peek_is("identifier", "number")) {
      return take_leaf();
    }
    if (peek_is("(")) {
      std::vector<AstNode> children{take_leaf()};
      if (auto inner = parse_additive()) {
        children.push_back(std::move(*inner));
      }
      if (peek_is(")")) {
        children.push_back(take_leaf());
      }
      return AstNode::branch("parenthesized_expression", std::move(children));
    }
    return std::nullopt;
  }

  static AstNode binary(AstNode left, AstNode op, std::optional<AstNode> right) {
    left.field = "left";
    std::vector<AstNode> children{std::move(left), std::move(op)};
    if (right) {
      right->field = "right";
      children.push_back(std::move(*right));
    }
    return AstNode::branch("binary_expression", std::move(children));
  }

  std::vector<ExprToken> tokens_;
  std::size_t pos_ = 0;
};

} // namespace

AstNode ExpressionGrammar::parse(std::string_view code) const {
  ExpressionParser parser(lex_expression(code));
  return parser.parse_program();
}

// --- registry ----------------------------------------------------------------

GrammarRegistry GrammarRegistry::with_builtins() {
  GrammarRegistry registry;
  auto c = builtin_grammar("c");
  registry.add("java", builtin_grammar("java"));
  registry.add("c", c);
  registry.add("cpp", c);
  registry.add("expr", builtin_grammar("expr"));
  return registry;
}

void GrammarRegistry::add(std::string language, std::shared_ptr<const Grammar> grammar) {
  if (language.empty() || !grammar) {
    throw Error(ErrorCode::invalid_argument, "grammar registration needs a language id and a grammar");
  }
  grammars_[std::move(language)] = std::move(grammar);
}

void GrammarRegistry::load_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw Error(ErrorCode::file_not_found, "grammar manifest not found: " + manifest.string());
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos && line.find_first_not_of(" \t") == hash) {
      continue;
    }
    std::string entry = trim(line);
    if (entry.empty()) {
      continue;
    }
    // Trailing "  # comment" after a space; "#symbol" glued to a path is not a comment.
    if (auto comment = entry.find(" #"); comment != std::string::npos) {
      entry = trim(std::string_view(entry).substr(0, comment));
    }
    auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::invalid_config,
                  manifest.string() + ":" + std::to_string(line_no) + ": expected '<language> = <grammar>'");
    }
    std::string language = trim(std::string_view(entry).substr(0, eq));
    std::string artifact = trim(std::string_view(entry).substr(eq + 1));
    if (language.empty() || artifact.empty()) {
      throw Error(ErrorCode::invalid_config, manifest.string() + ":" + std::to_string(line_no) + ": empty field");
    }
    if (artifact.starts_with("builtin:")) {
      auto grammar = builtin_grammar(std::string_view(artifact).substr(8));
      if (!grammar) {
        throw Error(ErrorCode::invalid_config,
                    manifest.string() + ":" + std::to_string(line_no) + ": unknown builtin grammar " + artifact);
      }
      add(language, std::move(grammar));
      continue;
    }
    std::string symbol;
    if (auto at = artifact.rfind('#'); at != std::string::npos) {
      symbol = artifact.substr(at + 1);
      artifact.resize(at);
    }
    std::filesystem::path lib(artifact);
    if (lib.is_relative()) {
      lib = manifest.parent_path() / lib;
    }
    add(language, load_shared_grammar(language, lib, symbol));
  }
}

bool GrammarRegistry::contains(std::string_view language) const { return grammars_.find(language) != grammars_.end(); }

const Grammar& GrammarRegistry::get(std::string_view language) const {
  auto it = grammars_.find(language);
  if (it == grammars_.end()) {
    throw Error(ErrorCode::unsupported_language, "no grammar registered for '" + std::string(language) + "'");
  }
  return *it->second;
}

std::vector<std::string> GrammarRegistry::languages() const {
  std::vector<std::string> out;
  for (const auto& [id, grammar] : grammars_) {
    out.push_back(id);
  }
  return out;
}

const GrammarRegistry& default_registry() {
  static const GrammarRegistry registry = GrammarRegistry::with_builtins();
  return registry;
}

AstNode parse_source(std::string_view code, std::string_view language, const GrammarRegistry& registry) {
  const Grammar& grammar = registry.get(language);
  if (is_blank(code)) {
    throw Error(ErrorCode::empty_input, "source code is empty");
  }
  return grammar.parse(code);
}

} // namespace selrag::ast
