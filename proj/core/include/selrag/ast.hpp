#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selrag::ast {

/// A syntax tree node. Leaves carry source text in `value`; inner nodes carry
/// only a grammar production name and their children.
struct AstNode {
  std::string type;
  std::optional<std::string> value;
  std::vector<AstNode> children;
  /// Grammar field this node occupies under its parent ("left", "name", ...),
  /// empty when the grammar assigns none.
  std::string field;

  static AstNode leaf(std::string type, std::string value, std::string field = {});
  static AstNode branch(std::string type, std::vector<AstNode> children, std::string field = {});

  bool is_leaf() const noexcept { return children.empty(); }

  friend bool operator==(const AstNode&, const AstNode&) = default;
};

/// Pre-order flattening of a tree with paired Left/Right markers around every
/// inner node.
struct AstSequence {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  /// Tokens joined by single spaces; this is what the structural embedder sees.
  std::string joined() const;

  friend bool operator==(const AstSequence&, const AstSequence&) = default;
};

inline constexpr std::string_view kMarkerPrefix = "AST#";
inline constexpr std::string_view kLeftSuffix = "#Left";
inline constexpr std::string_view kRightSuffix = "#Right";

std::string left_marker(std::string_view type);
std::string right_marker(std::string_view type);

bool is_left_marker(std::string_view token) noexcept;
bool is_right_marker(std::string_view token) noexcept;
inline bool is_marker(std::string_view token) noexcept {
  return is_left_marker(token) || is_right_marker(token);
}

/// Throws Error(invalid_argument) naming the first node that breaks the
/// leaf/value/type invariants.
void validate_tree(const AstNode& root);

/// Leaves contribute their value; inner nodes contribute
/// `AST#<type>#Left`, their children in order, then `AST#<type>#Right`.
AstSequence ast_traversal(const AstNode& root);

/// Leaf values in pre-order.
std::vector<std::string> leaf_token_stream(const AstNode& root);

/// True when the markers in `seq` form a well-nested bracket sequence with
/// matching types.
bool markers_balanced(const AstSequence& seq);

/// `seq` without marker tokens.
std::vector<std::string> strip_markers(const AstSequence& seq);

std::size_t node_count(const AstNode& root) noexcept;

/// True if any node in the tree is an error or missing-token node.
bool has_error_nodes(const AstNode& root) noexcept;

} // namespace selrag::ast
