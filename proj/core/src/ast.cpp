#include "selrag/ast.hpp"

#include "selrag/error.hpp"

#include <utility>

namespace selrag::ast {

AstNode AstNode::leaf(std::string type, std::string value, std::string field) {
  AstNode node;
  node.type = std::move(type);
  node.value = std::move(value);
  node.field = std::move(field);
  return node;
}

AstNode AstNode::branch(std::string type, std::vector<AstNode> children, std::string field) {
  AstNode node;
  node.type = std::move(type);
  node.children = std::move(children);
  node.field = std::move(field);
  return node;
}

std::string AstSequence::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i != 0) {
      out.push_back(' ');
    }
    out.append(tokens[i]);
  }
  return out;
}

std::string left_marker(std::string_view type) {
  std::string out(kMarkerPrefix);
  out.append(type).append(kLeftSuffix);
  return out;
}

std::string right_marker(std::string_view type) {
  std::string out(kMarkerPrefix);
  out.append(type).append(kRightSuffix);
  return out;
}

namespace {

bool has_marker_shape(std::string_view token, std::string_view suffix) noexcept {
  return token.size() > kMarkerPrefix.size() + suffix.size() && token.starts_with(kMarkerPrefix) &&
         token.ends_with(suffix);
}

std::string_view marker_type(std::string_view token, std::string_view suffix) noexcept {
  return token.substr(kMarkerPrefix.size(), token.size() - kMarkerPrefix.size() - suffix.size());
}

} // namespace

bool is_left_marker(std::string_view token) noexcept { return has_marker_shape(token, kLeftSuffix); }
bool is_right_marker(std::string_view token) noexcept { return has_marker_shape(token, kRightSuffix); }

void validate_tree(const AstNode& root) {
  std::vector<const AstNode*> stack{&root};
  while (!stack.empty()) {
    const AstNode* node = stack.back();
    stack.pop_back();
    if (node->type.empty()) {
      throw Error(ErrorCode::invalid_argument, "AST node with empty type");
    }
    if (node->is_leaf() != node->value.has_value()) {
      throw Error(ErrorCode::invalid_argument,
                  "AST node '" + node->type + "': value must be present exactly on leaves");
    }
    for (const auto& child : node->children) {
      stack.push_back(&child);
    }
  }
}

AstSequence ast_traversal(const AstNode& root) {
  // Explicit stack: method-level trees from real corpora can be deep enough
  // to make naive recursion a liability.
  struct Frame {
    const AstNode* node;
    std::size_t next_child;
  };
  AstSequence seq;
  std::vector<Frame> stack;
  stack.push_back({&root, 0});
  while (!stack.empty()) {
    Frame& top = stack.back();
    const AstNode& node = *top.node;
    if (node.is_leaf()) {
      seq.tokens.push_back(node.value.value_or(std::string{}));
      stack.pop_back();
      continue;
    }
    if (top.next_child == 0) {
      seq.tokens.push_back(left_marker(node.type));
    }
    if (top.next_child < node.children.size()) {
      const AstNode* child = &node.children[top.next_child++];
      stack.push_back({child, 0});
      continue;
    }
    seq.tokens.push_back(right_marker(node.type));
    stack.pop_back();
  }
  return seq;
}

std::vector<std::string> leaf_token_stream(const AstNode& root) {
  std::vector<std::string> out;
  std::vector<const AstNode*> stack{&root};
  while (!stack.empty()) {
    const AstNode* node = stack.back();
    stack.pop_back();
    if (node->is_leaf()) {
      out.push_back(node->value.value_or(std::string{}));
      continue;
    }
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) {
      stack.push_back(&*it);
    }
  }
  return out;
}

bool markers_balanced(const AstSequence& seq) {
  std::vector<std::string_view> open;
  for (const auto& token : seq.tokens) {
    if (is_left_marker(token)) {
      open.push_back(marker_type(token, kLeftSuffix));
    } else if (is_right_marker(token)) {
      if (open.empty() || open.back() != marker_type(token, kRightSuffix)) {
        return false;
      }
      open.pop_back();
    }
  }
  return open.empty();
}

std::vector<std::string> strip_markers(const AstSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.tokens.size());
  for (const auto& token : seq.tokens) {
    if (!is_marker(token)) {
      out.push_back(token);
    }
  }
  return out;
}

std::size_t node_count(const AstNode& root) noexcept {
  std::size_t count = 0;
  std::vector<const AstNode*> stack{&root};
  while (!stack.empty()) {
    const AstNode* node = stack.back();
    stack.pop_back();
    ++count;
    for (const auto& child : node->children) {
      stack.push_back(&child);
    }
  }
  return count;
}

bool has_error_nodes(const AstNode& root) noexcept {
  std::vector<const AstNode*> stack{&root};
  while (!stack.empty()) {
    const AstNode* node = stack.back();
    stack.pop_back();
    if (node->type == "ERROR" || node->type == "MISSING") {
      return true;
    }
    for (const auto& child : node->children) {
      stack.push_back(&child);
    }
  }
  return false;
}

} // namespace selrag::ast
