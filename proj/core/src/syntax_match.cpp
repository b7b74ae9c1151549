#include "selrag/error.hpp"
#include "selrag/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace selrag::metrics {

// --- subtree match -------------------------------------------------------------

namespace {

/// Hash-consing of node-type shapes: two subtrees get the same id exactly when
/// they have the same types in the same arrangement. Leaf values are ignored.
class ShapeInterner {
public:
  int intern(const ast::AstNode& node, std::map<int, int>& inner_counts) {
    std::vector<int> child_ids;
    child_ids.reserve(node.children.size());
    for (const auto& child : node.children) {
      child_ids.push_back(intern(child, inner_counts));
    }
    auto key = std::make_pair(node.type, std::move(child_ids));
    auto [it, inserted] = ids_.try_emplace(std::move(key), static_cast<int>(ids_.size()));
    if (!node.is_leaf()) {
      ++inner_counts[it->second];
    }
    return it->second;
  }

private:
  std::map<std::pair<std::string, std::vector<int>>, int> ids_;
};

} // namespace

double match_ast(const ast::AstNode& candidate, const ast::AstNode& reference) {
  ShapeInterner interner;
  std::map<int, int> ref_counts;
  std::map<int, int> cand_counts;
  interner.intern(reference, ref_counts);
  interner.intern(candidate, cand_counts);

  int ref_total = 0;
  int matched = 0;
  for (const auto& [shape, count] : ref_counts) {
    ref_total += count;
    if (auto it = cand_counts.find(shape); it != cand_counts.end()) {
      matched += std::min(count, it->second);
    }
  }
  if (ref_total == 0) {
    return cand_counts.empty() ? 1.0 : 0.0;
  }
  return static_cast<double>(matched) / static_cast<double>(ref_total);
}

// --- data flow -----------------------------------------------------------------

namespace {

enum class Dialect { java, c, generic };

Dialect dialect_for(std::string_view language) {
  if (language == "java") {
    return Dialect::java;
  }
  if (language == "c" || language == "cpp") {
    return Dialect::c;
  }
  return Dialect::generic;
}

const ast::AstNode* child_with_field(const ast::AstNode& node, std::string_view field) {
  for (const auto& child : node.children) {
    if (child.field == field) {
      return &child;
    }
  }
  return nullptr;
}

bool is_identifier(const ast::AstNode& node) { return node.type == "identifier" && node.is_leaf(); }

const std::set<std::string, std::less<>> kJavaNamedDeclarations = {
    "method_invocation",      "method_declaration",      "class_declaration",
    "interface_declaration",  "enum_declaration",        "record_declaration",
    "constructor_declaration", "compact_constructor_declaration", "annotation_type_declaration",
    "annotation",             "marker_annotation",       "annotation_type_element_declaration",
    "enum_constant",
};

const std::set<std::string, std::less<>> kJavaNameContexts = {
    "labeled_statement", "break_statement",    "continue_statement", "scoped_identifier",
    "scoped_type_identifier", "package_declaration", "import_declaration", "module_declaration",
};

const std::set<std::string, std::less<>> kJavaBindingParents = {
    "formal_parameter", "catch_formal_parameter", "resource", "enhanced_for_statement",
};

class DataflowWalker {
public:
  explicit DataflowWalker(Dialect dialect) : dialect_(dialect) {}

  void visit(const ast::AstNode& node, const ast::AstNode* parent) {
    if (node.is_leaf()) {
      if (is_identifier(node) && !is_non_variable(node, parent)) {
        use(*node.value);
      }
      return;
    }
    if (node.type == "assignment_expression") {
      visit_assignment(node);
      return;
    }
    if (node.type == "update_expression") {
      visit_update(node);
      return;
    }
    if (dialect_ == Dialect::java) {
      if (node.type == "variable_declarator") {
        visit_then_define(node, "name");
        return;
      }
      if (kJavaBindingParents.contains(node.type)) {
        visit_binding(node, "name");
        return;
      }
      if (node.type == "lambda_expression") {
        visit_lambda(node);
        return;
      }
      if (node.type == "method_reference") {
        // Only the receiver before "::" can be a variable.
        if (!node.children.empty()) {
          visit(node.children.front(), &node);
        }
        return;
      }
    } else if (dialect_ == Dialect::c) {
      if (node.type == "init_declarator") {
        for (const auto& child : node.children) {
          if (child.field != "declarator") {
            visit(child, &node);
          }
        }
        if (const auto* decl = child_with_field(node, "declarator")) {
          declare(*decl);
        }
        return;
      }
      if (node.type == "declaration" || node.type == "parameter_declaration") {
        for (const auto& child : node.children) {
          if (child.field == "declarator" && child.type != "init_declarator") {
            declare(child);
          } else {
            visit(child, &node);
          }
        }
        return;
      }
    }
    visit_children(node);
  }

  std::vector<DataflowEdge> edges() const { return edges_; }

private:
  void visit_children(const ast::AstNode& node) {
    for (const auto& child : node.children) {
      visit(child, &node);
    }
  }

  bool is_non_variable(const ast::AstNode& leaf, const ast::AstNode* parent) const {
    if (parent == nullptr) {
      return false;
    }
    switch (dialect_) {
    case Dialect::java:
      if (leaf.field == "name" && kJavaNamedDeclarations.contains(parent->type)) {
        return true;
      }
      if (parent->type == "field_access" && leaf.field == "field") {
        return true;
      }
      if (parent->type == "element_value_pair" && leaf.field == "key") {
        return true;
      }
      return kJavaNameContexts.contains(parent->type);
    case Dialect::c:
      if (parent->type == "call_expression" && leaf.field == "function") {
        return true;
      }
      if (parent->type == "function_declarator" && leaf.field == "declarator") {
        return true;
      }
      if ((parent->type == "preproc_def" || parent->type == "preproc_function_def") && leaf.field == "name") {
        return true;
      }
      return false;
    case Dialect::generic:
      return false;
    }
    return false;
  }

  void visit_assignment(const ast::AstNode& node) {
    const auto* left = child_with_field(node, "left");
    const auto* right = child_with_field(node, "right");
    const auto* op = child_with_field(node, "operator");
    if (left == nullptr || right == nullptr) {
      visit_children(node);
      return;
    }
    visit(*right, &node);
    if (is_identifier(*left)) {
      const bool compound = op != nullptr && op->value.value_or("=") != "=";
      if (compound) {
        use(*left->value);
      }
      define(*left->value);
    } else {
      visit(*left, &node);
    }
  }

  void visit_update(const ast::AstNode& node) {
    for (const auto& child : node.children) {
      if (is_identifier(child)) {
        use(*child.value);
        define(*child.value);
      } else {
        visit(child, &node);
      }
    }
  }

  void visit_then_define(const ast::AstNode& node, std::string_view name_field) {
    const ast::AstNode* name = nullptr;
    for (const auto& child : node.children) {
      if (child.field == name_field && is_identifier(child)) {
        name = &child;
      } else {
        visit(child, &node);
      }
    }
    if (name != nullptr) {
      define(*name->value);
    }
  }

  void visit_binding(const ast::AstNode& node, std::string_view name_field) {
    for (const auto& child : node.children) {
      if (child.field == name_field && is_identifier(child)) {
        define(*child.value);
      } else {
        visit(child, &node);
      }
    }
  }

  void visit_lambda(const ast::AstNode& node) {
    for (const auto& child : node.children) {
      if (child.field == "parameters" && is_identifier(child)) {
        define(*child.value);
      } else if (child.field == "parameters" && child.type == "inferred_parameters") {
        for (const auto& p : child.children) {
          if (is_identifier(p)) {
            define(*p.value);
          }
        }
      } else {
        visit(child, &node);
      }
    }
  }

  // C declarators nest: `*p`, `a[n]`, `(f)`; the innermost identifier is defined.
  void declare(const ast::AstNode& node) {
    if (is_identifier(node)) {
      define(*node.value);
      return;
    }
    if (node.type == "function_declarator") {
      for (const auto& child : node.children) {
        if (child.field != "declarator") {
          visit(child, &node);
        }
      }
      return;
    }
    if (node.type == "pointer_declarator" || node.type == "array_declarator" ||
        node.type == "parenthesized_declarator" || node.type == "attributed_declarator" ||
        node.type == "reference_declarator") {
      const ast::AstNode* inner = nullptr;
      for (const auto& child : node.children) {
        if (child.field == "declarator" || (node.type == "parenthesized_declarator" && !child.is_leaf())) {
          inner = &child;
        } else {
          visit(child, &node);
        }
      }
      if (inner != nullptr) {
        declare(*inner);
      }
      return;
    }
    visit(node, nullptr);
  }

  const std::string& canonical(const std::string& name) {
    auto [it, inserted] = canonical_.try_emplace(name, "");
    if (inserted) {
      it->second = "v" + std::to_string(canonical_.size() - 1);
    }
    return it->second;
  }

  void define(const std::string& name) {
    canonical(name);
    last_def_[name] = def_count_[name]++;
  }

  void use(const std::string& name) {
    const std::string& var = canonical(name);
    const auto def = last_def_.find(name);
    edges_.push_back({var, def == last_def_.end() ? -1 : def->second, use_count_[name]++});
  }

  Dialect dialect_;
  std::unordered_map<std::string, std::string> canonical_;
  std::unordered_map<std::string, int> def_count_;
  std::unordered_map<std::string, int> use_count_;
  std::unordered_map<std::string, int> last_def_;
  std::vector<DataflowEdge> edges_;
};

} // namespace

std::vector<DataflowEdge> extract_dataflow(const ast::AstNode& tree, std::string_view language) {
  DataflowWalker walker(dialect_for(language));
  walker.visit(tree, nullptr);
  return walker.edges();
}

double match_dataflow(std::span<const DataflowEdge> candidate, std::span<const DataflowEdge> reference) {
  if (reference.empty()) {
    return candidate.empty() ? 1.0 : 0.0;
  }
  std::map<DataflowEdge, int> cand_counts;
  for (const auto& e : candidate) {
    ++cand_counts[e];
  }
  std::size_t matched = 0;
  for (const auto& e : reference) {
    auto it = cand_counts.find(e);
    if (it != cand_counts.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(reference.size());
}

double match_df(std::string_view candidate, std::string_view reference, std::string_view language,
                const ast::GrammarRegistry& registry) {
  auto parse = [&](std::string_view code, const char* side) {
    try {
      return ast::parse_source(code, language, registry);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::unsupported_language) {
        throw;
      }
      throw Error(ErrorCode::parse_failure, std::string(side) + ": " + e.what());
    }
  };
  const auto cand_tree = parse(candidate, "candidate");
  const auto ref_tree = parse(reference, "reference");
  return match_dataflow(extract_dataflow(cand_tree, language), extract_dataflow(ref_tree, language));
}

} // namespace selrag::metrics
