#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace selrag::oracle {

std::vector<std::string> traversal(const ast::AstNode& node) {
  if (node.children.empty()) {
    return {*node.value};
  }
  std::vector<std::string> out{"AST#" + node.type + "#Left"};
  for (const auto& c : node.children) {
    for (auto& t : traversal(c)) {
      out.push_back(t);
    }
  }
  out.push_back("AST#" + node.type + "#Right");
  return out;
}

std::vector<std::string> leaves(const ast::AstNode& node) {
  if (node.children.empty()) {
    return {*node.value};
  }
  std::vector<std::string> out;
  for (const auto& c : node.children) {
    for (auto& t : leaves(c)) {
      out.push_back(t);
    }
  }
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dims differ");
  }
  double dot = 0;
  double na = 0;
  double nb = 0;
  for (std::size_t i = 0; i < a.size(); i++) {
    dot += a[i] * b[i];
  }
  for (std::size_t i = 0; i < a.size(); i++) {
    na += a[i] * a[i];
  }
  for (std::size_t i = 0; i < b.size(); i++) {
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<std::vector<std::string>> grams(const std::vector<std::string>& toks, std::size_t n) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i + n <= toks.size(); i++) {
    out.emplace_back(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n));
  }
  return out;
}

int occurrences(const std::vector<std::vector<std::string>>& list, const std::vector<std::string>& g) {
  int c = 0;
  for (const auto& x : list) {
    if (x == g) {
      c++;
    }
  }
  return c;
}

} // namespace

double bleu(const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::array<double, 4> weights,
            const std::function<double(const std::string&)>& unigram_weight) {
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = cand.size() > ref.size() ? 1.0 : std::exp(1.0 - r / c);

  // Orders where neither side has an n-gram carry no information; drop them.
  double live = 0;
  for (std::size_t n = 1; n <= 4; n++) {
    if (cand.size() >= n || ref.size() >= n) {
      live += weights[n - 1];
    }
  }
  if (live == 0) {
    return bp;
  }
  double log_sum = 0;
  for (std::size_t n = 1; n <= 4; n++) {
    if (!(cand.size() >= n || ref.size() >= n) || weights[n - 1] == 0) {
      continue;
    }
    const auto cg = grams(cand, n);
    const auto rg = grams(ref, n);
    double matched = 0;
    double total = 0;
    std::vector<std::vector<std::string>> seen;
    for (const auto& g : cg) {
      if (occurrences(seen, g) > 0) {
        continue;
      }
      seen.push_back(g);
      const double w = (n == 1 && unigram_weight) ? unigram_weight(g[0]) : 1.0;
      const int cc = occurrences(cg, g);
      const int rc = occurrences(rg, g);
      total += w * cc;
      matched += w * std::min(cc, rc);
    }
    if (total == 0 || matched == 0) {
      return 0.0;
    }
    log_sum += weights[n - 1] / live * std::log(matched / total);
  }
  return bp * std::exp(log_sum);
}

namespace {

std::string shape(const ast::AstNode& node) {
  if (node.children.empty()) {
    return node.type;
  }
  std::string s = "(" + node.type;
  for (const auto& c : node.children) {
    s += " " + shape(c);
  }
  return s + ")";
}

void inner_shapes(const ast::AstNode& node, std::vector<std::string>& out) {
  if (node.children.empty()) {
    return;
  }
  out.push_back(shape(node));
  for (const auto& c : node.children) {
    inner_shapes(c, out);
  }
}

} // namespace

double subtree_match(const ast::AstNode& cand, const ast::AstNode& ref) {
  std::vector<std::string> cs;
  std::vector<std::string> rs;
  inner_shapes(cand, cs);
  inner_shapes(ref, rs);
  if (rs.empty()) {
    return cs.empty() ? 1.0 : 0.0;
  }
  std::sort(cs.begin(), cs.end());
  std::sort(rs.begin(), rs.end());
  std::vector<std::string> common;
  std::set_intersection(rs.begin(), rs.end(), cs.begin(), cs.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(rs.size());
}

// --- Java def-use ----------------------------------------------------------------

namespace {

struct Event {
  bool def;
  std::string name;
};

bool is_ident(const ast::AstNode& n) { return n.type == "identifier" && n.children.empty(); }

bool name_only(const ast::AstNode& leaf, const ast::AstNode* parent) {
  if (parent == nullptr) {
    return false;
  }
  static const std::set<std::string> declares_name = {
      "method_invocation", "method_declaration", "class_declaration", "interface_declaration",
      "enum_declaration", "record_declaration", "constructor_declaration", "compact_constructor_declaration",
      "annotation_type_declaration", "annotation", "marker_annotation", "annotation_type_element_declaration",
      "enum_constant"};
  static const std::set<std::string> label_like = {"labeled_statement",      "break_statement",
                                                   "continue_statement",     "scoped_identifier",
                                                   "scoped_type_identifier", "package_declaration",
                                                   "import_declaration",     "module_declaration"};
  if (leaf.field == "name" && declares_name.count(parent->type) > 0) {
    return true;
  }
  if (parent->type == "field_access" && leaf.field == "field") {
    return true;
  }
  if (parent->type == "element_value_pair" && leaf.field == "key") {
    return true;
  }
  return label_like.count(parent->type) > 0;
}

void events(const ast::AstNode& n, const ast::AstNode* parent, std::vector<Event>& out);

void children_events(const ast::AstNode& n, std::vector<Event>& out) {
  for (const auto& c : n.children) {
    events(c, &n, out);
  }
}

const ast::AstNode* field(const ast::AstNode& n, const std::string& f) {
  for (const auto& c : n.children) {
    if (c.field == f) {
      return &c;
    }
  }
  return nullptr;
}

void events(const ast::AstNode& n, const ast::AstNode* parent, std::vector<Event>& out) {
  if (n.children.empty()) {
    if (is_ident(n) && !name_only(n, parent)) {
      out.push_back({false, *n.value});
    }
    return;
  }
  const std::string& t = n.type;
  if (t == "assignment_expression") {
    const auto* l = field(n, "left");
    const auto* r = field(n, "right");
    const auto* op = field(n, "operator");
    if (l == nullptr || r == nullptr) {
      children_events(n, out);
      return;
    }
    events(*r, &n, out);
    if (!is_ident(*l)) {
      events(*l, &n, out);
      return;
    }
    if (op != nullptr && op->value && *op->value != "=") {
      out.push_back({false, *l->value});
    }
    out.push_back({true, *l->value});
    return;
  }
  if (t == "update_expression") {
    for (const auto& c : n.children) {
      if (is_ident(c)) {
        out.push_back({false, *c.value});
        out.push_back({true, *c.value});
      } else {
        events(c, &n, out);
      }
    }
    return;
  }
  if (t == "variable_declarator") {
    std::string declared;
    for (const auto& c : n.children) {
      if (c.field == "name" && is_ident(c)) {
        declared = *c.value;
      } else {
        events(c, &n, out);
      }
    }
    if (!declared.empty()) {
      out.push_back({true, declared});
    }
    return;
  }
  if (t == "formal_parameter" || t == "catch_formal_parameter" || t == "resource" || t == "enhanced_for_statement") {
    for (const auto& c : n.children) {
      if (c.field == "name" && is_ident(c)) {
        out.push_back({true, *c.value});
      } else {
        events(c, &n, out);
      }
    }
    return;
  }
  if (t == "lambda_expression") {
    for (const auto& c : n.children) {
      if (c.field == "parameters" && is_ident(c)) {
        out.push_back({true, *c.value});
      } else if (c.field == "parameters" && c.type == "inferred_parameters") {
        for (const auto& p : c.children) {
          if (is_ident(p)) {
            out.push_back({true, *p.value});
          }
        }
      } else {
        events(c, &n, out);
      }
    }
    return;
  }
  if (t == "method_reference") {
    if (!n.children.empty()) {
      events(n.children[0], &n, out);
    }
    return;
  }
  children_events(n, out);
}

} // namespace

std::vector<Edge> java_dataflow(const ast::AstNode& tree) {
  std::vector<Event> ev;
  events(tree, nullptr, ev);

  std::vector<std::string> order; // first appearance
  std::map<std::string, int> defs;
  std::map<std::string, int> uses;
  std::map<std::string, int> last;
  std::vector<Edge> edges;
  for (const auto& e : ev) {
    if (std::find(order.begin(), order.end(), e.name) == order.end()) {
      order.push_back(e.name);
    }
    const auto pos = std::find(order.begin(), order.end(), e.name) - order.begin();
    const std::string canon = "v" + std::to_string(pos);
    if (e.def) {
      last[e.name] = defs[e.name]++;
    } else {
      const int d = last.count(e.name) > 0 ? last[e.name] : -1;
      edges.emplace_back(canon, d, uses[e.name]++);
    }
  }
  return edges;
}

double dataflow_match(const std::vector<Edge>& cand, const std::vector<Edge>& ref) {
  if (ref.empty()) {
    return cand.empty() ? 1.0 : 0.0;
  }
  auto pool = cand;
  int hit = 0;
  for (const auto& e : ref) {
    auto it = std::find(pool.begin(), pool.end(), e);
    if (it != pool.end()) {
      pool.erase(it);
      hit++;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(ref.size());
}

std::size_t whitespace_tokens(const std::string& text) {
  std::istringstream in(text);
  std::string w;
  std::size_t n = 0;
  while (in >> w) {
    n++;
  }
  return n;
}

} // namespace selrag::oracle
