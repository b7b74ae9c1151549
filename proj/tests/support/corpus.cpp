#include "corpus.hpp"

#include <array>
#include <cstdio>

namespace selrag::testdata {

namespace {

template <typename T, std::size_t N>
const T& pick(std::mt19937_64& rng, const std::array<T, N>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

const std::array<const char*, 12> kVerbs = {"compute", "update", "merge",  "scan",  "find",   "count",
                                            "check",   "apply",  "select", "total", "adjust", "load"};
const std::array<const char*, 12> kNouns = {"Total", "Index", "Range", "Score", "Limit", "Count",
                                            "Value", "Offset", "Size", "Weight", "Delta", "Rate"};
const std::array<const char*, 8> kVars = {"a", "b", "n", "k", "value", "limit", "count", "item"};
const std::array<const char*, 4> kArith = {"+", "-", "*", "/"};
const std::array<const char*, 4> kCompare = {"<", ">", "<=", ">="};

std::string flip_compare(const std::string& op) {
  if (op == "<") return "<=";
  if (op == "<=") return "<";
  if (op == ">") return ">=";
  return ">";
}

struct Pair {
  std::string buggy;
  std::string fixed;
};

Pair make_method(std::mt19937_64& rng) {
  const std::string name = std::string(pick(rng, kVerbs)) + pick(rng, kNouns);
  std::string x = pick(rng, kVars);
  std::string y = pick(rng, kVars);
  while (y == x) {
    y = pick(rng, kVars);
  }
  const int c = std::uniform_int_distribution<int>(0, 99)(rng);
  const std::string cs = std::to_string(c);
  switch (std::uniform_int_distribution<int>(0, 6)(rng)) {
  case 0: {
    const std::string op = pick(rng, kArith);
    std::string bad = pick(rng, kArith);
    while (bad == op) {
      bad = pick(rng, kArith);
    }
    const auto body = [&](const std::string& o) {
      return "int " + name + "(int " + x + ", int " + y + ") { return " + x + " " + o + " " + y + "; }";
    };
    return {body(bad), body(op)};
  }
  case 1: {
    const auto body = [&](const std::string& cmp) {
      return "int " + name + "(int[] " + x + ") { int s = 0; for (int i = 0; i " + cmp + " " + x +
             ".length; i++) { s += " + x + "[i]; } return s; }";
    };
    return {body("<="), body("<")};
  }
  case 2: {
    const auto body = [&](const std::string& cmp) {
      return "String " + name + "(Object " + x + ") { if (" + x + " " + cmp + " null) { return " + x +
             ".toString(); } return \"\"; }";
    };
    return {body("=="), body("!=")};
  }
  case 3: {
    const std::string op = pick(rng, kCompare);
    const auto body = [&](const std::string& cmp) {
      return "int " + name + "(int " + x + ", int " + y + ") { if (" + x + " " + cmp + " " + y + ") { return " + x +
             "; } return " + y + "; }";
    };
    return {body(flip_compare(op)), body(op)};
  }
  case 4: {
    const auto body = [&](const std::string& rhs) {
      return "void " + name + "(int " + x + ") { this." + y + " = " + rhs + "; }";
    };
    return {body(y), body(x)};
  }
  case 5: {
    const auto body = [&](const std::string& bound) {
      return "boolean " + name + "(int " + x + ") { return " + x + " >= 0 && " + x + " < " + bound + "; }";
    };
    return {body(std::to_string(c + 1)), body(cs)};
  }
  default: {
    const auto body = [&](const std::string& init) {
      return "int " + name + "(java.util.List<Integer> " + x + ") { int " + y + " = " + init + "; for (int v : " +
             x + ") { if (v > " + y + ") { " + y + " = v; } } return " + y + "; }";
    };
    return {body("0"), body("Integer.MIN_VALUE")};
  }
  }
}

} // namespace

std::vector<retrieval::BugFixPair> synthetic_pairs(std::size_t count, std::uint64_t seed, const std::string& prefix) {
  std::mt19937_64 rng(seed);
  std::vector<retrieval::BugFixPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto [buggy, fixed] = make_method(rng);
    char id[32];
    std::snprintf(id, sizeof id, "%04zu", i);
    out.push_back({prefix + id, std::move(buggy), std::move(fixed), "java"});
  }
  return out;
}

ast::AstNode random_tree(std::mt19937_64& rng, int max_depth, int max_fanout) {
  static const std::array<const char*, 6> types = {"block", "call", "binary_expression", "if_statement", "args",
                                                   "program"};
  static const std::array<const char*, 6> values = {"x", "y", "+", "(", ")", "42"};
  const bool make_leaf = max_depth <= 1 || std::uniform_int_distribution<int>(0, 3)(rng) == 0;
  if (make_leaf) {
    return ast::AstNode::leaf("identifier", pick(rng, values));
  }
  const int fanout = std::uniform_int_distribution<int>(1, max_fanout)(rng);
  std::vector<ast::AstNode> children;
  for (int i = 0; i < fanout; ++i) {
    children.push_back(random_tree(rng, max_depth - 1, max_fanout));
  }
  return ast::AstNode::branch(pick(rng, types), std::move(children));
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) {
    x = u(rng);
  }
  return v;
}

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len,
                                       std::size_t alphabet) {
  const auto len = std::uniform_int_distribution<std::size_t>(min_len, max_len)(rng);
  std::uniform_int_distribution<std::size_t> sym(0, alphabet - 1);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back("t" + std::to_string(sym(rng)));
  }
  return out;
}

retrieval::CodebaseIndex index_from_vectors(const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                                            retrieval::RetrievalMode mode) {
  std::vector<retrieval::IndexEntry> entries;
  std::size_t dim = rows.empty() ? 1 : rows.front().second.size();
  for (const auto& [id, values] : rows) {
    embed::FeatureVector v(values);
    retrieval::BugFixPair pair{id, "buggy " + id, "fixed " + id, "java"};
    entries.push_back({std::move(pair), v, v, v});
  }
  return retrieval::CodebaseIndex(embed::EmbedderSpec::baseline(dim), mode, std::move(entries));
}

} // namespace selrag::testdata
