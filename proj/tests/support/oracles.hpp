#pragma once

// Deliberately naive re-implementations used to check the library. None of
// these call into the code they check.

#include "selrag/ast.hpp"

#include <array>
#include <functional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace selrag::oracle {

/// Textbook recursive pre-order flattening with Left/Right markers.
std::vector<std::string> traversal(const ast::AstNode& node);

/// Leaves, recursively.
std::vector<std::string> leaves(const ast::AstNode& node);

/// Plain loops over the raw values.
double cosine(std::span<const double> a, std::span<const double> b);

/// BLEU by listing every n-gram and counting with linear scans.
/// `unigram_weight` (may be empty) weights unigram matches and totals.
double bleu(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
            std::array<double, 4> weights = {0.25, 0.25, 0.25, 0.25},
            const std::function<double(const std::string&)>& unigram_weight = {});

/// Every subtree rooted at an inner node, written out as an s-expression of
/// node types, matched with clipping by sorting both lists.
double subtree_match(const ast::AstNode& cand, const ast::AstNode& ref);

using Edge = std::tuple<std::string, int, int>;

/// Two passes over a Java tree: first list def/use events in evaluation
/// order, then fold them into canonical edges.
std::vector<Edge> java_dataflow(const ast::AstNode& tree);

double dataflow_match(const std::vector<Edge>& cand, const std::vector<Edge>& ref);

/// Whitespace-separated chunks; markers must already be space separated.
std::size_t whitespace_tokens(const std::string& text);

} // namespace selrag::oracle
