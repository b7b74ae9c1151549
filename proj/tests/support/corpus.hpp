#pragma once

#include "selrag/ast.hpp"
#include "selrag/embedding.hpp"
#include "selrag/retrieval.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace selrag::testdata {

/// Java-like bug-fix pairs built from a handful of method templates with
/// randomized names, constants and injected bugs. Ids are "<prefix>NNNN".
std::vector<retrieval::BugFixPair> synthetic_pairs(std::size_t count, std::uint64_t seed,
                                                   const std::string& prefix = "p");

/// Random well-formed tree: inner nodes have 1..max_fanout children, leaves
/// appear at max_depth or at random.
ast::AstNode random_tree(std::mt19937_64& rng, int max_depth, int max_fanout);

std::vector<double> random_values(std::mt19937_64& rng, std::size_t dim);

/// Random tokens drawn from a small alphabet so n-grams repeat.
std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len,
                                       std::size_t alphabet);

/// Index whose entries carry the given vectors (semantic = structural =
/// hybrid) and placeholder code.
retrieval::CodebaseIndex index_from_vectors(const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                                            retrieval::RetrievalMode mode = retrieval::RetrievalMode::hybrid);

} // namespace selrag::testdata
