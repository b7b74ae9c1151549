#include "selrag/ast.hpp"
#include "selrag/grammar.hpp"
#include "selrag/metrics.hpp"
#include "selrag/prompt.hpp"
#include "selrag/retrieval.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

using namespace selrag;

namespace {

std::vector<retrieval::BugFixPair> make_pairs(std::size_t n, std::uint64_t seed) {
  static const char* ops[] = {"+", "-", "*", "<", ">", "<=", ">="};
  static const char* names[] = {"count", "total", "index", "size", "value", "limit"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> op(0, 6);
  std::uniform_int_distribution<int> name(0, 5);
  std::vector<retrieval::BugFixPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string a = names[name(rng)];
    const std::string b = names[name(rng)];
    const std::string body = "int f" + std::to_string(i) + "(int " + a + ", int " + b + ") { if (" + a + " " +
                             ops[op(rng)] + " " + b + ") { return " + a + "; } return " + b + " ";
    out.push_back({"p" + std::to_string(i), body + ops[op(rng)] + " 1; }", body + ops[op(rng)] + " 2; }", "java"});
  }
  return out;
}

void BM_Cosine(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(dim);
  std::vector<double> b(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  const embed::FeatureVector va(a);
  const embed::FeatureVector vb(b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieval::cosine_similarity(va, vb));
  }
}
BENCHMARK(BM_Cosine)->Arg(256)->Arg(768);

void BM_Retrieve(benchmark::State& state) {
  const auto embedder = embed::make_embedder(embed::EmbedderSpec::baseline());
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)), 2);
  const auto index = retrieval::build_index(pairs, *embedder, retrieval::RetrievalMode::hybrid).index;
  const retrieval::Retriever retriever(index, embedder);
  const prompt::WhitespaceTokenizer tokens;
  const auto target = make_pairs(1, 3).front().buggy_code;
  for (auto _ : state) {
    benchmark::DoNotOptimize(retriever.retrieve(target, "java", {0.7, 512, 10}, tokens));
  }
}
BENCHMARK(BM_Retrieve)->Arg(200)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_Bleu4(benchmark::State& state) {
  const auto pairs = make_pairs(1, 4);
  const auto cand = metrics::tokenize_code(pairs[0].buggy_code);
  const auto ref = metrics::tokenize_code(pairs[0].fixed_code);
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::bleu4(cand, ref));
  }
}
BENCHMARK(BM_Bleu4);

void BM_ParseAndTraverse(benchmark::State& state) {
  const auto code = make_pairs(1, 5).front().fixed_code;
  for (auto _ : state) {
    const auto tree = ast::parse_source(code, "java");
    benchmark::DoNotOptimize(ast::ast_traversal(tree));
  }
}
BENCHMARK(BM_ParseAndTraverse)->Unit(benchmark::kMicrosecond);

void BM_CodeBleu(benchmark::State& state) {
  const auto pair = make_pairs(1, 6).front();
  const auto cfg = metrics::CodeBleuConfig::for_language("java");
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::codebleu(pair.buggy_code, pair.fixed_code, "java", cfg));
  }
}
BENCHMARK(BM_CodeBleu)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
