// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "corpus.hpp"
#include "oracles.hpp"

#include "selrag/ast.hpp"
#include "selrag/error.hpp"
#include "selrag/experiment.hpp"
#include "selrag/generation.hpp"
#include "selrag/metrics.hpp"
#include "selrag/prompt.hpp"
#include "selrag/retrieval.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace selrag;
using retrieval::RankedId;
using retrieval::RetrievalMode;

namespace {

/// Collects failed expectations for one criterion.
class Check {
public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 5) {
      failures_.push_back(what);
    }
    failed_ += ok ? 0 : 1;
  }
  template <typename F>
  void expect_error(ErrorCode code, F&& f, const std::string& what) {
    try {
      f();
      expect(false, what + ": no error");
    } catch (const Error& e) {
      expect(e.code() == code, what + ": got " + std::string(to_string(e.code())));
    }
  }
  bool ok() const { return failed_ == 0; }
  std::size_t checks() const { return checks_; }
  std::size_t failed() const { return failed_; }
  const std::vector<std::string>& failures() const { return failures_; }
  std::string note;

private:
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::shared_ptr<const embed::Embedder> baseline(std::size_t dim = 256) {
  return embed::make_embedder(embed::EmbedderSpec::baseline(dim));
}

std::vector<std::string> ids_of(const retrieval::RetrievedContext& ctx) {
  std::vector<std::string> ids;
  for (const auto& s : ctx.selected) {
    ids.push_back(s.pair.id);
  }
  return ids;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const prompt::WhitespaceTokenizer kTokens;

// --- criteria ------------------------------------------------------------------

void retrieval_oracle(Check& c) {
  const auto start = Clock::now();
  const auto embedder = baseline();
  std::size_t queries = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto pairs = testdata::synthetic_pairs(50, seed * 7919);
    const auto index = retrieval::build_index(pairs, *embedder, RetrievalMode::hybrid).index;
    const retrieval::Retriever r(index, embedder);
    const auto targets = testdata::synthetic_pairs(5, seed * 104729, "q");
    for (const auto& t : targets) {
      const auto query = r.query_vector(t.buggy_code, "java");
      const auto ranking = r.rank(query);
      const auto oracle = retrieval::brute_force_topk(index, query, index.size());
      c.expect(ranking == oracle, "seed " + std::to_string(seed) + ": ranking differs from brute force");
      ++queries;
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 5.0, "runtime " + fmt("%.2f", elapsed) + " s >= 5 s");
  c.note = "20 codebases x 50 pairs, " + std::to_string(queries) + " queries, " + fmt("%.2f", elapsed) + " s";
}

void gate_semantics(Check& c) {
  const auto embedder = baseline(2);
  const auto placeholder = testdata::index_from_vectors({{"A", {1, 0}}, {"B", {1, 0}}, {"C", {1, 0}}});
  const retrieval::Retriever r(placeholder, embedder);
  const std::vector<RankedId> abc = {{"A", 0.95}, {"B", 0.85}, {"C", 0.60}};
  int cases = 0;

  // 1. Strictly-greater admission, similarity order.
  auto ctx = r.select(abc, "bc", {0.8, 512, 10}, kTokens);
  c.expect(ids_of(ctx) == std::vector<std::string>{"A", "B"}, "t=0.8 should select [A, B]");
  ++cases;

  // 2. Exactly at the threshold is rejected.
  ctx = r.select(abc, "bc", {0.85, 512, 10}, kTokens);
  c.expect(ids_of(ctx) == std::vector<std::string>{"A"}, "similarity equal to t must be rejected");
  ++cases;

  // 3. Budget: "[BUG] bc [FIX]" is 3 tokens, each placeholder pair adds 6.
  ctx = r.select(abc, "bc", {0.8, 9, 10}, kTokens);
  c.expect(ids_of(ctx) == std::vector<std::string>{"A"} && ctx.skipped_for_budget == std::vector<std::string>{"B"},
           "budget 9 should keep A and skip B");
  ++cases;

  // 4. Nothing above t: empty context, prompt degrades to the bare target.
  ctx = r.select(abc, "bc", {0.95, 512, 10}, kTokens);
  const auto bare = prompt::assemble_prompt(ctx, "bc", kTokens);
  c.expect(ctx.selected.empty() && ctx.candidates_considered == 3 && bare.text == "[BUG] bc [FIX]",
           "all <= t should give an empty context");
  ++cases;

  // 5. Overflow skip: the large pair is skipped, packing continues.
  std::vector<retrieval::IndexEntry> entries;
  const embed::FeatureVector v(std::vector<double>{1.0, 0.0});
  entries.push_back({{"big", "x x x x x x x x x x", "y", "java"}, v, v, v});
  entries.push_back({{"mid", "m m m", "n", "java"}, v, v, v});
  entries.push_back({{"small", "s", "t", "java"}, v, v, v});
  const retrieval::CodebaseIndex crafted(embed::EmbedderSpec::baseline(2), RetrievalMode::hybrid, entries);
  const retrieval::Retriever cr(crafted, embedder);
  // bare 3; big adds 13, mid 6, small 4. Budget 15: big overflows, mid and small fit.
  ctx = cr.select({{"big", 0.99}, {"mid", 0.98}, {"small", 0.97}}, "bc", {0.5, 15, 10}, kTokens);
  c.expect(ids_of(ctx) == std::vector<std::string>{"mid", "small"} &&
               ctx.skipped_for_budget == std::vector<std::string>{"big"},
           "overflow-skip should select [mid, small] and skip big");
  ++cases;

  // 6. max_pairs.
  ctx = r.select(abc, "bc", {-1.0, 512, 2}, kTokens);
  c.expect(ids_of(ctx) == std::vector<std::string>{"A", "B"} && ctx.admitted == 3, "max_pairs 2");
  ++cases;

  // 7. Ranking order: similarity descending, ties by ascending id.
  const auto tied = testdata::index_from_vectors({{"d", {1, 0}}, {"b", {1, 0}}, {"c", {0, 1}}, {"a", {1, 0}}});
  const retrieval::Retriever tr(tied, embedder);
  const auto ranking = tr.rank(embed::FeatureVector(std::vector<double>{1.0, 0.0}));
  std::vector<std::string> order;
  for (const auto& x : ranking) {
    order.push_back(x.id);
  }
  c.expect(order == std::vector<std::string>{"a", "b", "d", "c"}, "tie-break by id");
  ++cases;

  c.note = std::to_string(cases) + " crafted cases";
}

void gate_monotonicity(Check& c) {
  const auto start = Clock::now();
  const auto embedder = baseline();
  const auto codebase = testdata::synthetic_pairs(200, 31337, "c");
  const auto samples = testdata::synthetic_pairs(200, 271828, "s");
  const auto index = retrieval::build_index(codebase, *embedder, RetrievalMode::hybrid).index;
  const retrieval::Retriever r(index, embedder);
  const std::vector<double> thresholds = {-1.0, 0.5, 0.7, 0.8, 0.9};
  std::vector<double> avg_tokens(thresholds.size(), 0.0);
  std::vector<double> avg_pairs(thresholds.size(), 0.0);
  for (const auto& s : samples) {
    std::vector<std::size_t> selected;
    std::vector<std::set<std::string>> sets;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      const auto ctx = r.retrieve(s.buggy_code, "java", {thresholds[i], 512, 10}, kTokens);
      const auto p = prompt::assemble_prompt(ctx, s.buggy_code, kTokens);
      avg_tokens[i] += static_cast<double>(p.token_count) / static_cast<double>(samples.size());
      avg_pairs[i] += static_cast<double>(p.pairs_included) / static_cast<double>(samples.size());
      selected.push_back(ctx.selected.size());
      const auto ids = ids_of(ctx);
      sets.emplace_back(ids.begin(), ids.end());
    }
    c.expect(selected[4] <= selected[1], s.id + ": more pairs at t=0.9 than at t=0.5");
    for (std::size_t i = 1; i < sets.size(); ++i) {
      c.expect(std::includes(sets[i - 1].begin(), sets[i - 1].end(), sets[i].begin(), sets[i].end()),
               s.id + ": selection at higher t is not a subset");
    }
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    c.expect(avg_tokens[i] <= avg_tokens[i - 1], "average tokens grew at t=" + fmt("%g", thresholds[i]));
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 30.0, "runtime " + fmt("%.2f", elapsed) + " s >= 30 s");
  std::string table;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    table += (i ? ", " : "") + harness::threshold_label(thresholds[i]) + ":" + fmt("%.1f", avg_tokens[i]);
  }
  c.note = "avg tokens {" + table + "}, " + fmt("%.2f", elapsed) + " s";
}

void ast_traversal(Check& c) {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 100; ++i) {
    const auto tree = testdata::random_tree(rng, 6, 4);
    const auto seq = ast::ast_traversal(tree);
    c.expect(seq.tokens == oracle::traversal(tree), "tree " + std::to_string(i) + ": traversal differs from oracle");
    c.expect(ast::markers_balanced(seq), "tree " + std::to_string(i) + ": markers not well nested");
    // Independent bracket check with a stack of types.
    std::vector<std::string> stack;
    bool nested = true;
    for (const auto& t : seq.tokens) {
      if (ast::is_left_marker(t)) {
        stack.push_back(t.substr(4, t.size() - 4 - 5));
      } else if (ast::is_right_marker(t)) {
        nested = nested && !stack.empty() && stack.back() == t.substr(4, t.size() - 4 - 6);
        if (!stack.empty()) {
          stack.pop_back();
        }
      }
    }
    c.expect(nested && stack.empty(), "tree " + std::to_string(i) + ": stack check failed");
    c.expect(ast::strip_markers(seq) == ast::leaf_token_stream(tree) &&
                 ast::leaf_token_stream(tree) == oracle::leaves(tree),
             "tree " + std::to_string(i) + ": leaf stream mismatch");
  }
  c.note = "100 random trees, depth <= 6, fanout <= 4";
}

void cosine(Check& c) {
  std::mt19937_64 rng(1000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = testdata::random_values(rng, 256);
    const auto b = testdata::random_values(rng, 256);
    const double got = retrieval::cosine_similarity(embed::FeatureVector(a), embed::FeatureVector(b));
    worst = std::max(worst, std::abs(got - oracle::cosine(a, b)));
  }
  c.expect(worst <= 1e-10, "max deviation " + fmt("%.3g", worst));
  const embed::FeatureVector zero(std::vector<double>(256, 0.0));
  const embed::FeatureVector one(std::vector<double>(256, 1.0));
  c.expect_error(ErrorCode::zero_vector, [&] { retrieval::cosine_similarity(zero, one); }, "zero left");
  c.expect_error(ErrorCode::zero_vector, [&] { retrieval::cosine_similarity(one, zero); }, "zero right");

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::vector<std::pair<std::string, std::vector<double>>> scaled;
  std::uniform_real_distribution<double> factor(0.01, 100.0);
  for (int i = 0; i < 100; ++i) {
    auto v = testdata::random_values(rng, 256);
    const double f = factor(rng);
    auto w = v;
    for (auto& x : w) {
      x *= f;
    }
    rows.emplace_back("e" + std::to_string(i), std::move(v));
    scaled.emplace_back("e" + std::to_string(i), std::move(w));
  }
  const auto plain = testdata::index_from_vectors(rows);
  const auto big = testdata::index_from_vectors(scaled);
  const retrieval::Retriever rp(plain, baseline());
  const retrieval::Retriever rb(big, baseline());
  for (int q = 0; q < 20; ++q) {
    const embed::FeatureVector query(testdata::random_values(rng, 256));
    const auto a = rp.rank(query);
    const auto b = rb.rank(query);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) {
      same = a[i].id == b[i].id;
    }
    c.expect(same, "ranking changed under positive scaling");
  }
  c.note = "1000 pairs dim 256, max deviation " + fmt("%.2g", worst);
}

void bleu4(Check& c) {
  const std::vector<std::string> five = {"int", "x", "=", "1", ";"};
  c.expect(metrics::bleu4(five, five) == 1.0, "identical sequences must score exactly 1");
  const std::vector<std::string> cand = {"a", "b", "c", "d"};
  const std::vector<std::string> ref = {"a", "b", "c", "d", "e"};
  const double fixture = metrics::bleu4(cand, ref);
  c.expect(std::abs(fixture - 0.7788) <= 1e-4, "4/5-token fixture " + fmt("%.6f", fixture));
  c.expect(std::abs(fixture - oracle::bleu(cand, ref)) <= 1e-9, "4/5-token fixture differs from oracle");
  c.expect(std::abs(fixture - std::exp(-0.25)) <= 1e-12, "4/5-token fixture differs from exp(-0.25)");
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto a = testdata::random_tokens(rng, 1, 16, 4);
    const auto b = testdata::random_tokens(rng, 1, 16, 4);
    worst = std::max(worst, std::abs(metrics::bleu4(a, b) - oracle::bleu(a, b)));
  }
  c.expect(worst <= 1e-9, "random pairs max deviation " + fmt("%.3g", worst));
  c.note = "fixture " + fmt("%.6f", fixture) + ", 200 random pairs max deviation " + fmt("%.2g", worst);
}

void codebleu(Check& c) {
  const auto cfg = metrics::CodeBleuConfig::for_language("java");
  auto projection = cfg;
  projection.set_weights("1,0,0,0");
  const auto keywords = metrics::builtin_keywords("java");
  const std::set<std::string> kw(keywords.begin(), keywords.end());
  const auto weight = [&](const std::string& t) { return kw.contains(t) ? 1.0 : 0.2; };

  const std::vector<std::pair<std::string, std::string>> fixtures = {
      {"int add(int a, int b) { return a - b; }", "int add(int a, int b) { return a + b; }"},
      {"int f() { int x = 1; x += 2; return x; }", "int f() { int x = 1; x -= 2; return x; }"},
      {"boolean ok(int i) { return i >= 0 && i <= 10; }", "boolean ok(int i) { return i >= 0 && i < 10; }"},
      {"int sum(int[] v) { int s = 0; for (int i = 0; i <= v.length; i++) { s += v[i]; } return s; }",
       "int sum(int[] v) { int s = 0; for (int i = 0; i < v.length; i++) { s += v[i]; } return s; }"},
      {"String name(Object o) { if (o == null) { return o.toString(); } return \"\"; }",
       "String name(Object o) { if (o != null) { return o.toString(); } return \"\"; }"},
      {"void set(int v) { this.value = value; }", "void set(int v) { this.value = v; }"},
      {"int max(int a, int b) { if (a < b) { return a; } return b; }",
       "int max(int a, int b) { if (a > b) { return a; } return b; }"},
      {"int swap(int a, int b) { int t = a; a = b; b = a; return a + b; }",
       "int swap(int a, int b) { int t = a; a = b; b = t; return a + b; }"},
      {"int count(java.util.List<Integer> xs) { int n = 0; for (int x : xs) { n = x; } return n; }",
       "int count(java.util.List<Integer> xs) { int n = 0; for (int x : xs) { n++; } return n; }"},
      {"double avg(int a, int b) { return a + b / 2.0; }", "double avg(int a, int b) { return (a + b) / 2.0; }"},
  };
  double worst = 0.0;
  for (const auto& [cand, ref] : fixtures) {
    const auto self = metrics::codebleu(ref, ref, "java", cfg);
    c.expect(self.score == 1.0, "candidate == reference must score 1: " + ref);
    const auto proj = metrics::codebleu(cand, ref, "java", projection);
    c.expect(std::abs(proj.score - metrics::sentence_bleu4(cand, ref)) <= 1e-12, "(1,0,0,0) projection != BLEU");

    const auto s = metrics::codebleu(cand, ref, "java", cfg);
    const auto ct = metrics::tokenize_code(cand);
    const auto rt = metrics::tokenize_code(ref);
    const auto cand_tree = ast::parse_source(cand, "java");
    const auto ref_tree = ast::parse_source(ref, "java");
    const double want_bleu = oracle::bleu(ct, rt);
    const double want_weighted = oracle::bleu(ct, rt, {0.25, 0.25, 0.25, 0.25}, weight);
    const double want_ast = oracle::subtree_match(cand_tree, ref_tree);
    const double want_df = oracle::dataflow_match(oracle::java_dataflow(cand_tree), oracle::java_dataflow(ref_tree));
    for (double d : {s.bleu - want_bleu, s.weighted_bleu - want_weighted, s.ast_match - want_ast,
                     s.df_match - want_df,
                     s.score - 0.25 * (want_bleu + want_weighted + want_ast + want_df)}) {
      worst = std::max(worst, std::abs(d));
    }
  }
  c.expect(worst <= 1e-9, "component deviation " + fmt("%.3g", worst));
  c.note = std::to_string(fixtures.size()) + " Java fixtures, max component deviation " + fmt("%.2g", worst);
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("selrag_acceptance_" + std::to_string(::getpid()));
  TempDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_pairs(const fs::path& path, const std::vector<retrieval::BugFixPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  harness::write_pairs_jsonl(pairs, out);
  return path;
}

void determinism(Check& c) {
  TempDir tmp;
  const auto dataset = testdata::synthetic_pairs(24, 8080, "d");
  harness::ExperimentConfig cfg;
  cfg.dataset_path = write_pairs(tmp.path / "dataset.jsonl", dataset);
  cfg.codebase_path = write_pairs(tmp.path / "codebase.jsonl", testdata::synthetic_pairs(80, 9090, "c"));
  cfg.backend = harness::BackendKind::fixture;
  cfg.backend_fixture = tmp.path / "fixture.jsonl";
  cfg.gate = {0.7, 512, 10};
  cfg.sweep_thresholds = {harness::kNoThreshold, 0.5, 0.9};
  cfg.seed = 7;
  {
    std::ofstream out(cfg.backend_fixture);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      nlohmann::json row;
      row["target"] = dataset[i].buggy_code;
      // Every third sample gets the buggy code back, the rest the fix.
      const auto& text = i % 3 == 0 ? dataset[i].buggy_code : dataset[i].fixed_code;
      row["candidates"] = {{{"text", text}, {"score", -0.1 * static_cast<double>(i)}}};
      out << row.dump() << '\n';
    }
  }
  harness::write_reports(harness::run_experiment(cfg), tmp.path / "run1");
  harness::write_reports(harness::run_experiment(cfg), tmp.path / "run2");
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(tmp.path / "run1")) {
    const auto name = entry.path().filename().string();
    if (name == "timing.json") {
      continue; // wall-clock only
    }
    ++compared;
    c.expect(fs::exists(tmp.path / "run2" / name) && slurp(entry.path()) == slurp(tmp.path / "run2" / name),
             name + " differs between runs");
  }
  c.expect(compared >= 5, "expected at least 5 report files, found " + std::to_string(compared));
  c.note = std::to_string(compared) + " report files byte-identical (timing.json excluded)";
}

void prompt_format(Check& c) {
  const std::vector<retrieval::BugFixPair> pairs = {
      {"p1", "int inc(int x) { return x - 1; }", "int inc(int x) { return x + 1; }", "java"},
      {"p2", "boolean isEmpty(List<String> l) { return l.size() == 1; }",
       "boolean isEmpty(List<String> l) { return l.size() == 0; }", "java"},
      {"p3", "int max(int a, int b) {\n  return a < b ? a : b;\n}\n",
       "\nint max(int a, int b) {\n  return a > b ? a : b;\n}", "java"},
  };
  const std::string target = "int dec(int x) { return x + 1; }";
  for (std::size_t n : {0, 1, 3}) {
    retrieval::RetrievedContext ctx;
    for (std::size_t i = 0; i < n; ++i) {
      ctx.selected.push_back({pairs[i], 0.99 - 0.01 * static_cast<double>(i)});
    }
    const auto p = prompt::assemble_prompt(ctx, target, kTokens);
    const auto golden = slurp(fs::path(SELRAG_GOLDEN_DIR) / ("prompt_" + std::to_string(n) + ".txt"));
    c.expect(!golden.empty() && p.text == golden, std::to_string(n) + "-pair prompt differs from golden file");
    c.expect(p.text.ends_with("[FIX]") && p.text.starts_with("[BUG] "), std::to_string(n) + "-pair prompt framing");
    const auto parsed = prompt::parse_prompt(p.text);
    c.expect(parsed.pairs.size() == n && parsed.target == target, std::to_string(n) + "-pair prompt round trip");
  }
  c.note = "golden files for 0, 1 and 3 pairs";
}

void echo_oracle(Check& c) {
  TempDir tmp;
  harness::ExperimentConfig cfg;
  cfg.dataset_path = write_pairs(tmp.path / "dataset.jsonl", testdata::synthetic_pairs(10, 1234, "d"));
  cfg.codebase_path = write_pairs(tmp.path / "codebase.jsonl", testdata::synthetic_pairs(50, 5678, "c"));
  cfg.backend = harness::BackendKind::echo_reference;
  const auto result = harness::run_experiment(cfg);
  const auto& r = result.main.report;
  c.expect(result.num_samples == 10 && r.samples.size() == 10 && result.main.failures.empty(),
           "expected 10 scored samples");
  c.expect(r.em_rate == 1.0, "em_rate " + fmt("%.6f", r.em_rate));
  c.expect(r.bleu4 == 1.0, "bleu4 " + fmt("%.6f", r.bleu4));
  c.expect(r.codebleu == 1.0, "codebleu " + fmt("%.6f", r.codebleu));
  c.note = "em " + fmt("%.4f", r.em_rate) + " bleu4 " + fmt("%.4f", r.bleu4) + " codebleu " + fmt("%.4f", r.codebleu);
}

} // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria = {
      {"retrieval ranking equals brute-force oracle", retrieval_oracle},
      {"gate admission, ordering and budget packing", gate_semantics},
      {"gate monotonicity across thresholds", gate_monotonicity},
      {"AST traversal matches recursive oracle", ast_traversal},
      {"cosine similarity", cosine},
      {"BLEU-4", bleu4},
      {"CodeBLEU", codebleu},
      {"end-to-end determinism", determinism},
      {"prompt format", prompt_format},
      {"echo-oracle sanity", echo_oracle},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Check c;
    try {
      run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok() ? "PASS" : "FAIL") << " [" << n << "] " << name;
    if (!c.note.empty()) {
      std::cout << " (" << c.note << ")";
    }
    std::cout << '\n';
    for (const auto& f : c.failures()) {
      std::cout << "    " << f << '\n';
    }
    if (!c.ok()) {
      std::cout << "    " << c.failed() << " of " << c.checks() << " checks failed\n";
      ++failed;
    }
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
