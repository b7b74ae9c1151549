#include "corpus.hpp"
#include "expect_error.hpp"

#include "selrag/experiment.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace selrag;
using harness::ExperimentConfig;

namespace {

namespace fs = std::filesystem;

class HarnessTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("selrag_harness_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) const {
    const auto path = dir_ / name;
    std::ofstream(path, std::ios::binary) << content;
    return path;
  }

  fs::path write_pairs(const std::string& name, const std::vector<retrieval::BugFixPair>& pairs) const {
    std::ostringstream out;
    harness::write_pairs_jsonl(pairs, out);
    return write(name, out.str());
  }

  static std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  ExperimentConfig base_config() const {
    ExperimentConfig cfg;
    cfg.codebase_path = write_pairs("codebase.jsonl", testdata::synthetic_pairs(60, 1, "c"));
    cfg.dataset_path = write_pairs("dataset.jsonl", testdata::synthetic_pairs(20, 2, "d"));
    cfg.gate = {0.5, 512, 10};
    cfg.workers = 2;
    return cfg;
  }

  fs::path dir_;
};

std::vector<std::string> ids(const std::vector<retrieval::BugFixPair>& v) {
  std::vector<std::string> out;
  for (const auto& p : v) {
    out.push_back(p.id);
  }
  return out;
}

} // namespace

TEST_F(HarnessTest, IngestHandlesMessyRows) {
  const auto path = write("d.jsonl",
                          "{\"id\": \"a\", \"buggy_code\": \"int x;\", \"fixed_code\": \"int y;\"}\r\n"
                          "\n"
                          "not json\n"
                          "{\"buggy_code\": \"int z;\"}\n"
                          "{\"buggy_code\": \"  \", \"fixed_code\": \"x\"}\n"
                          "{\"id\": 7, \"buggy_code\": \"a\", \"fixed_code\": \"b\", \"language\": \"c\"}\n"
                          "{\"buggy_code\": \"q\", \"fixed_code\": \"r\"}\n"
                          "{\"id\": \"a\", \"buggy_code\": \"dup\", \"fixed_code\": \"dup\"}\n"
                          "[1, 2]\n");
  const auto result = harness::ingest_dataset(path, "java");
  ASSERT_EQ(result.records.size(), 3U);
  EXPECT_EQ(result.records[0].id, "a");
  EXPECT_EQ(result.records[0].language, "java");
  EXPECT_EQ(result.records[1].id, "7");
  EXPECT_EQ(result.records[1].language, "c");
  EXPECT_EQ(result.records[2].id, "row-000007");
  std::vector<std::size_t> lines;
  for (const auto& issue : result.skipped) {
    lines.push_back(issue.line);
  }
  EXPECT_EQ(lines, (std::vector<std::size_t>{3, 4, 5, 8, 9}));
}

TEST_F(HarnessTest, IngestErrors) {
  EXPECT_SELRAG_ERROR(harness::ingest_dataset(dir_ / "absent.jsonl"), ErrorCode::file_not_found);
  EXPECT_SELRAG_ERROR(harness::ingest_dataset(write("bad.jsonl", "nope\n{}\n")), ErrorCode::all_rows_invalid);
  EXPECT_SELRAG_ERROR(harness::ingest_dataset(write("empty.jsonl", "")), ErrorCode::all_rows_invalid);
}

TEST_F(HarnessTest, PairsRoundTripThroughJsonl) {
  const auto pairs = testdata::synthetic_pairs(10, 4);
  const auto back = harness::ingest_dataset(write_pairs("p.jsonl", pairs)).records;
  EXPECT_EQ(back, pairs);
}

TEST(Split, SizesAndPartition) {
  const auto records = testdata::synthetic_pairs(100, 3);
  const auto split = harness::split_dataset(records, 10, {}, 42);
  EXPECT_EQ(split.codebase.size(), 10U);
  EXPECT_EQ(split.train.size(), 72U);
  EXPECT_EQ(split.valid.size(), 9U);
  EXPECT_EQ(split.test.size(), 9U);
  std::set<std::string> all;
  for (const auto* part : {&split.train, &split.valid, &split.test, &split.codebase}) {
    for (const auto& p : *part) {
      EXPECT_TRUE(all.insert(p.id).second) << p.id;
    }
  }
  EXPECT_EQ(all.size(), 100U);
}

TEST(Split, SeedDeterminesResult) {
  const auto records = testdata::synthetic_pairs(50, 3);
  const auto a = harness::split_dataset(records, 5, {}, 7);
  const auto b = harness::split_dataset(records, 5, {}, 7);
  const auto c = harness::split_dataset(records, 5, {}, 8);
  EXPECT_EQ(ids(a.test), ids(b.test));
  EXPECT_EQ(ids(a.codebase), ids(b.codebase));
  EXPECT_NE(ids(a.train), ids(c.train));
}

TEST(Split, ShuffleIsAPermutation) {
  std::vector<std::size_t> items(1000);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i] = i;
  }
  auto shuffled = items;
  harness::seeded_shuffle(shuffled, 123);
  EXPECT_NE(shuffled, items);
  auto again = items;
  harness::seeded_shuffle(again, 123);
  EXPECT_EQ(shuffled, again);
  std::sort(shuffled.begin(), shuffled.end());
  EXPECT_EQ(shuffled, items);
}

TEST(Split, Errors) {
  const auto records = testdata::synthetic_pairs(5, 3);
  EXPECT_SELRAG_ERROR(harness::split_dataset(records, 6, {}, 1), ErrorCode::insufficient_records);
  EXPECT_SELRAG_ERROR(harness::split_dataset(records, 1, {0.8, -0.1, 0.3}, 1), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(harness::split_dataset(records, 1, {0.8, 0.0, 0.2}, 1), ErrorCode::invalid_config);
  // Ratios are relative: equal weights give equal thirds.
  const auto thirds = harness::split_dataset(testdata::synthetic_pairs(31, 3), 1, {0.5, 0.5, 0.5}, 1);
  EXPECT_EQ(thirds.train.size(), 10U);
  EXPECT_EQ(thirds.valid.size(), 10U);
  EXPECT_EQ(thirds.test.size(), 10U);
}

TEST(Config, ParsesKeyValueFile) {
  std::istringstream in(R"(# experiment
[data]
dataset = data/d.jsonl
codebase = "cb.jsonl"
language = java

[gate]
threshold = 0.85
budget = 1024
max_pairs = 5
mode = ssdr
sweep = 0.9, none, 0.5
backend = constant
backend_text = 'return 0;'
seed = 9
codebleu_weights = 0.1,0.2,0.3,0.4
)");
  const auto cfg = harness::parse_config(in, "/base");
  EXPECT_EQ(cfg.dataset_path, fs::path("/base/data/d.jsonl"));
  EXPECT_EQ(cfg.codebase_path, fs::path("/base/cb.jsonl"));
  EXPECT_DOUBLE_EQ(cfg.gate.threshold, 0.85);
  EXPECT_EQ(cfg.gate.max_context_tokens, 1024U);
  EXPECT_EQ(cfg.gate.max_pairs, 5U);
  EXPECT_EQ(cfg.mode, retrieval::RetrievalMode::structural_only);
  EXPECT_EQ(cfg.sweep_thresholds, (std::vector<double>{-1.0, 0.5, 0.9}));
  EXPECT_EQ(cfg.backend, harness::BackendKind::constant);
  EXPECT_EQ(cfg.backend_text, "return 0;");
  EXPECT_EQ(cfg.seed, 9U);
}

TEST(Config, TrailingComments) {
  std::istringstream in("dataset = d.jsonl   # eval split\n"
                        "backend = constant # fixed answer\n"
                        "backend_text = 'x # y'  # kept inside quotes\n"
                        "gen_endpoint = http://h/p#frag\n");
  const auto cfg = harness::parse_config(in);
  EXPECT_EQ(cfg.dataset_path, fs::path("d.jsonl"));
  EXPECT_EQ(cfg.backend, harness::BackendKind::constant);
  EXPECT_EQ(cfg.backend_text, "x # y");
  EXPECT_EQ(cfg.backend_endpoint, "http://h/p#frag");
}

TEST(Config, Errors) {
  const auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return harness::parse_config(in);
  };
  EXPECT_SELRAG_ERROR(parse("dataset = d\ncodebase = c\nbogus = 1\n"), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(parse("dataset = d\ncodebase = c\nthreshold\n"), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(parse("dataset = d\ncodebase = c\nthreshold = 2\n"), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(parse("dataset = d\ncodebase = c\nbackend = gpt\n"), ErrorCode::invalid_config);
  // Whole-config checks run after overrides are applied, not while parsing.
  EXPECT_SELRAG_ERROR(parse("dataset = d\ncodebase = c\nbackend = http\n").validate(), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(parse("codebase = c\n").validate(), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(parse("dataset = d\n").validate(), ErrorCode::invalid_config);
  parse("dataset = d\ncodebase_size = 5\n").validate();
  EXPECT_SELRAG_ERROR(parse("dataset = d\ncodebase = c\nmax_pairs = -3\n"), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(harness::load_config("/nonexistent/x.conf"), ErrorCode::file_not_found);
}

TEST(Reports, ThresholdLabels) {
  EXPECT_EQ(harness::threshold_label(harness::kNoThreshold), "No Threshold");
  EXPECT_EQ(harness::threshold_label(0.9), "0.9");
  EXPECT_EQ(harness::threshold_label(0.85), "0.85");
}

TEST_F(HarnessTest, EchoBackendScoresPerfectly) {
  const auto result = harness::run_experiment(base_config());
  EXPECT_EQ(result.num_samples, 20U);
  EXPECT_EQ(result.codebase_size, 60U);
  EXPECT_TRUE(result.main.failures.empty());
  EXPECT_DOUBLE_EQ(result.main.report.em_rate, 1.0);
  EXPECT_DOUBLE_EQ(result.main.report.bleu4, 1.0);
  EXPECT_DOUBLE_EQ(result.main.report.codebleu, 1.0);
  EXPECT_GT(result.main.avg_input_tokens, 0.0);
  ASSERT_EQ(result.main.audit.size(), 20U);
  for (const auto& a : result.main.audit) {
    EXPECT_LE(a.prompt_tokens.value_or(0), 512U);
    for (const auto& r : a.retrieved) {
      EXPECT_GT(r.similarity, 0.5);
    }
  }
}

TEST_F(HarnessTest, ConstantBackendIsScoredHonestly) {
  auto cfg = base_config();
  cfg.backend = harness::BackendKind::constant;
  cfg.backend_text = "int nothing() { return 0; }";
  const auto result = harness::run_experiment(cfg);
  EXPECT_DOUBLE_EQ(result.main.report.em_rate, 0.0);
  EXPECT_LT(result.main.report.codebleu, 0.8);
}

TEST_F(HarnessTest, FailingSamplesAreExcludedFromMeans) {
  auto cfg = base_config();
  auto data = testdata::synthetic_pairs(6, 2, "d");
  data.push_back({"zz-marker", "int x = 1; // [FIX]", "int x = 2;", "java"});
  cfg.dataset_path = write_pairs("dataset.jsonl", data);
  const auto result = harness::run_experiment(cfg);
  ASSERT_EQ(result.main.failures.size(), 1U);
  EXPECT_EQ(result.main.failures[0].id, "zz-marker");
  EXPECT_EQ(result.main.failures[0].stage, "retrieve");
  EXPECT_NE(result.main.failures[0].error.find("MarkerCollision"), std::string::npos);
  EXPECT_EQ(result.main.report.samples.size(), 6U);
  EXPECT_DOUBLE_EQ(result.main.report.em_rate, 1.0);
  EXPECT_TRUE(result.main.audit.back().failure.has_value());
}

TEST_F(HarnessTest, SweepTokensShrinkAsThresholdRises) {
  auto cfg = base_config();
  cfg.sweep_thresholds = {harness::kNoThreshold, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95};
  const auto result = harness::run_experiment(cfg);
  ASSERT_TRUE(result.sweep.has_value());
  const auto& rows = result.sweep->rows;
  ASSERT_EQ(rows.size(), 7U);
  EXPECT_TRUE(result.sweep->tokens_non_increasing);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i - 1].threshold, rows[i].threshold);
    EXPECT_LE(rows[i].avg_input_tokens, rows[i - 1].avg_input_tokens);
    EXPECT_LE(rows[i].avg_pairs, rows[i - 1].avg_pairs);
  }
  std::ostringstream md;
  harness::write_sweep_markdown(*result.sweep, md);
  const auto text = md.str();
  EXPECT_NE(text.find("| Threshold | EM | BLEU-4 | CodeBLEU |"), std::string::npos);
  EXPECT_LT(text.find("| 0.95 |"), text.find("| 0.3 |"));
  EXPECT_LT(text.find("| 0.3 |"), text.find("| No Threshold |"));
}

TEST_F(HarnessTest, ReportsAreReproducible) {
  auto cfg = base_config();
  cfg.sweep_thresholds = {harness::kNoThreshold, 0.8};
  const auto a = dir_ / "a";
  const auto b = dir_ / "b";
  harness::write_reports(harness::run_experiment(cfg), a);
  cfg.workers = 1;
  harness::write_reports(harness::run_experiment(cfg), b);
  for (const char* name : {"report.json", "samples.csv", "audit.jsonl", "sweep.json", "sweep.md"}) {
    SCOPED_TRACE(name);
    ASSERT_TRUE(fs::exists(a / name));
    EXPECT_EQ(slurp(a / name), slurp(b / name));
  }
  EXPECT_TRUE(fs::exists(a / "timing.json"));
  const auto report = nlohmann::json::parse(slurp(a / "report.json"));
  EXPECT_TRUE(report.is_object());
  std::ifstream audit(a / "audit.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(audit, line)) {
    EXPECT_TRUE(nlohmann::json::parse(line).contains("id"));
    ++n;
  }
  EXPECT_EQ(n, 20U);
}

TEST_F(HarnessTest, SplitsDatasetWhenNoCodebaseIsGiven) {
  ExperimentConfig cfg;
  cfg.dataset_path = write_pairs("all.jsonl", testdata::synthetic_pairs(120, 5));
  cfg.codebase_size = 20;
  cfg.gate = {0.5, 512, 10};
  const harness::Experiment exp(cfg);
  EXPECT_EQ(exp.samples().size(), 10U);
  ASSERT_NE(exp.index(), nullptr);
  EXPECT_EQ(exp.index()->size(), 20U);
  for (const auto& s : exp.samples()) {
    EXPECT_EQ(exp.index()->find(s.id), nullptr);
  }
}

TEST_F(HarnessTest, PrebuiltIndexAndNoRetrieval) {
  auto cfg = base_config();
  const auto embedder = embed::make_embedder(cfg.embedder);
  const auto built = retrieval::build_index(testdata::synthetic_pairs(60, 1, "c"), *embedder,
                                            retrieval::RetrievalMode::hybrid);
  retrieval::save_index(built.index, dir_ / "cb.srix");
  auto with_index = cfg;
  with_index.codebase_path.clear();
  with_index.index_path = dir_ / "cb.srix";
  const auto a = harness::run_experiment(cfg);
  const auto b = harness::run_experiment(with_index);
  EXPECT_DOUBLE_EQ(a.main.avg_input_tokens, b.main.avg_input_tokens);

  auto bare = cfg;
  bare.use_retrieval = false;
  const auto c = harness::run_experiment(bare);
  EXPECT_DOUBLE_EQ(c.main.avg_pairs, 0.0);
  EXPECT_LT(c.main.avg_input_tokens, a.main.avg_input_tokens);

  auto missing = with_index;
  missing.index_path = dir_ / "nope.srix";
  EXPECT_SELRAG_ERROR(harness::run_experiment(missing), ErrorCode::index_missing);
}
