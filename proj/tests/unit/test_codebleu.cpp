#include "corpus.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

#include "selrag/metrics.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace selrag;
using metrics::CodeBleuConfig;

namespace {

const std::string kRef = "int add(int a, int b) { int s = a + b; return s; }";
const std::string kCand = "int add(int a, int b) { int s = a - b; return s; }";

std::vector<oracle::Edge> oracle_flow(const std::string& code) {
  return oracle::java_dataflow(ast::parse_source(code, "java"));
}

} // namespace

TEST(CodeBleu, IdenticalCodeScoresOne) {
  const auto cfg = CodeBleuConfig::for_language("java");
  for (const auto& p : testdata::synthetic_pairs(20, 1)) {
    const auto s = metrics::codebleu(p.fixed_code, p.fixed_code, "java", cfg);
    EXPECT_DOUBLE_EQ(s.score, 1.0) << p.fixed_code;
    EXPECT_TRUE(s.flags.empty());
  }
}

TEST(CodeBleu, ComponentsMatchOracles) {
  const auto cfg = CodeBleuConfig::for_language("java");
  const auto keywords = metrics::builtin_keywords("java");
  const std::set<std::string> kw(keywords.begin(), keywords.end());
  const auto weight = [&](const std::string& t) { return kw.contains(t) ? 1.0 : 0.2; };
  const auto pairs = testdata::synthetic_pairs(60, 12);
  for (const auto& p : pairs) {
    const auto s = metrics::codebleu(p.buggy_code, p.fixed_code, "java", cfg);
    const auto ct = metrics::tokenize_code(p.buggy_code);
    const auto rt = metrics::tokenize_code(p.fixed_code);
    const double bleu = oracle::bleu(ct, rt);
    const double wbleu = oracle::bleu(ct, rt, {0.25, 0.25, 0.25, 0.25}, weight);
    const double astm = oracle::subtree_match(ast::parse_source(p.buggy_code, "java"), ast::parse_source(p.fixed_code, "java"));
    const double df = oracle::dataflow_match(oracle_flow(p.buggy_code), oracle_flow(p.fixed_code));
    EXPECT_NEAR(s.bleu, bleu, 1e-9);
    EXPECT_NEAR(s.weighted_bleu, wbleu, 1e-9);
    EXPECT_NEAR(s.ast_match, astm, 1e-12);
    EXPECT_NEAR(s.df_match, df, 1e-12);
    EXPECT_NEAR(s.score, 0.25 * (bleu + wbleu + astm + df), 1e-9);
  }
}

TEST(CodeBleu, ShortFixtureIsMeanOfComponents) {
  const auto cfg = CodeBleuConfig::for_language("java");
  const std::string cand = "a b c d";
  const std::string ref = "a b c d e";
  const auto s = metrics::codebleu(cand, ref, "java", cfg);
  const auto ct = metrics::tokenize_code(cand);
  const auto rt = metrics::tokenize_code(ref);
  const double astm = oracle::subtree_match(ast::parse_source(cand, "java"), ast::parse_source(ref, "java"));
  const double df = oracle::dataflow_match(oracle_flow(cand), oracle_flow(ref));
  EXPECT_NEAR(s.bleu, std::exp(-0.25), 1e-12);
  EXPECT_NEAR(s.weighted_bleu, oracle::bleu(ct, rt, {0.25, 0.25, 0.25, 0.25}, [](const std::string&) { return 0.2; }),
              1e-12);
  EXPECT_NEAR(s.score, 0.25 * (std::exp(-0.25) + s.weighted_bleu + astm + df), 1e-9);
}

TEST(CodeBleu, AlphaOneIsPlainBleu) {
  auto cfg = CodeBleuConfig::for_language("java");
  cfg.set_weights("1,0,0,0");
  for (const auto& p : testdata::synthetic_pairs(30, 2)) {
    EXPECT_NEAR(metrics::codebleu(p.buggy_code, p.fixed_code, "java", cfg).score,
                metrics::sentence_bleu4(p.buggy_code, p.fixed_code), 1e-12);
  }
}

TEST(CodeBleu, BoundsAndWeights) {
  auto cfg = CodeBleuConfig::for_language("java");
  cfg.set_weights("0.1,0.1,0.4,0.4");
  const auto s = metrics::codebleu(kCand, kRef, "java", cfg);
  EXPECT_NEAR(s.score, 0.1 * s.bleu + 0.1 * s.weighted_bleu + 0.4 * s.ast_match + 0.4 * s.df_match, 1e-12);
  EXPECT_GT(s.score, 0.0);
  EXPECT_LT(s.score, 1.0);
  // Operator tokens are part of the shape; data flow is unchanged.
  EXPECT_LT(s.ast_match, 1.0);
  EXPECT_GT(s.ast_match, 0.0);
  EXPECT_DOUBLE_EQ(s.df_match, 1.0);
}

TEST(CodeBleu, WeightParsing) {
  CodeBleuConfig cfg;
  EXPECT_SELRAG_ERROR(cfg.set_weights("0.5,0.5"), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(cfg.set_weights("0.5,0.5,0.5,0.5"), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(cfg.set_weights("1,0,0,x"), ErrorCode::invalid_config);
  EXPECT_SELRAG_ERROR(cfg.set_weights("1.2,-0.2,0,0"), ErrorCode::invalid_config);
  cfg.set_weights(" 0.7, 0.1,0.1 ,0.1");
  EXPECT_DOUBLE_EQ(cfg.alpha, 0.7);
}

TEST(CodeBleu, FailedComponentsAreFlagged) {
  const auto cfg = CodeBleuConfig::for_language("java");
  const auto empty = metrics::codebleu("", kRef, "java", cfg);
  EXPECT_EQ(empty.bleu, 0.0);
  EXPECT_NE(std::find(empty.flags.begin(), empty.flags.end(), "bleu:EmptySequence"), empty.flags.end());
  EXPECT_NE(std::find(empty.flags.begin(), empty.flags.end(), "ast_match:ParseFailure"), empty.flags.end());
  EXPECT_GE(empty.score, 0.0);
  EXPECT_SELRAG_ERROR(metrics::codebleu(kCand, kRef, "cobol", cfg), ErrorCode::unsupported_language);
  auto bad = cfg;
  bad.alpha = 0.9;
  EXPECT_SELRAG_ERROR(metrics::codebleu(kCand, kRef, "java", bad), ErrorCode::invalid_config);
}

TEST(Evaluate, AveragesAndKeepsOrder) {
  const std::vector<metrics::EvalSample> samples = {
      {"s1", kRef, kRef},
      {"s2", kCand, kRef},
      {"s3", "", kRef},
  };
  const auto report = metrics::evaluate(samples, "java", CodeBleuConfig::for_language("java"));
  ASSERT_EQ(report.samples.size(), 3U);
  EXPECT_EQ(report.samples[0].id, "s1");
  EXPECT_EQ(report.samples[2].id, "s3");
  EXPECT_TRUE(report.samples[0].exact);
  EXPECT_FALSE(report.samples[1].exact);
  EXPECT_DOUBLE_EQ(report.em_rate, 1.0 / 3.0);
  double bleu = 0.0;
  double code = 0.0;
  for (const auto& r : report.samples) {
    bleu += r.bleu4;
    code += r.code.score;
  }
  EXPECT_DOUBLE_EQ(report.bleu4, bleu / 3.0);
  EXPECT_DOUBLE_EQ(report.codebleu, code / 3.0);
  EXPECT_DOUBLE_EQ(report.samples[1].bleu4, metrics::sentence_bleu4(kCand, kRef));
}

TEST(Evaluate, ParallelEqualsSerial) {
  std::vector<metrics::EvalSample> samples;
  for (const auto& p : testdata::synthetic_pairs(64, 31)) {
    samples.push_back({p.id, p.buggy_code, p.fixed_code});
  }
  const auto cfg = CodeBleuConfig::for_language("java");
  const auto serial = metrics::evaluate(samples, "java", cfg, 1);
  const auto parallel = metrics::evaluate(samples, "java", cfg, 8);
  std::ostringstream a;
  std::ostringstream b;
  metrics::write_report_json(serial, a);
  metrics::write_report_json(parallel, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Evaluate, EmptyInputGivesZeroAverages) {
  const auto report = metrics::evaluate({}, "java", CodeBleuConfig::for_language("java"), 4);
  EXPECT_TRUE(report.samples.empty());
  EXPECT_EQ(report.em_rate, 0.0);
}

TEST(Reports, JsonAndCsv) {
  const std::vector<metrics::EvalSample> samples = {{"a,1", kRef, kRef}, {"b", "", kRef}};
  const auto report = metrics::evaluate(samples, "java", CodeBleuConfig::for_language("java"));
  std::ostringstream json;
  metrics::write_report_json(report, json);
  const auto doc = nlohmann::json::parse(json.str());
  EXPECT_EQ(doc["num_samples"], 2);
  EXPECT_DOUBLE_EQ(doc["em_rate"].get<double>(), 0.5);
  EXPECT_EQ(doc["samples"][0]["id"], "a,1");
  EXPECT_EQ(doc["samples"][0]["exact_match"], true);
  EXPECT_TRUE(doc["samples"][1]["flags"].is_array());

  std::ostringstream csv;
  metrics::write_samples_csv(report, csv);
  std::istringstream lines(csv.str());
  std::string header;
  std::string row1;
  std::string row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  EXPECT_EQ(header, "id,exact_match,bleu4,codebleu,bleu,weighted_bleu,ast_match,df_match,flags");
  EXPECT_TRUE(row1.starts_with("\"a,1\",1,1,1,"));
  EXPECT_TRUE(row2.starts_with("b,0,0,"));
  EXPECT_NE(row2.find("bleu:EmptySequence;"), std::string::npos);
}
