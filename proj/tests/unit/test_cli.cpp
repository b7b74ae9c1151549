#include "corpus.hpp"

#include "selrag/experiment.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Output {
  int status = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("selrag_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ostringstream cb;
    selrag::harness::write_pairs_jsonl(selrag::testdata::synthetic_pairs(40, 1, "c"), cb);
    write("codebase.jsonl", cb.str());
    std::ostringstream ds;
    selrag::harness::write_pairs_jsonl(selrag::testdata::synthetic_pairs(8, 2, "d"), ds);
    write("dataset.jsonl", ds.str());
    write("target.java", selrag::testdata::synthetic_pairs(1, 1, "c")[0].buggy_code);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name, std::ios::binary) << content;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Output run(const std::string& args) const {
    const auto err_file = dir_ / "stderr.txt";
    const std::string cmd =
        "cd '" + dir_.string() + "' && env -u SELRAG_GEN_ENDPOINT -u SELRAG_EMBED_ENDPOINT '" SELRAG_CLI "' " + args +
        " 2>'" + err_file.string() + "'";
    Output result;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
      return result;
    }
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) {
      result.out.append(buf, n);
    }
    const int status = pclose(pipe);
    result.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.err = read("stderr.txt");
    return result;
  }

  fs::path dir_;
};

} // namespace

TEST_F(CliTest, HelpListsSubcommands) {
  const auto r = run("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"ast", "index", "retrieve", "prompt", "dataset", "eval", "run", "sweep", "repair"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(CliTest, AstDump) {
  write("x.java", "int x = 1;");
  const auto r = run("ast dump --lang java --in x.java");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto tokens = json::parse(r.out);
  ASSERT_TRUE(tokens.is_array());
  EXPECT_EQ(tokens.front(), "AST#program#Left");
  EXPECT_EQ(tokens.back(), "AST#program#Right");
  EXPECT_EQ(run("ast dump --lang cobol --in x.java").status, 1);
}

TEST_F(CliTest, IndexRetrievePromptRepair) {
  auto r = run("index build --codebase codebase.jsonl --out cb.srix");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "cb.srix"));

  r = run("retrieve --index cb.srix --in target.java --json -t 0.5 --budget 256 --max-pairs 3");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ctx = json::parse(r.out);
  EXPECT_EQ(ctx["selected"][0]["id"], "c0000");
  EXPECT_LE(ctx["selected"].size(), 3U);
  EXPECT_LE(ctx["prompt_tokens"].get<int>(), 256);
  EXPECT_EQ(ctx["candidates_considered"], 40);

  r = run("prompt build --index cb.srix --in target.java -t 0.99 --max-pairs 1");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(r.out.starts_with("[BUG] "));
  EXPECT_NE(r.out.find(" [FIX]\n"), std::string::npos);

  r = run("repair --index cb.srix --in target.java --backend constant --text 'int fixed;' -k 2 -t 0.5");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto audit = json::parse(r.out);
  EXPECT_EQ(audit["candidates"][0]["text"], "int fixed;");
  EXPECT_EQ(audit["retrieved"][0]["id"], "c0000");
}

TEST_F(CliTest, RepairReportsMissingIndexWithStage) {
  const auto r = run("repair --index nope.srix --in target.java --backend constant --text x");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("[index] IndexMissing"), std::string::npos) << r.err;
}

TEST_F(CliTest, RepairNeedsAnEndpoint) {
  run("index build --codebase codebase.jsonl --out cb.srix");
  const auto r = run("repair --index cb.srix --in target.java");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("SELRAG_GEN_ENDPOINT"), std::string::npos) << r.err;
}

TEST_F(CliTest, DatasetSplitAndExport) {
  std::ostringstream all;
  selrag::harness::write_pairs_jsonl(selrag::testdata::synthetic_pairs(100, 3), all);
  write("all.jsonl", all.str());
  auto r = run("dataset split --in all.jsonl -o parts --codebase-size 10 --seed 5");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("train 72 valid 9 test 9 codebase 10"), std::string::npos) << r.out;
  const auto first = read("parts/test.jsonl");
  run("dataset split --in all.jsonl -o parts2 --codebase-size 10 --seed 5");
  EXPECT_EQ(first, read("parts2/test.jsonl"));

  run("index build --codebase parts/codebase.jsonl --out cb.srix");
  r = run("dataset export --pairs parts/train.jsonl --out train.jsonl --index cb.srix -t 0.5");
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream rows(read("train.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(rows, line)) {
    const auto row = json::parse(line);
    EXPECT_TRUE(row["prompt"].get<std::string>().ends_with("[FIX]"));
    EXPECT_TRUE(row.contains("completion"));
    ++n;
  }
  EXPECT_EQ(n, 72U);
}

TEST_F(CliTest, Eval) {
  write("pred.jsonl", "{\"id\": \"a\", \"candidate\": \"int f() { return 1; }\"}\n"
                      "{\"id\": \"b\", \"candidate\": \"int g() { return 0; }\"}\n");
  write("ref.jsonl", "{\"id\": \"a\", \"fixed_code\": \"int f() {\\n  return 1;\\n}\"}\n"
                     "{\"id\": \"b\", \"fixed_code\": \"int g() { return 2; }\"}\n"
                     "{\"id\": \"c\", \"fixed_code\": \"int h() { return 3; }\"}\n");
  const auto r = run("eval --pred pred.jsonl --ref ref.jsonl -o scores");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto summary = json::parse(r.out);
  EXPECT_DOUBLE_EQ(summary["em_rate"].get<double>(), 1.0 / 3.0);
  EXPECT_EQ(summary["num_samples"], 3);
  EXPECT_EQ(summary["missing_predictions"], 1);
  EXPECT_TRUE(fs::exists(dir_ / "scores/report.json"));
  EXPECT_TRUE(fs::exists(dir_ / "scores/samples.csv"));
  EXPECT_EQ(run("eval --pred pred.jsonl --ref ref.jsonl --codebleu-weights 1,1,1,1").status, 1);
}

TEST_F(CliTest, RunAndSweep) {
  auto r = run("run --dataset dataset.jsonl --codebase codebase.jsonl --set threshold=0.5 -o out");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto report = json::parse(read("out/report.json"));
  EXPECT_TRUE(report.is_object());
  EXPECT_NE(r.out.find("EM 1"), std::string::npos) << r.out;

  write("exp.conf", "dataset = dataset.jsonl\ncodebase = codebase.jsonl\nbackend = constant\n"
                    "backend_text = int nothing;\n");
  r = run("sweep -c exp.conf --thresholds none,0.5,0.9 -o sw");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto md = read("sw/sweep.md");
  EXPECT_NE(md.find("| No Threshold |"), std::string::npos);
  EXPECT_NE(md.find("| 0.9 |"), std::string::npos);
  const auto sweep = json::parse(read("sw/sweep.json"));
  EXPECT_TRUE(sweep.is_object() || sweep.is_array());

  r = run("run --dataset dataset.jsonl --codebase codebase.jsonl --set bogus=1");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("InvalidConfig"), std::string::npos) << r.err;
}

TEST_F(CliTest, BadArgumentsAreRejected) {
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("retrieve --in target.java").status, 0);
  run("index build --codebase codebase.jsonl --out cb.srix");
  EXPECT_NE(run("retrieve --index cb.srix --in target.java -t 1.5").status, 0);
}
