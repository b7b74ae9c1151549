#include "corpus.hpp"
#include "expect_error.hpp"

#include "selrag/generation.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

using namespace selrag;
using gen::RawCompletion;

namespace {

const prompt::WhitespaceTokenizer kTokens;

gen::GenerationRequest request(std::string target, std::size_t k = 1) {
  gen::GenerationRequest r;
  r.prompt = prompt::assemble_prompt({}, target, kTokens);
  r.num_candidates = k;
  return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("selrag_gen_" + name);
  std::ofstream(path) << content;
  return path;
}

struct Fixture {
  std::vector<retrieval::BugFixPair> codebase = testdata::synthetic_pairs(40, 10);
  std::shared_ptr<const embed::Embedder> embedder = embed::make_embedder(embed::EmbedderSpec::baseline());
  retrieval::CodebaseIndex index =
      retrieval::build_index(codebase, *embedder, retrieval::RetrievalMode::hybrid).index;
  retrieval::Retriever retriever{index, embedder};
};

} // namespace

TEST(Postprocess, CutsAtStopMarker) {
  EXPECT_EQ(gen::postprocess_completion("  return x; [BUG] more", "[BUG]"), "return x;");
  EXPECT_EQ(gen::postprocess_completion("return x;\n", "[BUG]"), "return x;");
  EXPECT_EQ(gen::postprocess_completion("[BUG] x", "[BUG]"), "");
  EXPECT_EQ(gen::postprocess_completion("a [BUG] b [BUG] c", "[BUG]"), "a");
  EXPECT_EQ(gen::postprocess_completion("a [END] b", "[END]"), "a");
}

TEST(Generate, RanksAndCaps) {
  const gen::MockBackend backend([](const gen::GenerationRequest&) {
    return std::vector<RawCompletion>{{"a", 0.9}, {" b [BUG] junk", 0.5}, {"c", std::nullopt}};
  });
  const auto two = gen::generate(request("int x;", 2), backend);
  ASSERT_EQ(two.size(), 2U);
  EXPECT_EQ(two[0], (gen::PatchCandidate{"a", 1, 0.9}));
  EXPECT_EQ(two[1], (gen::PatchCandidate{"b", 2, 0.5}));
  const auto many = gen::generate(request("int x;", 10), backend);
  EXPECT_EQ(many.size(), 3U);
  EXPECT_EQ(many[2].rank, 3);
  EXPECT_FALSE(many[2].backend_score.has_value());
}

TEST(Generate, SeesTheRequest) {
  gen::GenerationRequest seen;
  const gen::MockBackend backend([&](const gen::GenerationRequest& r) {
    seen = r;
    return std::vector<RawCompletion>{{"ok", std::nullopt}};
  });
  auto r = request("int y;", 3);
  r.max_new_tokens = 77;
  gen::generate(r, backend);
  EXPECT_EQ(seen.prompt.text, "[BUG] int y; [FIX]");
  EXPECT_EQ(seen.num_candidates, 3U);
  EXPECT_EQ(seen.max_new_tokens, 77U);
}

TEST(Generate, ValidatesRequest) {
  const auto backend = gen::MockBackend::echo("x");
  EXPECT_SELRAG_ERROR(gen::generate(request("int x;", 0), *backend), ErrorCode::invalid_argument);
  auto r = request("int x;");
  r.max_new_tokens = 0;
  EXPECT_SELRAG_ERROR(gen::generate(r, *backend), ErrorCode::invalid_argument);
  EXPECT_SELRAG_ERROR(gen::MockBackend(nullptr), ErrorCode::invalid_argument);
}

TEST(FixtureBackend, LoadsAndAnswersInOrder) {
  std::string lines;
  nlohmann::json row;
  row["target"] = "int f() { return 1; }\n";
  row["candidates"] = nlohmann::json::array();
  for (int i = 0; i < 10; ++i) {
    row["candidates"].push_back({{"text", "cand" + std::to_string(i)}, {"score", -i}});
  }
  lines += row.dump() + "\n\n";
  lines += R"({"target": "int g() {}", "candidates": [{"text": "int g() { return; }"}]})" "\n";
  const auto path = temp_file("fixture.jsonl", lines);
  const auto backend = gen::FixtureBackend::load(path);
  const auto out = gen::generate(request("int f() { return 1; }", 10), *backend);
  ASSERT_EQ(out.size(), 10U);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(out[static_cast<std::size_t>(i)].text, "cand" + std::to_string(i));
    EXPECT_EQ(out[static_cast<std::size_t>(i)].rank, i + 1);
  }
  EXPECT_EQ(gen::generate(request("int g() {}"), *backend)[0].text, "int g() { return; }");
  EXPECT_SELRAG_ERROR(gen::generate(request("int h;"), *backend), ErrorCode::backend_contract);
  std::filesystem::remove(path);
}

TEST(FixtureBackend, LoadErrors) {
  EXPECT_SELRAG_ERROR(gen::FixtureBackend::load("/nonexistent/f.jsonl"), ErrorCode::file_not_found);
  for (const char* bad : {"{not json", R"({"candidates": []})", R"({"target": "x"})",
                          R"({"target": "x", "candidates": [{"score": 1}]})"}) {
    SCOPED_TRACE(bad);
    const auto path = temp_file("bad.jsonl", std::string(bad) + "\n");
    EXPECT_SELRAG_ERROR(gen::FixtureBackend::load(path), ErrorCode::invalid_format);
    std::filesystem::remove(path);
  }
}

TEST(HttpBackend, RejectsBadEndpoint) {
  EXPECT_SELRAG_ERROR(gen::HttpBackend("ftp://x"), ErrorCode::invalid_config);
}

TEST(RepairOne, EndToEndWithMock) {
  Fixture f;
  const auto& target = f.codebase[3];
  const auto backend = gen::MockBackend::echo(target.fixed_code + " [BUG] trailing");
  const auto result =
      gen::repair_one(target.buggy_code, "java", f.retriever, {0.5, 512, 10}, kTokens, *backend, {2, 128, "[BUG]"});
  ASSERT_FALSE(result.context.selected.empty());
  EXPECT_EQ(result.context.selected[0].pair.id, target.id);
  EXPECT_EQ(result.prompt.pairs_included, result.context.selected.size());
  EXPECT_LE(result.prompt.token_count, 512U);
  ASSERT_EQ(result.candidates.size(), 1U);
  EXPECT_EQ(result.candidates[0].text, target.fixed_code);

  const auto audit = nlohmann::json::parse(gen::audit_json(result));
  EXPECT_EQ(audit["retrieved"][0]["id"], target.id);
  EXPECT_EQ(audit["prompt_tokens"], result.prompt.token_count);
  EXPECT_EQ(audit["candidates"][0]["rank"], 1);
  EXPECT_TRUE(audit["candidates"][0]["score"].is_null());
  EXPECT_EQ(audit["candidates_considered"], f.codebase.size());
}

TEST(RepairOne, ErrorsCarryStage) {
  Fixture f;
  const auto echo = gen::MockBackend::echo("x");
  try {
    gen::repair_one("int x = [BUG];", "java", f.retriever, {}, kTokens, *echo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::marker_collision);
    EXPECT_EQ(e.stage(), "retrieve");
  }
  const gen::MockBackend failing([](const gen::GenerationRequest&) -> std::vector<RawCompletion> {
    throw Error(ErrorCode::backend_unavailable, "down");
  });
  try {
    gen::repair_one(f.codebase[0].buggy_code, "java", f.retriever, {}, kTokens, failing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_unavailable);
    EXPECT_EQ(e.stage(), "generate");
    EXPECT_EQ(e.detail(), "down");
    EXPECT_NE(std::string(e.what()).find("[generate]"), std::string::npos);
  }
}

TEST(RepairOne, MissingIndexFile) {
  const auto echo = gen::MockBackend::echo("x");
  try {
    gen::repair_one("int x;", "java", "/nonexistent/index.srix", embed::make_embedder(embed::EmbedderSpec::baseline()),
                    {}, kTokens, *echo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::index_missing);
    EXPECT_EQ(e.stage(), "index");
  }
}

TEST(RepairOne, Deterministic) {
  Fixture f;
  const auto echo = gen::MockBackend::echo("int z;");
  const auto target = testdata::synthetic_pairs(1, 555, "q")[0].buggy_code;
  const auto a = gen::repair_one(target, "java", f.retriever, {0.3, 256, 4}, kTokens, *echo);
  const auto b = gen::repair_one(target, "java", f.retriever, {0.3, 256, 4}, kTokens, *echo);
  EXPECT_EQ(gen::audit_json(a), gen::audit_json(b));
}
