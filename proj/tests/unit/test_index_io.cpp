#include "corpus.hpp"
#include "expect_error.hpp"

#include "selrag/retrieval.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace selrag;
using retrieval::RetrievalMode;

namespace {

retrieval::CodebaseIndex sample_index(RetrievalMode mode = RetrievalMode::hybrid, std::size_t n = 12) {
  const auto embedder = embed::make_embedder(embed::EmbedderSpec::baseline(64));
  auto pairs = testdata::synthetic_pairs(n, 21);
  pairs.push_back({"unicode", "String s = \"h\xC3\xA9llo\";", "String s = \"hello\";", "java"});
  return retrieval::build_index(pairs, *embedder, mode).index;
}

void expect_same(const retrieval::CodebaseIndex& a, const retrieval::CodebaseIndex& b) {
  EXPECT_TRUE(a.embedder_spec().same_model(b.embedder_spec()));
  EXPECT_EQ(a.mode(), b.mode());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.entries()[i];
    const auto& y = b.entries()[i];
    EXPECT_EQ(x.pair, y.pair);
    EXPECT_EQ(x.semantic, y.semantic);
    EXPECT_EQ(x.structural, y.structural);
    EXPECT_EQ(x.hybrid, y.hybrid);
  }
}

class TempDir {
public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() / (std::string("selrag_index_") + info->name());
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

std::uint32_t read_u32(const std::string& bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

} // namespace

TEST(IndexIo, RoundTripIsExact) {
  for (auto mode : {RetrievalMode::hybrid, RetrievalMode::semantic_only, RetrievalMode::structural_only}) {
    const auto index = sample_index(mode);
    const auto bytes = retrieval::serialize_index(index);
    const auto back = retrieval::deserialize_index(bytes);
    expect_same(index, back);
    EXPECT_EQ(retrieval::serialize_index(back), bytes);
  }
}

TEST(IndexIo, SaveAndLoad) {
  TempDir dir;
  const auto index = sample_index();
  const auto file = dir.path() / "codebase.srix";
  retrieval::save_index(index, file);
  expect_same(index, retrieval::load_index(file));
}

TEST(IndexIo, RemoteSpecSurvives) {
  const embed::FeatureVector v(std::vector<double>{0.5, 0.25});
  auto spec = embed::EmbedderSpec::remote("http://embed.local:9000", 2, 512);
  const retrieval::CodebaseIndex index(spec, RetrievalMode::semantic_only,
                                       {{{"a", "x", "y", "c"}, v, v, v}});
  const auto back = retrieval::deserialize_index(retrieval::serialize_index(index));
  EXPECT_EQ(back.embedder_spec().kind, embed::EmbedderKind::remote_service);
  EXPECT_EQ(back.embedder_spec().endpoint, "http://embed.local:9000");
  EXPECT_EQ(back.embedder_spec().max_input_tokens, 512U);
  EXPECT_EQ(back.mode(), RetrievalMode::semantic_only);
}

TEST(IndexIo, BuildsAreByteIdentical) {
  EXPECT_EQ(retrieval::serialize_index(sample_index()), retrieval::serialize_index(sample_index()));
}

TEST(IndexIo, HeaderLayout) {
  const auto index = sample_index(RetrievalMode::structural_only, 3);
  const auto bytes = retrieval::serialize_index(index);
  EXPECT_EQ(bytes.substr(0, 4), "SRIX");
  EXPECT_EQ(read_u32(bytes, 4), retrieval::kIndexFormatVersion);
  EXPECT_EQ(bytes[8], 0);              // baseline embedder
  EXPECT_EQ(read_u32(bytes, 9), 64U);  // dim
  EXPECT_EQ(read_u32(bytes, 13), 1024U);
  EXPECT_EQ(read_u32(bytes, 17), 0U);  // empty endpoint
  EXPECT_EQ(bytes[21], 2);             // structural-only
  EXPECT_EQ(read_u32(bytes, 22), 4U);  // entries
  // First entry id follows as a length-prefixed string.
  const auto id_len = read_u32(bytes, 26);
  EXPECT_EQ(bytes.substr(30, id_len), index.entries()[0].pair.id);
}

TEST(IndexIo, RejectsCorruptInput) {
  const auto bytes = retrieval::serialize_index(sample_index(RetrievalMode::hybrid, 3));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_SELRAG_ERROR(retrieval::deserialize_index(bad_magic), ErrorCode::invalid_format);

  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_SELRAG_ERROR(retrieval::deserialize_index(bad_version), ErrorCode::invalid_format);

  auto bad_mode = bytes;
  bad_mode[21] = 7;
  EXPECT_SELRAG_ERROR(retrieval::deserialize_index(bad_mode), ErrorCode::invalid_format);

  auto huge_dim = bytes;
  huge_dim[12] = '\x7f';
  EXPECT_SELRAG_ERROR(retrieval::deserialize_index(huge_dim), ErrorCode::invalid_format);

  EXPECT_SELRAG_ERROR(retrieval::deserialize_index(bytes + "x"), ErrorCode::invalid_format);
  EXPECT_SELRAG_ERROR(retrieval::deserialize_index(""), ErrorCode::invalid_format);
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, std::size_t{25}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_SELRAG_ERROR(retrieval::deserialize_index(bytes.substr(0, cut)), ErrorCode::invalid_format);
  }
}

TEST(IndexIo, RandomCorruptionNeverCrashes) {
  const auto bytes = retrieval::serialize_index(sample_index(RetrievalMode::hybrid, 2));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 300; ++i) {
    auto mutated = bytes;
    for (int k = 0; k < 3; ++k) {
      mutated[pos(rng)] = static_cast<char>(byte(rng));
    }
    try {
      retrieval::deserialize_index(mutated);
    } catch (const Error&) {
    }
  }
}

TEST(IndexIo, MissingFile) {
  TempDir dir;
  EXPECT_SELRAG_ERROR(retrieval::load_index(dir.path() / "absent.srix"), ErrorCode::index_missing);
  EXPECT_SELRAG_ERROR(retrieval::load_index(dir.path()), ErrorCode::index_missing);
}

TEST(IndexIo, LoadedIndexRetrievesLikeTheOriginal) {
  TempDir dir;
  const auto index = sample_index();
  retrieval::save_index(index, dir.path() / "i.srix");
  const auto loaded = retrieval::load_index(dir.path() / "i.srix");
  const auto embedder = embed::make_embedder(loaded.embedder_spec());
  const retrieval::Retriever a(index, embedder);
  const retrieval::Retriever b(loaded, embedder);
  const std::string target = "int add(int a, int b) { return a - b; }";
  EXPECT_EQ(a.rank(a.query_vector(target, "java")), b.rank(b.query_vector(target, "java")));
}
