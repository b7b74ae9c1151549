#include "selrag/error.hpp"
#include "selrag/retrieval.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace selrag::retrieval {

namespace {

constexpr std::string_view kMagic = "SRIX";

class Writer {
public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
      out_.push_back(static_cast<char>((v >> shift) & 0xffu));
    }
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void vec(const embed::FeatureVector& v) {
    for (double x : v.values()) {
      u32(std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    }
    return v;
  }
  std::string str() {
    const auto len = u32();
    need(len);
    std::string s(in_.substr(pos_, len));
    pos_ += len;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  embed::FeatureVector vec(std::size_t dim) {
    need(dim * 4);
    std::vector<double> values(dim);
    for (auto& v : values) {
      v = static_cast<double>(std::bit_cast<float>(u32()));
    }
    return embed::FeatureVector(std::move(values));
  }
  bool done() const noexcept { return pos_ == in_.size(); }

private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::invalid_format, "index file is truncated");
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint8_t encode_mode(RetrievalMode mode) {
  switch (mode) {
  case RetrievalMode::hybrid: return 0;
  case RetrievalMode::semantic_only: return 1;
  case RetrievalMode::structural_only: return 2;
  }
  return 0;
}

RetrievalMode decode_mode(std::uint8_t v) {
  switch (v) {
  case 0: return RetrievalMode::hybrid;
  case 1: return RetrievalMode::semantic_only;
  case 2: return RetrievalMode::structural_only;
  default: throw Error(ErrorCode::invalid_format, "unknown retrieval mode tag " + std::to_string(v));
  }
}

} // namespace

std::string serialize_index(const CodebaseIndex& index) {
  const auto& spec = index.embedder_spec();
  Writer w;
  w.raw(kMagic);
  w.u32(kIndexFormatVersion);
  w.u8(spec.kind == embed::EmbedderKind::remote_service ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(spec.dim));
  w.u32(static_cast<std::uint32_t>(spec.max_input_tokens));
  w.str(spec.endpoint.value_or(""));
  w.u8(encode_mode(index.mode()));
  w.u32(static_cast<std::uint32_t>(index.size()));
  for (const auto& e : index.entries()) {
    w.str(e.pair.id);
    w.str(e.pair.buggy_code);
    w.str(e.pair.fixed_code);
    w.str(e.pair.language);
    w.vec(e.semantic);
    w.vec(e.structural);
    w.vec(e.hybrid);
  }
  return w.take();
}

CodebaseIndex deserialize_index(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::invalid_format, "not an index file (bad magic)");
  }
  if (const auto version = r.u32(); version != kIndexFormatVersion) {
    throw Error(ErrorCode::invalid_format, "unsupported index format version " + std::to_string(version));
  }
  embed::EmbedderSpec spec;
  const auto kind = r.u8();
  if (kind > 1) {
    throw Error(ErrorCode::invalid_format, "unknown embedder kind tag " + std::to_string(kind));
  }
  spec.kind = kind == 1 ? embed::EmbedderKind::remote_service : embed::EmbedderKind::deterministic_baseline;
  spec.dim = r.u32();
  spec.max_input_tokens = r.u32();
  if (auto endpoint = r.str(); spec.kind == embed::EmbedderKind::remote_service) {
    spec.endpoint = std::move(endpoint);
  }
  if (spec.dim == 0) {
    throw Error(ErrorCode::invalid_format, "index declares dimension 0");
  }
  const auto mode = decode_mode(r.u8());
  const auto count = r.u32();
  std::vector<IndexEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    BugFixPair pair;
    pair.id = r.str();
    pair.buggy_code = r.str();
    pair.fixed_code = r.str();
    pair.language = r.str();
    auto semantic = r.vec(spec.dim);
    auto structural = r.vec(spec.dim);
    auto hybrid = r.vec(spec.dim);
    entries.push_back({std::move(pair), std::move(semantic), std::move(structural), std::move(hybrid)});
  }
  if (!r.done()) {
    throw Error(ErrorCode::invalid_format, "trailing bytes after index entries");
  }
  return CodebaseIndex(std::move(spec), mode, std::move(entries));
}

void save_index(const CodebaseIndex& index, const std::filesystem::path& path) {
  const std::string bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::invalid_argument, "cannot write index to " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::invalid_argument, "failed writing index to " + path.string());
  }
}

CodebaseIndex load_index(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::index_missing, "no index file at " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::index_missing, "cannot open index " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_index(buffer.str());
}

} // namespace selrag::retrieval
