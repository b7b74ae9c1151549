#include "selrag/embedding.hpp"

#include "http_util.hpp"
#include "selrag/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <semaphore>
#include <sstream>
#include <thread>

namespace selrag::embed {

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorCode::invalid_argument, "feature vector must have a positive dimension");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::invalid_argument, "feature vector entries must be finite");
    }
  }
}

double FeatureVector::norm() const noexcept {
  double sum = 0.0;
  for (double v : values_) {
    sum += v * v;
  }
  return std::sqrt(sum);
}

bool FeatureVector::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

FeatureVector FeatureVector::to_float_precision() const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(),
                 [](double v) { return static_cast<double>(static_cast<float>(v)); });
  return FeatureVector(std::move(out));
}

FeatureVector FeatureVector::scaled(double factor) const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [factor](double v) { return v * factor; });
  return FeatureVector(std::move(out));
}

std::string_view to_string(EmbedderKind kind) noexcept {
  switch (kind) {
  case EmbedderKind::remote_service: return "remote-service";
  case EmbedderKind::deterministic_baseline: return "deterministic-baseline";
  }
  return "unknown";
}

EmbedderSpec EmbedderSpec::baseline(std::size_t dim, std::size_t max_input_tokens) {
  EmbedderSpec spec;
  spec.kind = EmbedderKind::deterministic_baseline;
  spec.dim = dim;
  spec.max_input_tokens = max_input_tokens;
  return spec;
}

EmbedderSpec EmbedderSpec::remote(std::string endpoint, std::size_t dim, std::size_t max_input_tokens) {
  EmbedderSpec spec;
  spec.kind = EmbedderKind::remote_service;
  spec.endpoint = std::move(endpoint);
  spec.dim = dim;
  spec.max_input_tokens = max_input_tokens;
  return spec;
}

void EmbedderSpec::validate() const {
  if (dim == 0 || max_input_tokens == 0) {
    throw Error(ErrorCode::invalid_config, "embedder dim and max_input_tokens must be positive");
  }
  if ((kind == EmbedderKind::remote_service) != endpoint.has_value()) {
    throw Error(ErrorCode::invalid_config, "embedder endpoint must be set exactly for the remote kind");
  }
  if (kind == EmbedderKind::remote_service && max_in_flight == 0) {
    throw Error(ErrorCode::invalid_config, "max_in_flight must be positive");
  }
}

FeatureVector Embedder::embed_text(std::string_view text) const {
  std::string owned(text);
  auto out = embed_texts(std::span<const std::string>(&owned, 1));
  return std::move(out.front());
}

// --- baseline ----------------------------------------------------------------

namespace {

// FNV-1a over raw bytes: identical on every platform and compiler.
std::uint32_t fnv1a(std::string_view bytes) noexcept {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

} // namespace

BaselineEmbedder::BaselineEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

FeatureVector BaselineEmbedder::embed_one(std::string_view text) const {
  std::vector<double> counts(spec_.dim, 0.0);
  if (text.size() < 3) {
    if (!text.empty()) {
      counts[fnv1a(text) % spec_.dim] += 1.0;
    }
  } else {
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
      counts[fnv1a(text.substr(i, 3)) % spec_.dim] += 1.0;
    }
  }
  double norm = 0.0;
  for (double c : counts) {
    norm += c * c;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& c : counts) {
      c /= norm;
    }
  }
  return FeatureVector(std::move(counts));
}

std::vector<FeatureVector> BaselineEmbedder::embed_texts(std::span<const std::string> texts) const {
  std::vector<FeatureVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    out.push_back(embed_one(text));
  }
  return out;
}

// --- remote ------------------------------------------------------------------

struct RemoteEmbedder::State {
  detail::HttpEndpoint endpoint;
  std::counting_semaphore<> in_flight;

  State(detail::HttpEndpoint ep, std::size_t limit)
      : endpoint(std::move(ep)), in_flight(static_cast<std::ptrdiff_t>(limit)) {}
};

RemoteEmbedder::RemoteEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.kind != EmbedderKind::remote_service) {
    throw Error(ErrorCode::invalid_config, "RemoteEmbedder needs a remote-service spec");
  }
  state_ = std::make_unique<State>(detail::parse_endpoint(*spec_.endpoint), spec_.max_in_flight);
}

RemoteEmbedder::~RemoteEmbedder() = default;

namespace {

constexpr std::size_t kRemoteBatch = 32;

struct SemaphoreGuard {
  std::counting_semaphore<>& sem;
  explicit SemaphoreGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~SemaphoreGuard() { sem.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;
};

std::vector<FeatureVector> decode_embed_response(const std::string& body, std::size_t expected_count,
                                                 std::size_t expected_dim) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::service_unavailable, std::string("malformed embed response: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("vectors") || !doc["vectors"].is_array() || !doc.contains("dim") ||
      !doc["dim"].is_number_integer()) {
    throw Error(ErrorCode::service_unavailable, "embed response lacks 'vectors' or 'dim'");
  }
  const auto dim = doc["dim"].get<std::int64_t>();
  if (dim != static_cast<std::int64_t>(expected_dim)) {
    throw Error(ErrorCode::dimension_mismatch, "service returned dim " + std::to_string(dim) + ", expected " +
                                                   std::to_string(expected_dim));
  }
  const auto& vectors = doc["vectors"];
  if (vectors.size() != expected_count) {
    throw Error(ErrorCode::service_unavailable, "embed response has " + std::to_string(vectors.size()) +
                                                    " vectors for " + std::to_string(expected_count) + " texts");
  }
  std::vector<FeatureVector> out;
  out.reserve(vectors.size());
  for (const auto& row : vectors) {
    if (!row.is_array()) {
      throw Error(ErrorCode::service_unavailable, "embed response vector is not an array");
    }
    if (row.size() != expected_dim) {
      throw Error(ErrorCode::dimension_mismatch, "service returned a vector of length " +
                                                     std::to_string(row.size()) + ", expected " +
                                                     std::to_string(expected_dim));
    }
    std::vector<double> values;
    values.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number()) {
        throw Error(ErrorCode::service_unavailable, "embed response vector holds a non-number");
      }
      values.push_back(v.get<double>());
    }
    out.emplace_back(std::move(values));
  }
  return out;
}

} // namespace

std::vector<FeatureVector> RemoteEmbedder::embed_texts(std::span<const std::string> texts) const {
  std::vector<FeatureVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += kRemoteBatch) {
    const auto batch = texts.subspan(start, std::min(kRemoteBatch, texts.size() - start));
    const nlohmann::json body = {{"texts", std::vector<std::string>(batch.begin(), batch.end())}};

    std::string last_failure = "no attempt made";
    std::optional<std::vector<FeatureVector>> decoded;
    auto backoff = spec_.initial_backoff;
    for (int attempt = 0; attempt <= spec_.max_retries && !decoded; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      std::optional<detail::HttpResult> result;
      {
        SemaphoreGuard guard(state_->in_flight);
        result = detail::post_json(state_->endpoint, "/embed", body, spec_.request_timeout);
      }
      if (!result) {
        last_failure = "transport failure";
        continue;
      }
      if (result->status != 200) {
        last_failure = "HTTP status " + std::to_string(result->status);
        continue;
      }
      try {
        decoded = decode_embed_response(result->body, batch.size(), spec_.dim);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::service_unavailable) {
          throw;
        }
        last_failure = e.detail();
      }
    }
    if (!decoded) {
      throw Error(ErrorCode::service_unavailable, "embedding service at " + *spec_.endpoint + " failed after " +
                                                      std::to_string(spec_.max_retries + 1) +
                                                      " attempts: " + last_failure);
    }
    for (auto& v : *decoded) {
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == EmbedderKind::remote_service) {
    return std::make_shared<RemoteEmbedder>(spec);
  }
  return std::make_shared<BaselineEmbedder>(spec);
}

// --- free functions ----------------------------------------------------------

std::string truncate_head(std::string_view text, std::size_t max_tokens) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])) != 0) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j])) == 0) {
      ++j;
    }
    if (j > i) {
      tokens.push_back(text.substr(i, j - i));
      if (tokens.size() > max_tokens) {
        break;
      }
    }
    i = j;
  }
  if (tokens.size() <= max_tokens) {
    return std::string(text);
  }
  std::string out;
  for (std::size_t k = 0; k < max_tokens; ++k) {
    if (k != 0) {
      out.push_back(' ');
    }
    out.append(tokens[k]);
  }
  return out;
}

namespace {

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

FeatureVector embed_checked(std::string text, const Embedder& embedder) {
  auto v = embedder.embed_text(text);
  if (v.dim() != embedder.spec().dim) {
    throw Error(ErrorCode::dimension_mismatch, "embedder produced dim " + std::to_string(v.dim()) +
                                                   ", spec says " + std::to_string(embedder.spec().dim));
  }
  return v;
}

} // namespace

FeatureVector embed_code(std::string_view code, const Embedder& embedder) {
  if (is_blank(code)) {
    throw Error(ErrorCode::empty_input, "cannot embed empty code");
  }
  return embed_checked(truncate_head(code, embedder.spec().max_input_tokens), embedder);
}

FeatureVector embed_ast(const ast::AstSequence& seq, const Embedder& embedder) {
  if (seq.tokens.empty()) {
    throw Error(ErrorCode::empty_input, "cannot embed an empty AST sequence");
  }
  const std::size_t limit = embedder.spec().max_input_tokens;
  if (seq.tokens.size() <= limit) {
    return embed_checked(seq.joined(), embedder);
  }
  ast::AstSequence head;
  head.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(limit));
  return embed_checked(head.joined(), embedder);
}

FeatureVector hybrid_vector(const FeatureVector& semantic, const FeatureVector& structural) {
  if (semantic.dim() != structural.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "cannot average vectors of dim " + std::to_string(semantic.dim()) +
                                                   " and " + std::to_string(structural.dim()));
  }
  std::vector<double> out(semantic.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (semantic[i] + structural[i]) / 2.0;
  }
  return FeatureVector(std::move(out));
}

} // namespace selrag::embed
