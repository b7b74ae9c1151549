#pragma once

#include "selrag/ast.hpp"

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selrag::embed {

/// Fixed-dimension real vector. Entries are always finite.
class FeatureVector {
public:
  FeatureVector() = default;
  /// Throws Error(invalid_argument) on NaN/inf entries or an empty vector.
  explicit FeatureVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double norm() const noexcept;
  /// Similarity against a zero vector is undefined.
  bool is_zero() const noexcept;

  /// Copy with every entry rounded through float, the precision the index
  /// file stores.
  FeatureVector to_float_precision() const;
  FeatureVector scaled(double factor) const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
  std::vector<double> values_;
};

enum class EmbedderKind { remote_service, deterministic_baseline };

std::string_view to_string(EmbedderKind kind) noexcept;

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::deterministic_baseline;
  std::optional<std::string> endpoint; // present iff kind == remote_service
  std::size_t dim = 256;
  std::size_t max_input_tokens = 1024;

  // Remote client tuning; not part of the persisted spec.
  std::size_t max_in_flight = 8;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds request_timeout{30000};

  static EmbedderSpec baseline(std::size_t dim = 256, std::size_t max_input_tokens = 1024);
  static EmbedderSpec remote(std::string endpoint, std::size_t dim, std::size_t max_input_tokens = 1024);

  /// Throws Error(invalid_config) if the invariants do not hold.
  void validate() const;

  bool same_model(const EmbedderSpec& other) const noexcept {
    return kind == other.kind && endpoint == other.endpoint && dim == other.dim &&
           max_input_tokens == other.max_input_tokens;
  }
};

/// Turns texts into vectors of `spec().dim` entries. Implementations are
/// safe to call concurrently.
class Embedder {
public:
  virtual ~Embedder() = default;
  virtual const EmbedderSpec& spec() const noexcept = 0;
  virtual std::vector<FeatureVector> embed_texts(std::span<const std::string> texts) const = 0;

  FeatureVector embed_text(std::string_view text) const;
};

/// Hashed character 3-gram term frequencies, L2-normalized. Pure function of
/// the input bytes.
class BaselineEmbedder final : public Embedder {
public:
  explicit BaselineEmbedder(EmbedderSpec spec);
  const EmbedderSpec& spec() const noexcept override { return spec_; }
  std::vector<FeatureVector> embed_texts(std::span<const std::string> texts) const override;

  FeatureVector embed_one(std::string_view text) const;

private:
  EmbedderSpec spec_;
};

/// Client for `POST <endpoint>/embed`.
class RemoteEmbedder final : public Embedder {
public:
  explicit RemoteEmbedder(EmbedderSpec spec);
  ~RemoteEmbedder() override;
  const EmbedderSpec& spec() const noexcept override { return spec_; }
  std::vector<FeatureVector> embed_texts(std::span<const std::string> texts) const override;

private:
  struct State;
  EmbedderSpec spec_;
  std::unique_ptr<State> state_;
};

std::shared_ptr<const Embedder> make_embedder(const EmbedderSpec& spec);

/// First `max_tokens` whitespace-separated tokens joined by single spaces;
/// `text` unchanged when it is already short enough.
std::string truncate_head(std::string_view text, std::size_t max_tokens);

/// Semantic vector of raw code. Throws Error(empty_input) on blank code.
FeatureVector embed_code(std::string_view code, const Embedder& embedder);
/// Structural vector of a flattened AST.
FeatureVector embed_ast(const ast::AstSequence& seq, const Embedder& embedder);

/// Element-wise mean. Throws Error(dimension_mismatch).
FeatureVector hybrid_vector(const FeatureVector& semantic, const FeatureVector& structural);

} // namespace selrag::embed
