#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string_view>

namespace selrag::prompt {

enum class TokenizerKind { whitespace, backend_provided };

/// Counts prompt tokens for budget accounting. The `[BUG]` and `[FIX]`
/// markers always count as one token each.
class Tokenizer {
public:
  virtual ~Tokenizer() = default;
  virtual TokenizerKind kind() const noexcept = 0;
  virtual std::size_t count(std::string_view text) const = 0;
};

/// Whitespace-separated chunks; marker literals are split out of any chunk
/// they are glued to.
class WhitespaceTokenizer final : public Tokenizer {
public:
  TokenizerKind kind() const noexcept override { return TokenizerKind::whitespace; }
  std::size_t count(std::string_view text) const override;
};

/// Wraps a model-specific counter. The callable sees the full text and must
/// itself treat the markers as single special tokens.
class BackendTokenizer final : public Tokenizer {
public:
  explicit BackendTokenizer(std::function<std::size_t(std::string_view)> counter);
  TokenizerKind kind() const noexcept override { return TokenizerKind::backend_provided; }
  std::size_t count(std::string_view text) const override;

private:
  std::function<std::size_t(std::string_view)> counter_;
};

std::shared_ptr<const Tokenizer> make_whitespace_tokenizer();

} // namespace selrag::prompt
