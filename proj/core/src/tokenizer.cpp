#include "selrag/tokenizer.hpp"

#include "selrag/error.hpp"

#include <array>
#include <cctype>

namespace selrag::prompt {

namespace {

constexpr std::array<std::string_view, 2> kMarkers = {"[BUG]", "[FIX]"};

// Pieces of a whitespace-free chunk once marker literals are cut out.
std::size_t count_chunk(std::string_view chunk) {
  std::size_t tokens = 0;
  while (!chunk.empty()) {
    std::size_t first = std::string_view::npos;
    std::size_t marker_len = 0;
    for (auto marker : kMarkers) {
      auto pos = chunk.find(marker);
      if (pos < first) {
        first = pos;
        marker_len = marker.size();
      }
    }
    if (first == std::string_view::npos) {
      return tokens + 1;
    }
    if (first > 0) {
      ++tokens;
    }
    ++tokens;
    chunk.remove_prefix(first + marker_len);
  }
  return tokens;
}

} // namespace

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
  std::size_t total = 0;
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
      total += count_chunk(text.substr(i, j - i));
    }
    i = j;
  }
  return total;
}

BackendTokenizer::BackendTokenizer(std::function<std::size_t(std::string_view)> counter)
    : counter_(std::move(counter)) {
  if (!counter_) {
    throw Error(ErrorCode::invalid_argument, "backend tokenizer needs a counting function");
  }
}

std::size_t BackendTokenizer::count(std::string_view text) const { return counter_(text); }

std::shared_ptr<const Tokenizer> make_whitespace_tokenizer() {
  return std::make_shared<WhitespaceTokenizer>();
}

} // namespace selrag::prompt
