#include "selrag/metrics.hpp"

#include <array>
#include <cctype>

namespace selrag::metrics {

namespace {

// Longest first so maximal munch falls out of a linear scan.
constexpr std::array<std::string_view, 27> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=",   "+=",  "-=",  "*=",  "/=",  "%=", "&=", "|=", "^=", "<<", ">>", "##", "=>",
};

bool is_ident_start(unsigned char c) { return std::isalpha(c) != 0 || c == '_' || c == '$' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return is_ident_start(c) || std::isdigit(c) != 0; }

std::size_t scan_quoted(std::string_view code, std::size_t i) {
  const char quote = code[i];
  std::size_t j = i + 1;
  while (j < code.size() && code[j] != quote && code[j] != '\n') {
    j += code[j] == '\\' ? 2 : 1;
  }
  return j < code.size() && code[j] == quote ? j + 1 : std::min(j, code.size());
}

} // namespace

std::vector<std::string> tokenize_code(std::string_view code) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < code.size()) {
    const auto c = static_cast<unsigned char>(code[i]);
    if (std::isspace(c) != 0) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (is_ident_start(c)) {
      while (j < code.size() && is_ident_char(static_cast<unsigned char>(code[j]))) {
        ++j;
      }
    } else if (std::isdigit(c) != 0) {
      while (j < code.size()) {
        const auto d = static_cast<unsigned char>(code[j]);
        const bool exponent_sign = (d == '+' || d == '-') && (code[j - 1] == 'e' || code[j - 1] == 'E') &&
                                   !(code.size() > i + 1 && (code[i + 1] == 'x' || code[i + 1] == 'X'));
        if (std::isalnum(d) == 0 && d != '_' && d != '.' && !exponent_sign) {
          break;
        }
        ++j;
      }
    } else if (c == '"' || c == '\'') {
      j = scan_quoted(code, i);
    } else if (code.substr(i, 2) == "//") {
      j = code.find('\n', i);
      j = j == std::string_view::npos ? code.size() : j;
    } else if (code.substr(i, 2) == "/*") {
      j = code.find("*/", i + 2);
      j = j == std::string_view::npos ? code.size() : j + 2;
    } else {
      for (auto op : kOperators) {
        if (code.substr(i, op.size()) == op) {
          j = i + op.size();
          break;
        }
      }
    }
    // Comments may span lines; keep them as one token without the trailing newline.
    std::string_view token = code.substr(i, j - i);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back())) != 0) {
      token.remove_suffix(1);
    }
    tokens.emplace_back(token);
    i = j;
  }
  return tokens;
}

bool exact_match(std::string_view candidate, std::string_view reference) {
  return tokenize_code(candidate) == tokenize_code(reference);
}

} // namespace selrag::metrics
