#include "selrag/error.hpp"
#include "selrag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace selrag::metrics {

namespace detail {
std::string_view builtin_keyword_text(std::string_view language);
}

void BleuConfig::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw Error(ErrorCode::invalid_config, "BLEU weights must be non-negative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_config, "BLEU weights must sum to 1");
  }
}

double brevity_penalty(std::size_t candidate_length, std::size_t reference_length) {
  if (candidate_length == 0) {
    throw Error(ErrorCode::empty_sequence, "brevity penalty of an empty candidate");
  }
  if (candidate_length > reference_length) {
    return 1.0;
  }
  return std::exp(1.0 - static_cast<double>(reference_length) / static_cast<double>(candidate_length));
}

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) {
    return counts;
  }
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key.append(tokens[i + k]);
    }
    ++counts[key];
  }
  return counts;
}

} // namespace

NgramPrecisions ngram_precisions(std::span<const std::string> candidate, std::span<const std::string> reference,
                                 const KeywordWeights* unigram_weights) {
  NgramPrecisions out;
  for (std::size_t n = 1; n <= 4; ++n) {
    const std::size_t slot = n - 1;
    out.vacuous[slot] = candidate.size() < n && reference.size() < n;
    const auto cand = count_ngrams(candidate, n);
    const auto ref = count_ngrams(reference, n);
    for (const auto& [gram, count] : cand) {
      const double w = (n == 1 && unigram_weights != nullptr) ? unigram_weights->weight(gram) : 1.0;
      const auto it = ref.find(gram);
      const int clipped = it == ref.end() ? 0 : std::min(count, it->second);
      out.total[slot] += w * count;
      out.matched[slot] += w * clipped;
    }
  }
  return out;
}

namespace {

double combine(const NgramPrecisions& p, std::size_t candidate_length, std::size_t reference_length,
               const BleuConfig& cfg) {
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!p.vacuous[k]) {
      weight_sum += cfg.weights[k];
    }
  }
  const double bp = brevity_penalty(candidate_length, reference_length);
  if (weight_sum == 0.0) {
    return bp;
  }
  double log_sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (p.vacuous[k] || cfg.weights[k] == 0.0) {
      continue;
    }
    double precision = p.total[k] > 0.0 ? p.matched[k] / p.total[k] : 0.0;
    if (precision == 0.0) {
      if (cfg.smoothing == Smoothing::none) {
        return 0.0;
      }
      precision = kSmoothingEpsilon / std::max(p.total[k], 1.0);
    }
    log_sum += (cfg.weights[k] / weight_sum) * std::log(precision);
  }
  return bp * std::exp(log_sum);
}

void require_tokens(std::span<const std::string> candidate, std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) {
    throw Error(ErrorCode::empty_sequence, candidate.empty() ? "candidate has no tokens" : "reference has no tokens");
  }
}

} // namespace

double bleu4(std::span<const std::string> candidate, std::span<const std::string> reference, const BleuConfig& cfg) {
  cfg.validate();
  require_tokens(candidate, reference);
  return combine(ngram_precisions(candidate, reference, nullptr), candidate.size(), reference.size(), cfg);
}

double KeywordWeights::weight(const std::string& token) const {
  const auto it = weights.find(token);
  return it == weights.end() ? other_weight : it->second;
}

KeywordWeights KeywordWeights::from_keywords(std::span<const std::string> keywords, double keyword_weight,
                                             double other_weight) {
  KeywordWeights out;
  out.other_weight = other_weight;
  for (const auto& k : keywords) {
    out.weights[k] = keyword_weight;
  }
  return out;
}

namespace {

std::vector<std::string> parse_keyword_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos || line[begin] == '#') {
      continue;
    }
    const auto end = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(begin, end - begin + 1));
  }
  return out;
}

} // namespace

std::vector<std::string> builtin_keywords(std::string_view language) {
  std::istringstream in{std::string(detail::builtin_keyword_text(language))};
  return parse_keyword_lines(in);
}

std::vector<std::string> load_keywords(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::file_not_found, "keyword list not found: " + path);
  }
  return parse_keyword_lines(in);
}

double weighted_ngram_bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                           const KeywordWeights& keywords, const BleuConfig& cfg) {
  cfg.validate();
  require_tokens(candidate, reference);
  return combine(ngram_precisions(candidate, reference, &keywords), candidate.size(), reference.size(), cfg);
}

} // namespace selrag::metrics
