#include "selrag/error.hpp"
#include "selrag/metrics.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace selrag::metrics {

void CodeBleuConfig::validate() const {
  for (double w : {alpha, beta, gamma, epsilon}) {
    if (!(w >= 0.0)) {
      throw Error(ErrorCode::invalid_config, "CodeBLEU weights must be non-negative");
    }
  }
  if (std::abs(alpha + beta + gamma + epsilon - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_config, "CodeBLEU weights must sum to 1");
  }
}

CodeBleuConfig CodeBleuConfig::for_language(std::string_view language) {
  CodeBleuConfig cfg;
  const auto keywords = builtin_keywords(language);
  cfg.keywords = KeywordWeights::from_keywords(keywords);
  return cfg;
}

void CodeBleuConfig::set_weights(std::string_view csv) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    const auto piece = std::string(csv.substr(start, comma == std::string_view::npos ? csv.npos : comma - start));
    try {
      std::size_t used = 0;
      values.push_back(std::stod(piece, &used));
      if (piece.find_first_not_of(" \t", used) != std::string::npos) {
        throw std::invalid_argument(piece);
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_config, "bad CodeBLEU weight '" + piece + "'");
    }
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  if (values.size() != 4) {
    throw Error(ErrorCode::invalid_config, "CodeBLEU weights need four values a,b,g,e");
  }
  alpha = values[0];
  beta = values[1];
  gamma = values[2];
  epsilon = values[3];
  validate();
}

CodeBleuScore codebleu(std::string_view candidate, std::string_view reference, std::string_view language,
                       const CodeBleuConfig& cfg, const ast::GrammarRegistry& registry) {
  cfg.validate();
  registry.get(language);

  CodeBleuScore out;
  const auto cand_tokens = tokenize_code(candidate);
  const auto ref_tokens = tokenize_code(reference);
  if (cand_tokens.empty() || ref_tokens.empty()) {
    out.flags.emplace_back("bleu:EmptySequence");
    out.flags.emplace_back("weighted_bleu:EmptySequence");
  } else {
    out.bleu = bleu4(cand_tokens, ref_tokens);
    out.weighted_bleu = weighted_ngram_bleu(cand_tokens, ref_tokens, cfg.keywords);
  }

  std::optional<ast::AstNode> cand_tree;
  std::optional<ast::AstNode> ref_tree;
  try {
    cand_tree = ast::parse_source(candidate, language, registry);
    ref_tree = ast::parse_source(reference, language, registry);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::unsupported_language) {
      throw;
    }
  }
  if (cand_tree && ref_tree) {
    out.ast_match = match_ast(*cand_tree, *ref_tree);
    out.df_match = match_dataflow(extract_dataflow(*cand_tree, language), extract_dataflow(*ref_tree, language));
  } else {
    out.flags.emplace_back("ast_match:ParseFailure");
    out.flags.emplace_back("df_match:ParseFailure");
  }

  out.score = cfg.alpha * out.bleu + cfg.beta * out.weighted_bleu + cfg.gamma * out.ast_match +
              cfg.epsilon * out.df_match;
  return out;
}

double sentence_bleu4(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize_code(candidate);
  const auto ref = tokenize_code(reference);
  if (cand.empty() || ref.empty()) {
    return 0.0;
  }
  return bleu4(cand, ref);
}

namespace {

SampleScore score_sample(const EvalSample& sample, std::string_view language, const CodeBleuConfig& cfg,
                         const ast::GrammarRegistry& registry) {
  SampleScore row;
  row.id = sample.id;
  row.exact = exact_match(sample.candidate, sample.reference);
  row.bleu4 = sentence_bleu4(sample.candidate, sample.reference);
  row.code = codebleu(sample.candidate, sample.reference, language, cfg, registry);
  return row;
}

} // namespace

EvalReport evaluate(std::span<const EvalSample> samples, std::string_view language, const CodeBleuConfig& cfg,
                    std::size_t workers, const ast::GrammarRegistry& registry) {
  cfg.validate();
  registry.get(language);
  EvalReport report;
  report.samples.resize(samples.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      try {
        report.samples[i] = score_sample(samples[i], language, cfg, registry);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, samples.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(work);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  if (!report.samples.empty()) {
    double em = 0.0;
    double bleu = 0.0;
    double code = 0.0;
    for (const auto& row : report.samples) {
      em += row.exact ? 1.0 : 0.0;
      bleu += row.bleu4;
      code += row.code.score;
    }
    const auto n = static_cast<double>(report.samples.size());
    report.em_rate = em / n;
    report.bleu4 = bleu / n;
    report.codebleu = code / n;
  }
  return report;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) {
      out.push_back(';');
    }
    out.append(f);
  }
  return out;
}

} // namespace

void write_report_json(const EvalReport& report, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["em_rate"] = report.em_rate;
  doc["bleu4"] = report.bleu4;
  doc["codebleu"] = report.codebleu;
  doc["num_samples"] = report.samples.size();
  auto& rows = doc["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : report.samples) {
    nlohmann::ordered_json row;
    row["id"] = s.id;
    row["exact_match"] = s.exact;
    row["bleu4"] = s.bleu4;
    row["codebleu"] = s.code.score;
    row["bleu"] = s.code.bleu;
    row["weighted_bleu"] = s.code.weighted_bleu;
    row["ast_match"] = s.code.ast_match;
    row["df_match"] = s.code.df_match;
    row["flags"] = s.code.flags;
    rows.push_back(std::move(row));
  }
  out << doc.dump(2) << '\n';
}

void write_samples_csv(const EvalReport& report, std::ostream& out) {
  out << "id,exact_match,bleu4,codebleu,bleu,weighted_bleu,ast_match,df_match,flags\n";
  for (const auto& s : report.samples) {
    out << csv_field(s.id) << ',' << (s.exact ? 1 : 0) << ',' << fmt_double(s.bleu4) << ','
        << fmt_double(s.code.score) << ',' << fmt_double(s.code.bleu) << ',' << fmt_double(s.code.weighted_bleu)
        << ',' << fmt_double(s.code.ast_match) << ',' << fmt_double(s.code.df_match) << ','
        << csv_field(join_flags(s.code.flags)) << '\n';
  }
}

} // namespace selrag::metrics
