#include "selrag/experiment.hpp"

#include "selrag/error.hpp"
#include "selrag/prompt.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace selrag::harness {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool blank(std::string_view s) { return trim(s).empty(); }

std::string row_id(std::size_t line) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "row-%06zu", line);
  return buf;
}

std::string required_string(const nlohmann::json& row, const char* key) {
  const auto it = row.find(key);
  if (it == row.end()) {
    throw std::invalid_argument(std::string("missing '") + key + "'");
  }
  if (!it->is_string()) {
    throw std::invalid_argument(std::string("'") + key + "' is not a string");
  }
  auto value = it->get<std::string>();
  if (blank(value)) {
    throw std::invalid_argument(std::string("'") + key + "' is empty");
  }
  return value;
}

} // namespace

IngestResult parse_dataset(std::istream& in, std::string_view default_language) {
  IngestResult out;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (blank(line)) {
      continue;
    }
    try {
      const auto row = nlohmann::json::parse(line);
      if (!row.is_object()) {
        throw std::invalid_argument("row is not a JSON object");
      }
      retrieval::BugFixPair pair;
      pair.buggy_code = required_string(row, "buggy_code");
      pair.fixed_code = required_string(row, "fixed_code");
      if (const auto it = row.find("id"); it != row.end() && !it->is_null()) {
        if (it->is_string()) {
          pair.id = it->get<std::string>();
        } else if (it->is_number_integer()) {
          pair.id = std::to_string(it->get<long long>());
        } else {
          throw std::invalid_argument("'id' must be a string or integer");
        }
        if (blank(pair.id)) {
          throw std::invalid_argument("'id' is empty");
        }
      } else {
        pair.id = row_id(line_no);
      }
      if (const auto it = row.find("language"); it != row.end() && !it->is_null()) {
        if (!it->is_string()) {
          throw std::invalid_argument("'language' is not a string");
        }
        pair.language = it->get<std::string>();
      } else {
        pair.language = std::string(default_language);
      }
      if (const auto [pos, inserted] = seen.emplace(pair.id, line_no); !inserted) {
        throw std::invalid_argument("duplicate id '" + pair.id + "' (first on line " + std::to_string(pos->second) +
                                    ")");
      }
      out.records.push_back(std::move(pair));
    } catch (const nlohmann::json::exception& e) {
      out.skipped.push_back({line_no, std::string("malformed JSON: ") + e.what()});
    } catch (const std::invalid_argument& e) {
      out.skipped.push_back({line_no, e.what()});
    }
  }
  if (out.records.empty()) {
    throw Error(ErrorCode::all_rows_invalid,
                "no usable rows (" + std::to_string(out.skipped.size()) + " rejected)");
  }
  return out;
}

IngestResult ingest_dataset(const std::filesystem::path& path, std::string_view default_language) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::file_not_found, "dataset not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::file_not_found, "cannot open dataset: " + path.string());
  }
  try {
    return parse_dataset(in, default_language);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_pairs_jsonl(std::span<const retrieval::BugFixPair> pairs, std::ostream& out) {
  for (const auto& p : pairs) {
    nlohmann::ordered_json row{
        {"id", p.id}, {"buggy_code", p.buggy_code}, {"fixed_code", p.fixed_code}, {"language", p.language}};
    out << row.dump() << '\n';
  }
}

// --- splitting ----------------------------------------------------------------

void SplitRatios::validate() const {
  for (double r : {train, valid, test}) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::invalid_config, "split ratios must be positive");
    }
  }
}

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    // Reject the low values that would bias the modulo.
    const std::uint64_t floor = (0 - bound) % bound;
    std::uint64_t r = rng();
    while (r < floor) {
      r = rng();
    }
    std::swap(items[i - 1], items[static_cast<std::size_t>(r % bound)]);
  }
}

DatasetSplit split_dataset(std::span<const retrieval::BugFixPair> records, std::size_t codebase_size,
                           const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  if (codebase_size > records.size()) {
    throw Error(ErrorCode::insufficient_records, "codebase of " + std::to_string(codebase_size) +
                                                     " requested from " + std::to_string(records.size()) +
                                                     " records");
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  seeded_shuffle(order, seed);

  const std::size_t rest = records.size() - codebase_size;
  const double total = ratios.train + ratios.valid + ratios.test;
  auto share = [&](double r) { return static_cast<std::size_t>(std::llround(static_cast<double>(rest) * r / total)); };
  std::size_t n_train = std::min(share(ratios.train), rest);
  std::size_t n_valid = std::min(share(ratios.valid), rest - n_train);

  DatasetSplit out;
  std::size_t k = 0;
  auto take = [&](std::vector<retrieval::BugFixPair>& into, std::size_t n) {
    into.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      into.push_back(records[order[k++]]);
    }
  };
  take(out.codebase, codebase_size);
  take(out.train, n_train);
  take(out.valid, n_valid);
  take(out.test, records.size() - k);
  return out;
}

// --- config -------------------------------------------------------------------

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
  case BackendKind::echo_reference:
    return "echo";
  case BackendKind::constant:
    return "constant";
  case BackendKind::fixture:
    return "fixture";
  case BackendKind::http:
    return "http";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "echo" || text == "mock") {
    return BackendKind::echo_reference;
  }
  if (text == "constant") {
    return BackendKind::constant;
  }
  if (text == "fixture") {
    return BackendKind::fixture;
  }
  if (text == "http") {
    return BackendKind::http;
  }
  throw Error(ErrorCode::invalid_config, "unknown backend '" + std::string(text) + "' (echo|constant|fixture|http)");
}

void ExperimentConfig::validate() const {
  if (dataset_path.empty()) {
    throw Error(ErrorCode::invalid_config, "dataset path is required");
  }
  if (codebase_path.empty() && index_path.empty() && use_retrieval && codebase_size == 0) {
    throw Error(ErrorCode::invalid_config, "give a codebase, an index, or a codebase_size to split one off");
  }
  if (language.empty()) {
    throw Error(ErrorCode::invalid_config, "language is required");
  }
  gate.validate();
  embedder.validate();
  ratios.validate();
  if (num_candidates < 1 || max_new_tokens < 1) {
    throw Error(ErrorCode::invalid_config, "num_candidates and max_new_tokens must be positive");
  }
  if (workers < 1) {
    throw Error(ErrorCode::invalid_config, "workers must be positive");
  }
  if (backend == BackendKind::http && backend_endpoint.empty()) {
    throw Error(ErrorCode::invalid_config, "http backend needs an endpoint");
  }
  if (backend == BackendKind::fixture && backend_fixture.empty()) {
    throw Error(ErrorCode::invalid_config, "fixture backend needs a fixture file");
  }
  for (std::size_t i = 0; i < sweep_thresholds.size(); ++i) {
    const double t = sweep_thresholds[i];
    if (!(t >= -1.0 && t <= 1.0)) {
      throw Error(ErrorCode::invalid_config, "sweep thresholds must lie in [-1, 1]");
    }
    if (i > 0 && !(sweep_thresholds[i - 1] < t)) {
      throw Error(ErrorCode::invalid_config, "sweep thresholds must be ascending and unique");
    }
  }
  if (!codebleu_weights.empty()) {
    metrics::CodeBleuConfig probe;
    probe.set_weights(codebleu_weights);
  }
}

namespace {

double to_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_config, std::string(key) + ": not a number: '" + text + "'");
  }
}

std::uint64_t to_unsigned(std::string_view key, std::string_view value) {
  const std::string text(value);
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::invalid_config, std::string(key) + ": not a non-negative integer: '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_config, std::string(key) + ": out of range: '" + text + "'");
  }
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "on" || value == "yes" || value == "1") {
    return true;
  }
  if (value == "false" || value == "off" || value == "no" || value == "0") {
    return false;
  }
  throw Error(ErrorCode::invalid_config, std::string(key) + ": expected true/false");
}

double threshold_value(std::string_view key, std::string_view value) {
  if (value == "none" || value == "no-threshold") {
    return kNoThreshold;
  }
  const double t = to_double(key, value);
  if (!(t >= -1.0 && t <= 1.0)) {
    throw Error(ErrorCode::invalid_config, std::string(key) + " must lie in [-1, 1]");
  }
  return t;
}

std::vector<std::string_view> split_csv(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
  std::filesystem::path p{std::string(value)};
  if (p.empty() || p.is_absolute() || base.empty()) {
    return p;
  }
  return base / p;
}

} // namespace

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir) {
  key = trim(key);
  value = trim(value);
  if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
    value = value.substr(1, value.size() - 2);
  }
  if (key == "codebase") {
    cfg.codebase_path = resolve(base_dir, value);
  } else if (key == "dataset") {
    cfg.dataset_path = resolve(base_dir, value);
  } else if (key == "index") {
    cfg.index_path = resolve(base_dir, value);
  } else if (key == "language" || key == "lang") {
    cfg.language = std::string(value);
  } else if (key == "threshold") {
    cfg.gate.threshold = threshold_value(key, value);
  } else if (key == "budget" || key == "max_context_tokens") {
    cfg.gate.max_context_tokens = to_unsigned(key, value);
  } else if (key == "max_pairs") {
    cfg.gate.max_pairs = to_unsigned(key, value);
  } else if (key == "mode") {
    cfg.mode = retrieval::parse_retrieval_mode(value);
  } else if (key == "retrieval") {
    cfg.use_retrieval = to_bool(key, value);
  } else if (key == "tokenizer") {
    if (value != "whitespace") {
      throw Error(ErrorCode::invalid_config, "only the whitespace tokenizer can be configured from text");
    }
  } else if (key == "embedder") {
    if (value == "baseline") {
      cfg.embedder.kind = embed::EmbedderKind::deterministic_baseline;
      cfg.embedder.endpoint.reset();
    } else if (value == "remote") {
      cfg.embedder.kind = embed::EmbedderKind::remote_service;
    } else {
      throw Error(ErrorCode::invalid_config, "embedder must be baseline or remote");
    }
  } else if (key == "embed_endpoint") {
    cfg.embedder.endpoint = std::string(value);
    cfg.embedder.kind = embed::EmbedderKind::remote_service;
  } else if (key == "embed_dim") {
    cfg.embedder.dim = to_unsigned(key, value);
  } else if (key == "max_input_tokens") {
    cfg.embedder.max_input_tokens = to_unsigned(key, value);
  } else if (key == "backend") {
    cfg.backend = parse_backend_kind(value);
  } else if (key == "backend_endpoint" || key == "gen_endpoint") {
    cfg.backend_endpoint = std::string(value);
  } else if (key == "backend_fixture") {
    cfg.backend_fixture = resolve(base_dir, value);
  } else if (key == "backend_text") {
    cfg.backend_text = std::string(value);
  } else if (key == "num_candidates" || key == "beam") {
    cfg.num_candidates = to_unsigned(key, value);
  } else if (key == "max_new_tokens") {
    cfg.max_new_tokens = to_unsigned(key, value);
  } else if (key == "sweep") {
    cfg.sweep_thresholds.clear();
    if (!value.empty()) {
      for (auto piece : split_csv(value)) {
        cfg.sweep_thresholds.push_back(threshold_value(key, piece));
      }
      std::sort(cfg.sweep_thresholds.begin(), cfg.sweep_thresholds.end());
    }
  } else if (key == "seed") {
    cfg.seed = to_unsigned(key, value);
  } else if (key == "codebase_size") {
    cfg.codebase_size = to_unsigned(key, value);
  } else if (key == "split") {
    const auto parts = split_csv(value);
    if (parts.size() != 3) {
      throw Error(ErrorCode::invalid_config, "split needs three ratios train,valid,test");
    }
    cfg.ratios = {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
  } else if (key == "workers") {
    cfg.workers = to_unsigned(key, value);
  } else if (key == "codebleu_weights") {
    cfg.codebleu_weights = std::string(value);
  } else {
    throw Error(ErrorCode::invalid_config, "unknown config key '" + std::string(key) + "'");
  }
}

namespace {

// A '#' after whitespace and outside quotes starts a trailing comment.
std::string_view drop_trailing_comment(std::string_view text) {
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote != 0) {
      quote = c == quote ? 0 : quote;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#' && i > 0 && std::isspace(static_cast<unsigned char>(text[i - 1])) != 0) {
      return text.substr(0, i);
    }
  }
  return text;
}

} // namespace

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(drop_trailing_comment(line));
    if (text.empty() || text.front() == '#' || text.front() == '[') {
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::invalid_config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_setting(cfg, text.substr(0, eq), text.substr(eq + 1), base_dir);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::file_not_found, "config not found: " + path.string());
  }
  return parse_config(in, path.parent_path());
}

// --- experiment ---------------------------------------------------------------

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto& registry = ast::default_registry();
  registry.get(cfg_.language);

  auto dataset = ingest_dataset(cfg_.dataset_path, cfg_.language);
  dataset_issues_ = std::move(dataset.skipped);

  std::vector<retrieval::BugFixPair> codebase;
  if (cfg_.codebase_path.empty() && cfg_.index_path.empty() && cfg_.use_retrieval) {
    auto split = split_dataset(dataset.records, cfg_.codebase_size, cfg_.ratios, cfg_.seed);
    samples_ = std::move(split.test);
    codebase = std::move(split.codebase);
  } else {
    samples_ = std::move(dataset.records);
    if (cfg_.use_retrieval && cfg_.index_path.empty()) {
      auto loaded = ingest_dataset(cfg_.codebase_path, cfg_.language);
      for (const auto& issue : loaded.skipped) {
        codebase_skipped_.push_back({"line " + std::to_string(issue.line), issue.reason});
      }
      codebase = std::move(loaded.records);
    }
  }
  std::sort(samples_.begin(), samples_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  if (cfg_.use_retrieval) {
    if (!cfg_.index_path.empty()) {
      auto loaded = retrieval::load_index(cfg_.index_path);
      auto spec = loaded.embedder_spec();
      spec.max_in_flight = cfg_.embedder.max_in_flight;
      spec.max_retries = cfg_.embedder.max_retries;
      embedder_ = embed::make_embedder(spec);
      index_ = std::make_unique<retrieval::CodebaseIndex>(loaded.with_mode(cfg_.mode));
    } else {
      embedder_ = embed::make_embedder(cfg_.embedder);
      auto built = retrieval::build_index(codebase, *embedder_, cfg_.mode, registry);
      for (auto& s : built.skipped) {
        codebase_skipped_.push_back(std::move(s));
      }
      index_ = std::make_unique<retrieval::CodebaseIndex>(std::move(built.index));
    }
    retriever_ = std::make_unique<retrieval::Retriever>(*index_, embedder_, registry);
  }

  tokenizer_ = prompt::make_whitespace_tokenizer();
  switch (cfg_.backend) {
  case BackendKind::echo_reference:
    break;
  case BackendKind::constant:
    backend_ = gen::MockBackend::echo(cfg_.backend_text);
    break;
  case BackendKind::fixture:
    backend_ = gen::FixtureBackend::load(cfg_.backend_fixture);
    break;
  case BackendKind::http:
    backend_ = std::make_shared<gen::HttpBackend>(cfg_.backend_endpoint);
    break;
  }
  metric_cfg_ = metrics::CodeBleuConfig::for_language(cfg_.language);
  if (!cfg_.codebleu_weights.empty()) {
    metric_cfg_.set_weights(cfg_.codebleu_weights);
  }
}

Experiment::~Experiment() = default;

ThresholdRun Experiment::run_at(double threshold) const {
  const auto started = std::chrono::steady_clock::now();
  retrieval::GateConfig gate = cfg_.gate;
  gate.threshold = threshold;
  gate.validate();

  std::vector<SampleAudit> audit(samples_.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr unexpected;
  std::mutex unexpected_mutex;

  auto process = [&](std::size_t i) {
    const auto& sample = samples_[i];
    auto& row = audit[i];
    row.id = sample.id;
    row.threshold = threshold;
    std::string stage = "retrieve";
    try {
      retrieval::RetrievedContext context;
      if (retriever_) {
        context = retriever_->retrieve(sample.buggy_code, cfg_.language, gate, *tokenizer_);
      }
      row.candidates_considered = context.candidates_considered;
      row.admitted = context.admitted;
      row.skipped_for_budget = context.skipped_for_budget;
      row.rejected_for_markers = context.rejected_for_markers;
      for (const auto& s : context.selected) {
        row.retrieved.push_back({s.pair.id, s.similarity});
      }
      stage = "prompt";
      auto prompt = prompt::assemble_prompt(context, sample.buggy_code, *tokenizer_);
      row.prompt_tokens = prompt.token_count;
      row.pairs_included = prompt.pairs_included;
      stage = "generate";
      gen::GenerationRequest request{std::move(prompt), cfg_.num_candidates, cfg_.max_new_tokens, "[BUG]"};
      std::vector<gen::PatchCandidate> candidates;
      if (backend_) {
        candidates = gen::generate(request, *backend_);
      } else {
        candidates = gen::generate(request, *gen::MockBackend::echo(sample.fixed_code));
      }
      if (candidates.empty()) {
        throw Error(ErrorCode::backend_contract, "backend returned no candidates");
      }
      row.candidate = candidates.front().text;
    } catch (const Error& e) {
      row.failure = SampleFailure{sample.id, e.stage().empty() ? stage : e.stage(),
                                  std::string(to_string(e.code())) + ": " + e.detail()};
    }
  };
  auto work = [&] {
    for (std::size_t i = next++; i < samples_.size(); i = next++) {
      try {
        process(i);
      } catch (...) {
        std::lock_guard lock(unexpected_mutex);
        if (!unexpected) {
          unexpected = std::current_exception();
        }
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg_.workers, samples_.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(work);
    }
  }
  if (unexpected) {
    std::rethrow_exception(unexpected);
  }

  ThresholdRun run;
  run.threshold = threshold;
  std::vector<metrics::EvalSample> scored;
  double tokens = 0.0;
  double pairs = 0.0;
  std::size_t prompted = 0;
  for (std::size_t i = 0; i < audit.size(); ++i) {
    const auto& row = audit[i];
    if (row.prompt_tokens) {
      tokens += static_cast<double>(*row.prompt_tokens);
      pairs += static_cast<double>(row.pairs_included);
      ++prompted;
    }
    if (row.failure) {
      run.failures.push_back(*row.failure);
    } else {
      scored.push_back({row.id, *row.candidate, samples_[i].fixed_code});
    }
  }
  if (prompted > 0) {
    run.avg_input_tokens = tokens / static_cast<double>(prompted);
    run.avg_pairs = pairs / static_cast<double>(prompted);
  }
  run.report = metrics::evaluate(scored, cfg_.language, metric_cfg_, cfg_.workers);
  run.audit = std::move(audit);
  run.wall_time = std::chrono::steady_clock::now() - started;
  return run;
}

SweepReport Experiment::sweep(std::span<const double> thresholds) const {
  std::vector<double> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  SweepReport out;
  for (double t : sorted) {
    const auto run = run_at(t);
    SweepRow row;
    row.threshold = t;
    row.em_rate = run.report.em_rate;
    row.bleu4 = run.report.bleu4;
    row.codebleu = run.report.codebleu;
    row.avg_input_tokens = run.avg_input_tokens;
    row.avg_pairs = run.avg_pairs;
    row.samples_scored = run.report.samples.size();
    row.samples_failed = run.failures.size();
    row.wall_time = run.wall_time;
    if (!out.rows.empty() && row.avg_input_tokens > out.rows.back().avg_input_tokens + 1e-9) {
      out.tokens_non_increasing = false;
    }
    out.rows.push_back(row);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const Experiment experiment(cfg);
  ExperimentResult result;
  result.main = experiment.run_at(cfg.gate.threshold);
  if (!cfg.sweep_thresholds.empty()) {
    result.sweep = experiment.sweep(cfg.sweep_thresholds);
  }
  result.dataset_issues = experiment.dataset_issues();
  result.codebase_skipped = experiment.codebase_skipped();
  result.codebase_size = experiment.index() ? experiment.index()->size() : 0;
  result.num_samples = experiment.samples().size();
  return result;
}

// --- reports -------------------------------------------------------------------

std::string threshold_label(double threshold) {
  if (threshold == kNoThreshold) {
    return "No Threshold";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", threshold);
  return buf;
}

namespace {

nlohmann::ordered_json failure_json(const SampleFailure& f) {
  return {{"id", f.id}, {"stage", f.stage}, {"error", f.error}};
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

} // namespace

void write_run_report_json(const ExperimentResult& result, std::ostream& out) {
  const auto& main = result.main;
  nlohmann::ordered_json doc;
  doc["threshold"] = main.threshold;
  doc["threshold_label"] = threshold_label(main.threshold);
  doc["num_samples"] = result.num_samples;
  doc["samples_scored"] = main.report.samples.size();
  doc["samples_failed"] = main.failures.size();
  doc["codebase_size"] = result.codebase_size;
  doc["em_rate"] = main.report.em_rate;
  doc["bleu4"] = main.report.bleu4;
  doc["codebleu"] = main.report.codebleu;
  doc["avg_input_tokens"] = main.avg_input_tokens;
  doc["avg_pairs"] = main.avg_pairs;
  auto& failures = doc["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : main.failures) {
    failures.push_back(failure_json(f));
  }
  auto& issues = doc["dataset_issues"] = nlohmann::ordered_json::array();
  for (const auto& i : result.dataset_issues) {
    issues.push_back({{"line", i.line}, {"reason", i.reason}});
  }
  auto& skipped = doc["codebase_skipped"] = nlohmann::ordered_json::array();
  for (const auto& s : result.codebase_skipped) {
    skipped.push_back({{"id", s.id}, {"reason", s.reason}});
  }
  auto& rows = doc["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : main.report.samples) {
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

void write_audit_jsonl(std::span<const SampleAudit> audit, std::ostream& out) {
  for (const auto& a : audit) {
    nlohmann::ordered_json row;
    row["id"] = a.id;
    row["threshold"] = a.threshold;
    auto& retrieved = row["retrieved"] = nlohmann::ordered_json::array();
    for (const auto& r : a.retrieved) {
      retrieved.push_back({{"id", r.id}, {"similarity", r.similarity}});
    }
    row["candidates_considered"] = a.candidates_considered;
    row["admitted"] = a.admitted;
    row["skipped_for_budget"] = a.skipped_for_budget;
    row["rejected_for_markers"] = a.rejected_for_markers;
    row["prompt_tokens"] = a.prompt_tokens ? nlohmann::ordered_json(*a.prompt_tokens) : nlohmann::ordered_json(nullptr);
    row["pairs_included"] = a.pairs_included;
    row["candidate"] = a.candidate ? nlohmann::ordered_json(*a.candidate) : nlohmann::ordered_json(nullptr);
    row["failure"] = a.failure ? failure_json(*a.failure) : nlohmann::ordered_json(nullptr);
    out << row.dump() << '\n';
  }
}

void write_sweep_json(const SweepReport& sweep, std::ostream& out) {
  nlohmann::ordered_json doc;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : sweep.rows) {
    rows.push_back({{"threshold", r.threshold},
                    {"label", threshold_label(r.threshold)},
                    {"em_rate", r.em_rate},
                    {"bleu4", r.bleu4},
                    {"codebleu", r.codebleu},
                    {"avg_input_tokens", r.avg_input_tokens},
                    {"avg_pairs", r.avg_pairs},
                    {"samples_scored", r.samples_scored},
                    {"samples_failed", r.samples_failed}});
  }
  doc["tokens_non_increasing"] = sweep.tokens_non_increasing;
  out << doc.dump(2) << '\n';
}

void write_sweep_markdown(const SweepReport& sweep, std::ostream& out) {
  out << "| Threshold | EM | BLEU-4 | CodeBLEU | Avg. Input Tokens | Avg. Pairs | Scored | Failed |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  // Highest threshold first, "No Threshold" last.
  for (auto it = sweep.rows.rbegin(); it != sweep.rows.rend(); ++it) {
    out << "| " << threshold_label(it->threshold) << " | " << fixed4(it->em_rate) << " | " << fixed4(it->bleu4)
        << " | " << fixed4(it->codebleu) << " | " << fixed4(it->avg_input_tokens) << " | "
        << fixed4(it->avg_pairs) << " | " << it->samples_scored << " | " << it->samples_failed << " |\n";
  }
}

void write_timing_json(const ExperimentResult& result, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["main_wall_time_s"] = result.main.wall_time.count();
  auto& rows = doc["sweep"] = nlohmann::ordered_json::array();
  if (result.sweep) {
    for (const auto& r : result.sweep->rows) {
      rows.push_back({{"threshold", r.threshold}, {"wall_time_s", r.wall_time.count()}});
    }
  }
  out << doc.dump(2) << '\n';
}

void write_reports(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw Error(ErrorCode::invalid_argument, "cannot write " + (dir / name).string());
    }
    return f;
  };
  {
    auto f = open("report.json");
    write_run_report_json(result, f);
  }
  {
    auto f = open("samples.csv");
    metrics::write_samples_csv(result.main.report, f);
  }
  {
    auto f = open("audit.jsonl");
    write_audit_jsonl(result.main.audit, f);
  }
  {
    auto f = open("timing.json");
    write_timing_json(result, f);
  }
  if (result.sweep) {
    auto j = open("sweep.json");
    write_sweep_json(*result.sweep, j);
    auto m = open("sweep.md");
    write_sweep_markdown(*result.sweep, m);
  }
}

} // namespace selrag::harness
