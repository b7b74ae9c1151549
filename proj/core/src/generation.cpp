#include "selrag/generation.hpp"

#include "http_util.hpp"
#include "selrag/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <semaphore>
#include <thread>

namespace selrag::gen {

void GenerationRequest::validate() const {
  if (num_candidates < 1) {
    throw Error(ErrorCode::invalid_argument, "num_candidates must be at least 1");
  }
  if (max_new_tokens < 1) {
    throw Error(ErrorCode::invalid_argument, "max_new_tokens must be at least 1");
  }
}

MockBackend::MockBackend(Responder responder) : responder_(std::move(responder)) {
  if (!responder_) {
    throw Error(ErrorCode::invalid_argument, "mock backend needs a responder");
  }
}

std::shared_ptr<MockBackend> MockBackend::echo(std::string text) {
  return std::make_shared<MockBackend>(
      [text = std::move(text)](const GenerationRequest&) { return std::vector<RawCompletion>{{text, std::nullopt}}; });
}

std::vector<RawCompletion> MockBackend::complete(const GenerationRequest& request) const { return responder_(request); }

FixtureBackend::FixtureBackend(std::map<std::string, std::vector<RawCompletion>> responses)
    : responses_(std::move(responses)) {}

namespace {

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) {
    s.remove_prefix(1);
  }
  while (!s.empty() && is_space(s.back())) {
    s.remove_suffix(1);
  }
  return std::string(s);
}

std::vector<RawCompletion> decode_candidates(const nlohmann::json& list) {
  std::vector<RawCompletion> out;
  for (const auto& c : list) {
    if (!c.is_object() || !c.contains("text") || !c["text"].is_string()) {
      throw Error(ErrorCode::backend_contract, "candidate without a string 'text'");
    }
    RawCompletion raw{c["text"].get<std::string>(), std::nullopt};
    if (c.contains("score") && !c["score"].is_null()) {
      if (!c["score"].is_number()) {
        throw Error(ErrorCode::backend_contract, "candidate 'score' must be a number or null");
      }
      raw.score = c["score"].get<double>();
    }
    out.push_back(std::move(raw));
  }
  return out;
}

} // namespace

std::shared_ptr<FixtureBackend> FixtureBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::file_not_found, "fixture file not found: " + path.string());
  }
  std::map<std::string, std::vector<RawCompletion>> responses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    try {
      const auto row = nlohmann::json::parse(line);
      if (!row.contains("target") || !row["target"].is_string() || !row.contains("candidates") ||
          !row["candidates"].is_array()) {
        throw Error(ErrorCode::invalid_format, "needs 'target' and 'candidates'");
      }
      responses[trim(row["target"].get<std::string>())] = decode_candidates(row["candidates"]);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::invalid_format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::invalid_format, path.string() + ":" + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return std::make_shared<FixtureBackend>(std::move(responses));
}

std::vector<RawCompletion> FixtureBackend::complete(const GenerationRequest& request) const {
  const auto target = prompt::parse_prompt(request.prompt.text).target;
  const auto it = responses_.find(trim(target));
  if (it == responses_.end()) {
    throw Error(ErrorCode::backend_contract, "no recorded response for target");
  }
  return it->second;
}

struct HttpBackend::State {
  detail::HttpEndpoint endpoint;
  std::counting_semaphore<> in_flight;

  State(detail::HttpEndpoint ep, std::size_t limit)
      : endpoint(std::move(ep)), in_flight(static_cast<std::ptrdiff_t>(limit)) {}
};

HttpBackend::HttpBackend(std::string endpoint, HttpBackendOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  if (options_.max_in_flight == 0) {
    throw Error(ErrorCode::invalid_config, "max_in_flight must be positive");
  }
  state_ = std::make_unique<State>(detail::parse_endpoint(endpoint_), options_.max_in_flight);
}

HttpBackend::~HttpBackend() = default;

std::vector<RawCompletion> HttpBackend::complete(const GenerationRequest& request) const {
  const nlohmann::json body = {{"prompt", request.prompt.text},
                               {"num_candidates", request.num_candidates},
                               {"max_new_tokens", request.max_new_tokens}};
  std::string last_failure = "no attempt made";
  auto backoff = options_.initial_backoff;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    std::optional<detail::HttpResult> result;
    state_->in_flight.acquire();
    try {
      result = detail::post_json(state_->endpoint, "/generate", body, options_.request_timeout);
    } catch (...) {
      state_->in_flight.release();
      throw;
    }
    state_->in_flight.release();
    if (!result) {
      last_failure = "transport failure";
      continue;
    }
    if (result->status != 200) {
      last_failure = "HTTP status " + std::to_string(result->status);
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::backend_contract, std::string("generate response is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("candidates") || !doc["candidates"].is_array()) {
      throw Error(ErrorCode::backend_contract, "generate response lacks a 'candidates' array");
    }
    return decode_candidates(doc["candidates"]);
  }
  throw Error(ErrorCode::backend_unavailable, "generation service at " + endpoint_ + " failed after " +
                                                  std::to_string(options_.max_retries + 1) +
                                                  " attempts: " + last_failure);
}

std::string postprocess_completion(std::string_view text, std::string_view stop_marker) {
  if (!stop_marker.empty()) {
    if (const auto pos = text.find(stop_marker); pos != std::string_view::npos) {
      text = text.substr(0, pos);
    }
  }
  return trim(text);
}

std::vector<PatchCandidate> generate(const GenerationRequest& request, const GenerationBackend& backend) {
  request.validate();
  auto raw = backend.complete(request);
  std::vector<PatchCandidate> out;
  const std::size_t k = std::min(raw.size(), request.num_candidates);
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({postprocess_completion(raw[i].text, request.stop_marker), static_cast<int>(i + 1), raw[i].score});
  }
  return out;
}

namespace {

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) {
      throw;
    }
    throw e.with_stage(stage);
  }
}

} // namespace

RepairResult repair_one(std::string_view target, std::string_view language, const retrieval::Retriever& retriever,
                        const retrieval::GateConfig& gate, const prompt::Tokenizer& tokenizer,
                        const GenerationBackend& backend, const RepairOptions& options) {
  RepairResult result;
  result.context = in_stage("retrieve", [&] { return retriever.retrieve(target, language, gate, tokenizer); });
  result.prompt = in_stage("prompt", [&] { return prompt::assemble_prompt(result.context, target, tokenizer); });
  GenerationRequest request{result.prompt, options.num_candidates, options.max_new_tokens, options.stop_marker};
  result.candidates = in_stage("generate", [&] { return generate(request, backend); });
  return result;
}

RepairResult repair_one(std::string_view target, std::string_view language,
                        const std::filesystem::path& index_path, std::shared_ptr<const embed::Embedder> embedder,
                        const retrieval::GateConfig& gate, const prompt::Tokenizer& tokenizer,
                        const GenerationBackend& backend, const RepairOptions& options) {
  const auto index = in_stage("index", [&] { return retrieval::load_index(index_path); });
  const auto retriever = in_stage("index", [&] { return retrieval::Retriever(index, std::move(embedder)); });
  return repair_one(target, language, retriever, gate, tokenizer, backend, options);
}

std::string audit_json(const RepairResult& result) {
  nlohmann::ordered_json doc;
  auto& retrieved = doc["retrieved"] = nlohmann::ordered_json::array();
  for (const auto& s : result.context.selected) {
    retrieved.push_back({{"id", s.pair.id}, {"similarity", s.similarity}});
  }
  doc["candidates_considered"] = result.context.candidates_considered;
  doc["admitted"] = result.context.admitted;
  doc["skipped_for_budget"] = result.context.skipped_for_budget;
  doc["rejected_for_markers"] = result.context.rejected_for_markers;
  doc["prompt_tokens"] = result.prompt.token_count;
  doc["pairs_included"] = result.prompt.pairs_included;
  doc["prompt"] = result.prompt.text;
  auto& candidates = doc["candidates"] = nlohmann::ordered_json::array();
  for (const auto& c : result.candidates) {
    nlohmann::ordered_json row{{"rank", c.rank}, {"text", c.text}};
    row["score"] = c.backend_score ? nlohmann::ordered_json(*c.backend_score) : nlohmann::ordered_json(nullptr);
    candidates.push_back(std::move(row));
  }
  return doc.dump(2);
}

} // namespace selrag::gen
