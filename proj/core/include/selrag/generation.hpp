#pragma once

#include "selrag/prompt.hpp"
#include "selrag/retrieval.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selrag::gen {

struct GenerationRequest {
  prompt::RepairPrompt prompt;
  /// Beam size.
  std::size_t num_candidates = 1;
  std::size_t max_new_tokens = 256;
  std::string stop_marker = "[BUG]";

  void validate() const;
};

struct PatchCandidate {
  std::string text;
  int rank = 0; // 1 = best
  std::optional<double> backend_score;

  friend bool operator==(const PatchCandidate&, const PatchCandidate&) = default;
};

/// What a backend returns before post-processing, best first.
struct RawCompletion {
  std::string text;
  std::optional<double> score;
};

class GenerationBackend {
public:
  virtual ~GenerationBackend() = default;
  virtual std::string_view kind() const noexcept = 0;
  virtual std::vector<RawCompletion> complete(const GenerationRequest& request) const = 0;
};

/// In-process backend driven by a callable.
class MockBackend final : public GenerationBackend {
public:
  using Responder = std::function<std::vector<RawCompletion>(const GenerationRequest&)>;

  explicit MockBackend(Responder responder);
  /// Always answers with `text`.
  static std::shared_ptr<MockBackend> echo(std::string text);

  std::string_view kind() const noexcept override { return "mock"; }
  std::vector<RawCompletion> complete(const GenerationRequest& request) const override;

private:
  Responder responder_;
};

/// Recorded responses keyed by target buggy code. File format, one JSON
/// object per line: {"target": "...", "candidates": [{"text": "...", "score": 0.5}, ...]}
class FixtureBackend final : public GenerationBackend {
public:
  explicit FixtureBackend(std::map<std::string, std::vector<RawCompletion>> responses);
  /// Throws Error(file_not_found) or Error(invalid_format).
  static std::shared_ptr<FixtureBackend> load(const std::filesystem::path& path);

  std::string_view kind() const noexcept override { return "fixture"; }
  /// Throws Error(backend_contract) when no recording matches the target.
  std::vector<RawCompletion> complete(const GenerationRequest& request) const override;

private:
  std::map<std::string, std::vector<RawCompletion>> responses_;
};

struct HttpBackendOptions {
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds request_timeout{120000};
};

/// Client for `POST <endpoint>/generate`.
class HttpBackend final : public GenerationBackend {
public:
  explicit HttpBackend(std::string endpoint, HttpBackendOptions options = {});
  ~HttpBackend() override;

  std::string_view kind() const noexcept override { return "http"; }
  /// Error(backend_unavailable) after retries on transport/HTTP failure,
  /// Error(backend_contract) for malformed bodies.
  std::vector<RawCompletion> complete(const GenerationRequest& request) const override;

private:
  struct State;
  std::string endpoint_;
  HttpBackendOptions options_;
  std::unique_ptr<State> state_;
};

/// Cuts at the first stop marker, then trims surrounding whitespace.
std::string postprocess_completion(std::string_view text, std::string_view stop_marker);

/// At most `num_candidates` post-processed candidates ranked 1..k.
std::vector<PatchCandidate> generate(const GenerationRequest& request, const GenerationBackend& backend);

struct RepairResult {
  retrieval::RetrievedContext context;
  prompt::RepairPrompt prompt;
  std::vector<PatchCandidate> candidates;
};

struct RepairOptions {
  std::size_t num_candidates = 1;
  std::size_t max_new_tokens = 256;
  std::string stop_marker = "[BUG]";
};

/// retrieve -> assemble prompt -> generate. Errors carry the stage they came
/// from ("retrieve", "prompt" or "generate").
RepairResult repair_one(std::string_view target, std::string_view language, const retrieval::Retriever& retriever,
                        const retrieval::GateConfig& gate, const prompt::Tokenizer& tokenizer,
                        const GenerationBackend& backend, const RepairOptions& options = {});

/// Loads the index first; a missing file surfaces as Error(index_missing)
/// tagged with stage "index".
RepairResult repair_one(std::string_view target, std::string_view language,
                        const std::filesystem::path& index_path, std::shared_ptr<const embed::Embedder> embedder,
                        const retrieval::GateConfig& gate, const prompt::Tokenizer& tokenizer,
                        const GenerationBackend& backend, const RepairOptions& options = {});

/// Retrieved ids and similarities, prompt size and candidates as JSON text.
std::string audit_json(const RepairResult& result);

} // namespace selrag::gen
