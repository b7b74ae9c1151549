#pragma once

#include "selrag/embedding.hpp"
#include "selrag/generation.hpp"
#include "selrag/metrics.hpp"
#include "selrag/retrieval.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selrag::harness {

// --- dataset ingestion ------------------------------------------------------------

struct RowIssue {
  std::size_t line = 0; // 1-based
  std::string reason;
};

struct IngestResult {
  std::vector<retrieval::BugFixPair> records;
  std::vector<RowIssue> skipped;
};

/// JSONL rows {"buggy_code","fixed_code"} plus optional "id" and "language".
/// Rows without an id get "row-NNNNNN" from their line number; rows without a
/// language get `default_language`. Bad rows are skipped and reported.
/// Throws Error(all_rows_invalid) when nothing usable remains.
IngestResult parse_dataset(std::istream& in, std::string_view default_language);
/// Throws Error(file_not_found) as well.
IngestResult ingest_dataset(const std::filesystem::path& path, std::string_view default_language = "java");

void write_pairs_jsonl(std::span<const retrieval::BugFixPair> pairs, std::ostream& out);

// --- splitting ----------------------------------------------------------------

/// Relative weights; they are normalized by their sum.
struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;

  void validate() const;
};

struct DatasetSplit {
  std::vector<retrieval::BugFixPair> train;
  std::vector<retrieval::BugFixPair> valid;
  std::vector<retrieval::BugFixPair> test;
  std::vector<retrieval::BugFixPair> codebase;
};

/// Seeded shuffle (own Fisher-Yates over mt19937_64, so results do not depend
/// on the standard library). The codebase is drawn first, the rest split by
/// `ratios`; test takes the rounding remainder. Throws
/// Error(insufficient_records) when `codebase_size` exceeds the input.
DatasetSplit split_dataset(std::span<const retrieval::BugFixPair> records, std::size_t codebase_size,
                           const SplitRatios& ratios, std::uint64_t seed);

/// In-place shuffle used by `split_dataset`.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

// --- experiment ---------------------------------------------------------------

enum class BackendKind { echo_reference, constant, fixture, http };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view text);

/// Threshold value standing in for "No Threshold".
inline constexpr double kNoThreshold = -1.0;

struct ExperimentConfig {
  std::filesystem::path codebase_path; // empty: draw the codebase from the dataset split
  std::filesystem::path dataset_path;
  std::filesystem::path index_path;    // optional prebuilt index
  std::string language = "java";

  retrieval::GateConfig gate;
  retrieval::RetrievalMode mode = retrieval::RetrievalMode::hybrid;
  /// false runs without retrieval at all (zero-pair prompts).
  bool use_retrieval = true;
  embed::EmbedderSpec embedder = embed::EmbedderSpec::baseline();

  BackendKind backend = BackendKind::echo_reference;
  std::string backend_endpoint;
  std::filesystem::path backend_fixture;
  std::string backend_text;
  std::size_t num_candidates = 1;
  std::size_t max_new_tokens = 256;

  std::vector<double> sweep_thresholds;
  std::uint64_t seed = 42;
  std::size_t codebase_size = 0; // used only when codebase_path is empty
  SplitRatios ratios;
  std::size_t workers = 4;
  std::string codebleu_weights; // "a,b,g,e"; empty keeps equal weights

  /// Config errors only; paths are checked by `run_experiment`.
  void validate() const;
};

/// `key = value` lines, `#` comments (full-line, or after whitespace outside
/// quotes), optional quotes around values.
/// Unknown keys are errors. Throws Error(invalid_config).
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies one `key = value` setting; shared by the file parser and CLI overrides.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

struct SampleFailure {
  std::string id;
  std::string stage;
  std::string error;
};

struct SampleAudit {
  std::string id;
  double threshold = 0.0;
  std::vector<retrieval::RankedId> retrieved;
  std::size_t candidates_considered = 0;
  std::size_t admitted = 0;
  std::vector<std::string> skipped_for_budget;
  std::vector<std::string> rejected_for_markers;
  std::optional<std::size_t> prompt_tokens;
  std::size_t pairs_included = 0;
  std::optional<std::string> candidate;
  std::optional<SampleFailure> failure;
};

struct ThresholdRun {
  double threshold = 0.0;
  metrics::EvalReport report;
  std::vector<SampleFailure> failures;
  std::vector<SampleAudit> audit; // sorted by sample id
  double avg_input_tokens = 0.0;
  double avg_pairs = 0.0;
  std::chrono::duration<double> wall_time{0.0};
};

struct SweepRow {
  double threshold = 0.0;
  double em_rate = 0.0;
  double bleu4 = 0.0;
  double codebleu = 0.0;
  double avg_input_tokens = 0.0;
  double avg_pairs = 0.0;
  std::size_t samples_scored = 0;
  std::size_t samples_failed = 0;
  std::chrono::duration<double> wall_time{0.0};
};

struct SweepReport {
  std::vector<SweepRow> rows; // threshold ascending
  bool tokens_non_increasing = true;
};

struct ExperimentResult {
  ThresholdRun main;
  std::optional<SweepReport> sweep;
  std::vector<RowIssue> dataset_issues;
  std::vector<retrieval::SkippedPair> codebase_skipped;
  std::size_t codebase_size = 0;
  std::size_t num_samples = 0;
};

/// Loaded data, index and backend for repeated runs at different thresholds.
class Experiment {
public:
  /// Loads the dataset, builds or loads the index and connects the backend.
  /// Fails fast on config and file errors.
  explicit Experiment(ExperimentConfig cfg);
  ~Experiment();
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const ExperimentConfig& config() const noexcept { return cfg_; }
  std::span<const retrieval::BugFixPair> samples() const noexcept { return samples_; }
  const retrieval::CodebaseIndex* index() const noexcept { return index_.get(); }

  /// Retrieval, prompting, generation and scoring of every sample at one
  /// threshold. Per-sample errors are recorded and excluded from the means.
  ThresholdRun run_at(double threshold) const;

  /// One row per threshold (sorted ascending). Checks that the average prompt
  /// size does not grow with the threshold.
  SweepReport sweep(std::span<const double> thresholds) const;

  std::vector<RowIssue> dataset_issues() const { return dataset_issues_; }
  std::vector<retrieval::SkippedPair> codebase_skipped() const { return codebase_skipped_; }

private:
  ExperimentConfig cfg_;
  std::vector<retrieval::BugFixPair> samples_;
  std::vector<RowIssue> dataset_issues_;
  std::vector<retrieval::SkippedPair> codebase_skipped_;
  std::unique_ptr<retrieval::CodebaseIndex> index_;
  std::shared_ptr<const embed::Embedder> embedder_;
  std::unique_ptr<retrieval::Retriever> retriever_;
  std::shared_ptr<const prompt::Tokenizer> tokenizer_;
  std::shared_ptr<const gen::GenerationBackend> backend_;
  metrics::CodeBleuConfig metric_cfg_;
};

/// Runs the configured threshold and, when `sweep_thresholds` is set, the sweep.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// --- reports -------------------------------------------------------------------

/// "No Threshold" for -1, otherwise the value with up to 4 decimals.
std::string threshold_label(double threshold);

void write_run_report_json(const ExperimentResult& result, std::ostream& out);
void write_audit_jsonl(std::span<const SampleAudit> audit, std::ostream& out);
void write_sweep_json(const SweepReport& sweep, std::ostream& out);
void write_sweep_markdown(const SweepReport& sweep, std::ostream& out);
/// Wall times live apart from the other reports so those stay byte-identical
/// between runs.
void write_timing_json(const ExperimentResult& result, std::ostream& out);

/// Writes report.json, samples.csv, audit.jsonl, timing.json and, for sweeps,
/// sweep.json and sweep.md into `dir`.
void write_reports(const ExperimentResult& result, const std::filesystem::path& dir);

} // namespace selrag::harness
