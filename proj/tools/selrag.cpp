#include "selrag/ast.hpp"
#include "selrag/embedding.hpp"
#include "selrag/error.hpp"
#include "selrag/experiment.hpp"
#include "selrag/generation.hpp"
#include "selrag/grammar.hpp"
#include "selrag/metrics.hpp"
#include "selrag/prompt.hpp"
#include "selrag/retrieval.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

namespace {

using namespace selrag;

std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : std::move(fallback);
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), {}};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::file_not_found, "cannot read " + path);
  }
  return {std::istreambuf_iterator<char>(in), {}};
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::invalid_argument, "cannot write " + path.string());
  }
  return out;
}

// Grammar registry shared by the subcommands; a manifest adds grammars.
struct Grammars {
  std::string manifest;
  ast::GrammarRegistry registry = ast::GrammarRegistry::with_builtins();

  void load() {
    if (!manifest.empty()) {
      registry.load_manifest(manifest);
    }
  }
};

struct GateFlags {
  double threshold = 0.9;
  std::size_t budget = 512;
  std::size_t max_pairs = 10;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--threshold,-t", threshold, "Admit pairs with similarity strictly above this (-1: no threshold)")
        ->capture_default_str()
        ->check(CLI::Range(-1.0, 1.0));
    cmd->add_option("--budget", budget, "Prompt token budget")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--max-pairs", max_pairs, "Most pairs per prompt")->capture_default_str()->check(CLI::PositiveNumber);
  }
  retrieval::GateConfig gate() const { return {threshold, budget, max_pairs}; }
};

struct LoadedIndex {
  retrieval::CodebaseIndex index;
  std::shared_ptr<const embed::Embedder> embedder;
};

LoadedIndex open_index(const std::string& path) {
  auto index = retrieval::load_index(path);
  auto embedder = embed::make_embedder(index.embedder_spec());
  return {std::move(index), std::move(embedder)};
}

nlohmann::ordered_json context_json(const retrieval::RetrievedContext& ctx) {
  nlohmann::ordered_json doc;
  auto& selected = doc["selected"] = nlohmann::ordered_json::array();
  for (const auto& s : ctx.selected) {
    selected.push_back({{"id", s.pair.id}, {"similarity", s.similarity}});
  }
  doc["candidates_considered"] = ctx.candidates_considered;
  doc["admitted"] = ctx.admitted;
  doc["skipped_for_budget"] = ctx.skipped_for_budget;
  doc["rejected_for_markers"] = ctx.rejected_for_markers;
  return doc;
}

// --- eval input ----------------------------------------------------------------

std::string pick_code(const nlohmann::json& row, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (const auto it = row.find(k); it != row.end() && it->is_string()) {
      return it->get<std::string>();
    }
  }
  throw Error(ErrorCode::invalid_format, "row has none of the expected code fields");
}

std::vector<std::pair<std::string, std::string>> read_code_rows(const std::string& path,
                                                                std::initializer_list<const char*> keys) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::file_not_found, "cannot read " + path);
  }
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    try {
      const auto row = nlohmann::json::parse(line);
      std::string id;
      if (const auto it = row.find("id"); it != row.end() && it->is_string()) {
        id = it->get<std::string>();
      } else if (it != row.end() && it->is_number_integer()) {
        id = std::to_string(it->get<long long>());
      } else {
        id = "line-" + std::to_string(line_no);
      }
      rows.emplace_back(std::move(id), pick_code(row, keys));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::invalid_format, path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return rows;
}

// --- backends ------------------------------------------------------------------

struct BackendFlags {
  std::string kind = "http";
  std::string endpoint;
  std::string fixture;
  std::string text;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--backend", kind, "http|fixture|constant")
        ->capture_default_str()
        ->check(CLI::IsMember({"http", "fixture", "constant"}));
    cmd->add_option("--gen-endpoint", endpoint, "Generation service URL (default: $SELRAG_GEN_ENDPOINT)");
    cmd->add_option("--fixture", fixture, "Recorded responses for --backend fixture");
    cmd->add_option("--text", text, "Answer for --backend constant");
  }

  std::shared_ptr<const gen::GenerationBackend> make() const {
    if (kind == "fixture") {
      if (fixture.empty()) {
        throw Error(ErrorCode::invalid_config, "--backend fixture needs --fixture");
      }
      return gen::FixtureBackend::load(fixture);
    }
    if (kind == "constant") {
      return gen::MockBackend::echo(text);
    }
    const auto url = endpoint.empty() ? env_or("SELRAG_GEN_ENDPOINT") : endpoint;
    if (url.empty()) {
      throw Error(ErrorCode::invalid_config, "no generation endpoint (--gen-endpoint or SELRAG_GEN_ENDPOINT)");
    }
    return std::make_shared<gen::HttpBackend>(url);
  }
};

// --- experiment flags ---------------------------------------------------------------

struct RunFlags {
  std::string config;
  std::vector<std::string> settings;
  std::string dataset;
  std::string codebase;
  std::string out_dir = "selrag-out";
  std::string thresholds;

  void add_to(CLI::App* cmd, bool sweep) {
    cmd->add_option("--config,-c", config, "key = value config file");
    cmd->add_option("--set", settings, "Override a config key (key=value); repeatable");
    cmd->add_option("--dataset", dataset, "Evaluation samples (JSONL)");
    cmd->add_option("--codebase", codebase, "Retrieval codebase (JSONL)");
    cmd->add_option("--out-dir,-o", out_dir, "Report directory")->capture_default_str();
    if (sweep) {
      cmd->add_option("--thresholds", thresholds,
                      "Comma-separated thresholds; 'none' or -1 for no threshold (default -1,0.5,0.7,0.8,0.9)");
    }
  }

  harness::ExperimentConfig build() const {
    harness::ExperimentConfig cfg = config.empty() ? harness::ExperimentConfig{} : harness::load_config(config);
    if (!dataset.empty()) {
      cfg.dataset_path = dataset;
    }
    if (!codebase.empty()) {
      cfg.codebase_path = codebase;
    }
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::invalid_config, "--set expects key=value, got '" + s + "'");
      }
      harness::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!thresholds.empty()) {
      harness::apply_setting(cfg, "sweep", thresholds);
    }
    if (cfg.embedder.kind == embed::EmbedderKind::remote_service && !cfg.embedder.endpoint) {
      if (auto url = env_or("SELRAG_EMBED_ENDPOINT"); !url.empty()) {
        cfg.embedder.endpoint = url;
      }
    }
    if (cfg.backend == harness::BackendKind::http && cfg.backend_endpoint.empty()) {
      cfg.backend_endpoint = env_or("SELRAG_GEN_ENDPOINT");
    }
    return cfg;
  }
};

void print_summary(const harness::ExperimentResult& result, const std::filesystem::path& dir) {
  const auto& m = result.main;
  std::cout << "samples " << result.num_samples << " scored " << m.report.samples.size() << " failed "
            << m.failures.size() << "\n"
            << "threshold " << harness::threshold_label(m.threshold) << "  EM " << m.report.em_rate << "  BLEU-4 "
            << m.report.bleu4 << "  CodeBLEU " << m.report.codebleu << "  avg input tokens " << m.avg_input_tokens
            << "\n";
  if (result.sweep) {
    harness::write_sweep_markdown(*result.sweep, std::cout);
  }
  std::cout << "reports written to " << dir.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective retrieval-augmented program repair toolkit"};
  app.require_subcommand(1);
  Grammars grammars;
  app.add_option("--grammars", grammars.manifest, "Grammar manifest adding languages to the built-in set");

  // ast dump
  auto* ast_cmd = app.add_subcommand("ast", "Syntax tree tools")->require_subcommand(1);
  auto* ast_dump = ast_cmd->add_subcommand("dump", "Print the flattened AST sequence as a JSON array");
  std::string lang = "java";
  std::string in_path;
  ast_dump->add_option("--lang,-l", lang, "Language id")->capture_default_str();
  ast_dump->add_option("--in,-i", in_path, "Source file ('-' for stdin)")->required();

  // index build
  auto* index_cmd = app.add_subcommand("index", "Codebase index tools")->require_subcommand(1);
  auto* index_build = index_cmd->add_subcommand("build", "Embed a codebase and write an SRIX index");
  std::string codebase_path;
  std::string out_path;
  std::string mode = "hybrid";
  std::string embedder_kind = "baseline";
  std::string embed_endpoint;
  std::size_t embed_dim = 256;
  std::size_t max_input_tokens = 1024;
  index_build->add_option("--codebase", codebase_path, "Bug-fix pairs (JSONL)")->required();
  index_build->add_option("--out", out_path, "Index file")->required();
  index_build->add_option("--mode", mode, "hybrid|sr|ssdr")->capture_default_str();
  index_build->add_option("--lang,-l", lang, "Language for rows without one")->capture_default_str();
  index_build->add_option("--embedder", embedder_kind, "baseline|remote")
      ->capture_default_str()
      ->check(CLI::IsMember({"baseline", "remote"}));
  index_build->add_option("--embed-endpoint", embed_endpoint, "Embedding service URL (default: $SELRAG_EMBED_ENDPOINT)");
  index_build->add_option("--embed-dim", embed_dim, "Vector dimension")->capture_default_str()->check(CLI::PositiveNumber);
  index_build->add_option("--max-input-tokens", max_input_tokens, "Embedder input limit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Show which codebase pairs pass the gate for a target");
  std::string index_path;
  GateFlags gate_flags;
  bool as_json = false;
  retrieve_cmd->add_option("--index", index_path, "Index file")->required();
  retrieve_cmd->add_option("--in,-i", in_path, "Buggy code file ('-' for stdin)")->required();
  retrieve_cmd->add_option("--lang,-l", lang, "Language id")->capture_default_str();
  retrieve_cmd->add_flag("--json", as_json, "Print JSON");
  gate_flags.add_to(retrieve_cmd);

  // prompt build
  auto* prompt_cmd = app.add_subcommand("prompt", "Prompt tools")->require_subcommand(1);
  auto* prompt_build = prompt_cmd->add_subcommand("build", "Print the repair prompt for a target");
  prompt_build->add_option("--index", index_path, "Index file; omit for a zero-pair prompt");
  prompt_build->add_option("--in,-i", in_path, "Buggy code file ('-' for stdin)")->required();
  prompt_build->add_option("--lang,-l", lang, "Language id")->capture_default_str();
  gate_flags.add_to(prompt_build);

  // dataset export / split
  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset tools")->require_subcommand(1);
  auto* dataset_export = dataset_cmd->add_subcommand("export", "Write {prompt, completion} rows for fine-tuning");
  std::string pairs_path;
  dataset_export->add_option("--pairs", pairs_path, "Samples (JSONL)")->required();
  dataset_export->add_option("--out", out_path, "Output JSONL")->required();
  dataset_export->add_option("--index", index_path, "Index file; omit for zero-pair prompts");
  dataset_export->add_option("--lang,-l", lang, "Language for rows without one")->capture_default_str();
  gate_flags.add_to(dataset_export);

  auto* dataset_split = dataset_cmd->add_subcommand("split", "Seeded train/valid/test/codebase split");
  std::string out_dir;
  std::size_t codebase_size = 0;
  std::uint64_t seed = 42;
  std::vector<double> ratios{0.8, 0.1, 0.1};
  dataset_split->add_option("--in,-i", in_path, "Records (JSONL)")->required();
  dataset_split->add_option("--out-dir,-o", out_dir, "Directory for train/valid/test/codebase.jsonl")->required();
  dataset_split->add_option("--codebase-size", codebase_size, "Records drawn first for the codebase")->capture_default_str();
  dataset_split->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
  dataset_split->add_option("--ratios", ratios, "train valid test")->expected(3)->delimiter(',')->capture_default_str();
  dataset_split->add_option("--lang,-l", lang, "Language for rows without one")->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions with EM, BLEU-4 and CodeBLEU");
  std::string pred_path;
  std::string ref_path;
  std::string weights;
  std::string keywords_path;
  std::size_t workers = 4;
  out_dir = ".";
  eval_cmd->add_option("--pred", pred_path, "Predictions (JSONL with id and candidate)")->required();
  eval_cmd->add_option("--ref", ref_path, "References (JSONL with id and fixed_code)")->required();
  eval_cmd->add_option("--lang,-l", lang, "Language id")->capture_default_str();
  eval_cmd->add_option("--codebleu-weights", weights, "alpha,beta,gamma,epsilon");
  eval_cmd->add_option("--keywords", keywords_path, "Keyword list replacing the built-in one");
  eval_cmd->add_option("--out-dir,-o", out_dir, "Where report.json and samples.csv go")->capture_default_str();
  eval_cmd->add_option("--workers", workers, "Scoring threads")->capture_default_str()->check(CLI::PositiveNumber);

  // run / sweep
  auto* run_cmd = app.add_subcommand("run", "Retrieve, prompt, generate and score a dataset");
  RunFlags run_flags;
  run_flags.add_to(run_cmd, false);
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the pipeline across several thresholds");
  RunFlags sweep_flags;
  sweep_flags.add_to(sweep_cmd, true);

  // repair
  auto* repair_cmd = app.add_subcommand("repair", "Generate candidate patches for one buggy method");
  BackendFlags backend_flags;
  std::size_t beam = 1;
  std::size_t max_new_tokens = 256;
  repair_cmd->add_option("--index", index_path, "Index file")->required();
  repair_cmd->add_option("--in,-i", in_path, "Buggy code file ('-' for stdin)")->required();
  repair_cmd->add_option("--lang,-l", lang, "Language id")->capture_default_str();
  repair_cmd->add_option("--num-candidates,-k", beam, "Candidates to request")->capture_default_str()->check(CLI::PositiveNumber);
  repair_cmd->add_option("--max-new-tokens", max_new_tokens, "Generation length limit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  backend_flags.add_to(repair_cmd);
  gate_flags.add_to(repair_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    grammars.load();
    const auto tokenizer = prompt::make_whitespace_tokenizer();

    if (ast_dump->parsed()) {
      const auto tree = ast::parse_source(read_input(in_path), lang, grammars.registry);
      std::cout << nlohmann::json(ast::ast_traversal(tree).tokens).dump() << '\n';
    } else if (index_build->parsed()) {
      embed::EmbedderSpec spec = embed::EmbedderSpec::baseline(embed_dim, max_input_tokens);
      if (embedder_kind == "remote") {
        const auto url = embed_endpoint.empty() ? env_or("SELRAG_EMBED_ENDPOINT") : embed_endpoint;
        if (url.empty()) {
          throw Error(ErrorCode::invalid_config, "no embedding endpoint (--embed-endpoint or SELRAG_EMBED_ENDPOINT)");
        }
        spec = embed::EmbedderSpec::remote(url, embed_dim, max_input_tokens);
      }
      const auto pairs = harness::ingest_dataset(codebase_path, lang);
      for (const auto& issue : pairs.skipped) {
        std::cerr << "warning: " << codebase_path << ":" << issue.line << ": " << issue.reason << '\n';
      }
      const auto embedder = embed::make_embedder(spec);
      const auto built =
          retrieval::build_index(pairs.records, *embedder, retrieval::parse_retrieval_mode(mode), grammars.registry);
      for (const auto& s : built.skipped) {
        std::cerr << "warning: skipped pair " << s.id << ": " << s.reason << '\n';
      }
      retrieval::save_index(built.index, out_path);
      std::cout << "indexed " << built.index.size() << " pairs (" << built.skipped.size() << " skipped) -> "
                << out_path << '\n';
    } else if (retrieve_cmd->parsed()) {
      const auto loaded = open_index(index_path);
      const retrieval::Retriever retriever(loaded.index, loaded.embedder, grammars.registry);
      const auto target = read_input(in_path);
      const auto ctx = retriever.retrieve(target, lang, gate_flags.gate(), *tokenizer);
      const auto prompt = prompt::assemble_prompt(ctx, target, *tokenizer);
      if (as_json) {
        auto doc = context_json(ctx);
        doc["prompt_tokens"] = prompt.token_count;
        std::cout << doc.dump(2) << '\n';
      } else {
        for (const auto& s : ctx.selected) {
          std::cout << s.pair.id << '\t' << s.similarity << '\n';
        }
        std::cerr << ctx.selected.size() << " of " << ctx.candidates_considered << " pairs selected ("
                  << ctx.admitted << " above threshold), prompt tokens " << prompt.token_count << '\n';
      }
    } else if (prompt_build->parsed()) {
      const auto target = read_input(in_path);
      retrieval::RetrievedContext ctx;
      if (!index_path.empty()) {
        const auto loaded = open_index(index_path);
        const retrieval::Retriever retriever(loaded.index, loaded.embedder, grammars.registry);
        ctx = retriever.retrieve(target, lang, gate_flags.gate(), *tokenizer);
      }
      const auto prompt = prompt::assemble_prompt(ctx, target, *tokenizer);
      for (const auto& w : prompt.warnings) {
        std::cerr << "warning: " << w << '\n';
      }
      std::cout << prompt.text << '\n';
    } else if (dataset_export->parsed()) {
      const auto samples = harness::ingest_dataset(pairs_path, lang);
      for (const auto& issue : samples.skipped) {
        std::cerr << "warning: " << pairs_path << ":" << issue.line << ": " << issue.reason << '\n';
      }
      std::optional<LoadedIndex> loaded;
      std::optional<retrieval::Retriever> retriever;
      if (!index_path.empty()) {
        loaded = open_index(index_path);
        retriever.emplace(loaded->index, loaded->embedder, grammars.registry);
      }
      auto out = open_output(out_path);
      const auto summary = prompt::export_training_rows(samples.records, retriever ? &*retriever : nullptr,
                                                        gate_flags.gate(), *tokenizer, out);
      for (const auto& s : summary.skipped) {
        std::cerr << "skipped " << s.id << ": " << s.error << '\n';
      }
      std::cout << "wrote " << summary.rows << " rows (" << summary.skipped.size() << " skipped) -> " << out_path
                << '\n';
    } else if (dataset_split->parsed()) {
      const auto records = harness::ingest_dataset(in_path, lang);
      for (const auto& issue : records.skipped) {
        std::cerr << "warning: " << in_path << ":" << issue.line << ": " << issue.reason << '\n';
      }
      const auto split =
          harness::split_dataset(records.records, codebase_size, {ratios.at(0), ratios.at(1), ratios.at(2)}, seed);
      const std::filesystem::path dir(out_dir);
      const std::pair<const char*, const std::vector<retrieval::BugFixPair>*> parts[] = {
          {"train.jsonl", &split.train},
          {"valid.jsonl", &split.valid},
          {"test.jsonl", &split.test},
          {"codebase.jsonl", &split.codebase}};
      for (const auto& [name, rows] : parts) {
        auto out = open_output(dir / name);
        harness::write_pairs_jsonl(*rows, out);
      }
      std::cout << "train " << split.train.size() << " valid " << split.valid.size() << " test " << split.test.size()
                << " codebase " << split.codebase.size() << '\n';
    } else if (eval_cmd->parsed()) {
      auto cfg = metrics::CodeBleuConfig::for_language(lang);
      if (!weights.empty()) {
        cfg.set_weights(weights);
      }
      if (!keywords_path.empty()) {
        cfg.keywords = metrics::KeywordWeights::from_keywords(metrics::load_keywords(keywords_path));
      }
      const auto preds = read_code_rows(pred_path, {"candidate", "prediction", "code", "fixed_code"});
      const auto refs = read_code_rows(ref_path, {"reference", "fixed_code", "code"});
      std::map<std::string, std::string> pred_by_id(preds.begin(), preds.end());
      std::vector<metrics::EvalSample> samples;
      std::size_t missing = 0;
      for (const auto& [id, ref] : refs) {
        if (const auto it = pred_by_id.find(id); it != pred_by_id.end()) {
          samples.push_back({id, it->second, ref});
        } else {
          ++missing;
          std::cerr << "warning: no prediction for " << id << " (scored as empty)\n";
          samples.push_back({id, "", ref});
        }
      }
      const auto report = metrics::evaluate(samples, lang, cfg, workers, grammars.registry);
      const std::filesystem::path dir(out_dir);
      {
        auto out = open_output(dir / "report.json");
        metrics::write_report_json(report, out);
      }
      {
        auto out = open_output(dir / "samples.csv");
        metrics::write_samples_csv(report, out);
      }
      nlohmann::ordered_json summary{{"em_rate", report.em_rate},
                                     {"bleu4", report.bleu4},
                                     {"codebleu", report.codebleu},
                                     {"num_samples", report.samples.size()},
                                     {"missing_predictions", missing}};
      std::cout << summary.dump(2) << '\n';
    } else if (run_cmd->parsed() || sweep_cmd->parsed()) {
      const bool sweep = sweep_cmd->parsed();
      const auto& flags = sweep ? sweep_flags : run_flags;
      auto cfg = flags.build();
      if (sweep && cfg.sweep_thresholds.empty()) {
        cfg.sweep_thresholds = {harness::kNoThreshold, 0.5, 0.7, 0.8, 0.9};
      }
      const auto result = harness::run_experiment(cfg);
      harness::write_reports(result, flags.out_dir);
      print_summary(result, flags.out_dir);
      if (result.sweep && !result.sweep->tokens_non_increasing) {
        std::cerr << "error: average prompt size grew with the threshold\n";
        return 3;
      }
    } else if (repair_cmd->parsed()) {
      const auto backend = backend_flags.make();
      const auto loaded = [&] {
        try {
          return open_index(index_path);
        } catch (const Error& e) {
          throw e.with_stage("index");
        }
      }();
      const retrieval::Retriever retriever(loaded.index, loaded.embedder, grammars.registry);
      gen::RepairOptions options;
      options.num_candidates = beam;
      options.max_new_tokens = max_new_tokens;
      const auto result =
          gen::repair_one(read_input(in_path), lang, retriever, gate_flags.gate(), *tokenizer, *backend, options);
      std::cout << gen::audit_json(result) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
