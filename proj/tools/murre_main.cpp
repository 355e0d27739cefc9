/*
 * Copyright 2026 the Murre authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "murre/errors.hpp"
#include "murre/experiment.hpp"

namespace {

using namespace murre;

// CLI11 lets a config file shadow environment variables; the contract
// here is flag > environment > config file > default, so variables
// re-assert themselves over config-sourced values unless the flag was
// spelled out on the command line.
bool flag_in_argv(int argc, char** argv, std::string_view flag) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == flag ||
        (arg.starts_with(flag) && arg.size() > flag.size() && arg[flag.size()] == '=')) {
      return true;
    }
  }
  return false;
}

void assign_env(const std::string& text, std::string& out) { out = text; }
void assign_env(const std::string& text, std::filesystem::path& out) { out = text; }

template <typename Int>
  requires std::is_integral_v<Int>
void assign_env(const std::string& text, Int& out) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InputError("environment variable holds a non-integer value: \"" + text + "\"");
  }
  out = value;
}

void assign_env(const std::string& text, std::vector<std::size_t>& out) {
  out.clear();
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part =
        comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start);
    std::size_t value{};
    assign_env(part, value);
    out.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
}

template <typename T>
void env_over_config(int argc, char** argv, const char* flag, const char* var, T& out) {
  if (flag_in_argv(argc, argv, flag)) return;
  if (const char* value = std::getenv(var)) assign_env(std::string(value), out);
}

// Accepts "ref-bow", a bare URL, or the "http:URL" spelling.
EmbedderBackend parse_embedder_choice(const std::string& value, std::string& endpoint) {
  if (value == "ref-bow") return EmbedderBackend::kReferenceBow;
  std::string url = value;
  if (url.starts_with("http:") && url.substr(5).starts_with("http")) url = url.substr(5);
  if (url.starts_with("http://") || url.starts_with("https://")) {
    endpoint = url;
    return EmbedderBackend::kHttp;
  }
  throw InputError("--embedder must be ref-bow or http:URL, got \"" + value + "\"");
}

RemoverBackend parse_remover_choice(const std::string& value, std::string& endpoint) {
  if (value == "oracle") return RemoverBackend::kOracle;
  if (value == "splice") return RemoverBackend::kSplice;
  std::string url = value;
  if (url.starts_with("llm:")) url = url.substr(4);
  if (url.starts_with("http://") || url.starts_with("https://")) {
    endpoint = url;
    return RemoverBackend::kLlm;
  }
  throw InputError("--remover must be oracle, llm:URL, or splice, got \"" + value + "\"");
}

void apply_ablation(const std::string& ablation, RunParams& params, RemoverSpec& remover) {
  if (ablation == "none" || ablation.empty()) return;
  if (ablation == "no-removal") {
    params.no_removal = true;
    remover.backend = RemoverBackend::kSplice;
  } else if (ablation == "no-tabulation") {
    if (remover.backend != RemoverBackend::kLlm) {
      throw InputError("--ablation no-tabulation requires --remover llm:URL");
    }
    params.no_tabulation = true;
    remover.backend = RemoverBackend::kNaturalLanguage;
  } else if (ablation == "no-early-stop") {
    params.no_early_stop = true;
  } else {
    throw InputError("unknown ablation \"" + ablation + "\"");
  }
}

std::string histogram_line(const GoldHistogram& h) {
  std::string line = "1: " + std::to_string(h.one) + "  2: " + std::to_string(h.two) +
                     "  3: " + std::to_string(h.three) + "  >=4: " + std::to_string(h.four_plus) +
                     "  total: " + std::to_string(h.total);
  if (h.unlabeled > 0) line += "  (unlabeled: " + std::to_string(h.unlabeled) + ")";
  return line;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hop table retrieval with removal"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file (key=value, [section] per subcommand)");

  // ---- run -------------------------------------------------------------
  ExperimentConfig config;
  std::string embedder_choice = "ref-bow";
  std::string remover_choice = "oracle";
  std::string ablation = "none";
  std::string api_key_env = "MURRE_API_KEY";

  CLI::App* run_cmd = app.add_subcommand("run", "run retrieval over a question set");
  run_cmd->add_option("--schema", config.schema_path, "Spider-format tables.json")
      ->envname("MURRE_SCHEMA")
      ->required();
  run_cmd->add_option("--questions", config.questions_path, "questions JSONL")
      ->envname("MURRE_QUESTIONS")
      ->required();
  run_cmd->add_option("--beam-size", config.params.beam_size, "beam size B")
      ->envname("MURRE_BEAM_SIZE")
      ->default_val(5);
  run_cmd->add_option("--max-hop", config.params.max_hop, "maximum hop H")
      ->envname("MURRE_MAX_HOP")
      ->default_val(3);
  run_cmd->add_option("--top-n", config.params.top_n, "tables kept per question")
      ->envname("MURRE_TOP_N")
      ->default_val(20);
  run_cmd->add_option("--k", config.ks, "k values for recall metrics")
      ->envname("MURRE_K")
      ->delimiter(',')
      ->default_val(std::vector<std::size_t>{3, 5, 10, 20});
  run_cmd->add_option("--breakdown-k", config.breakdown_k, "k for the per-gold-count breakdown")
      ->envname("MURRE_BREAKDOWN_K")
      ->default_val(5);
  run_cmd->add_option("--embedder", embedder_choice, "ref-bow | http:URL")
      ->envname("MURRE_EMBEDDER");
  run_cmd->add_option("--remover", remover_choice, "oracle | llm:URL | splice")
      ->envname("MURRE_REMOVER");
  run_cmd->add_option("--ablation", ablation, "none | no-removal | no-tabulation | no-early-stop")
      ->envname("MURRE_ABLATION");
  run_cmd->add_option("--out", config.out_path, "results JSONL path")->envname("MURRE_OUT");
  run_cmd->add_option("--workers", config.workers, "concurrent questions")
      ->envname("MURRE_WORKERS")
      ->default_val(1);
  run_cmd->add_flag("--strict", config.strict, "exit nonzero on any backend incident");
  run_cmd->add_flag("--exclude-retrieved", config.params.exclude_retrieved,
                    "skip candidates already on the path");
  run_cmd->add_option("--embed-model", config.embedder.model, "http embedder model name")
      ->envname("MURRE_EMBED_MODEL");
  run_cmd->add_option("--embed-dim", config.embedder.dimension, "expected embedding dimension")
      ->envname("MURRE_EMBED_DIM");
  run_cmd->add_option("--query-prefix", config.embedder.query_prefix,
                      "prefix for question embeddings (http backend)")
      ->envname("MURRE_QUERY_PREFIX");
  run_cmd->add_option("--doc-prefix", config.embedder.doc_prefix,
                      "prefix for table embeddings (http backend)")
      ->envname("MURRE_DOC_PREFIX");
  run_cmd->add_option("--llm-model", config.remover.model, "remover model name")
      ->envname("MURRE_LLM_MODEL");
  run_cmd->add_option("--timeout", config.remover.timeout_sec, "backend timeout (seconds)")
      ->envname("MURRE_TIMEOUT");
  run_cmd->add_option("--prompt-template", config.remover.prompt_template_path,
                      "removal prompt template file")
      ->envname("MURRE_PROMPT_TEMPLATE");
  run_cmd->add_option("--shots", config.remover.shots_path, "few-shot demonstrations file")
      ->envname("MURRE_SHOTS");
  run_cmd->add_option("--shot-count", config.remover.shot_count, "demonstrations to use")
      ->envname("MURRE_SHOT_COUNT");
  run_cmd->add_option("--api-key-env", api_key_env,
                      "environment variable holding the backend token");

  // ---- eval ------------------------------------------------------------
  std::string results_path;
  std::vector<std::size_t> eval_ks = {3, 5, 10, 20};
  std::size_t eval_breakdown_k = 5;
  std::size_t eval_max_hop = 0;  // 0 = max hops seen in the file

  CLI::App* eval_cmd = app.add_subcommand("eval", "re-aggregate a results file");
  eval_cmd->add_option("--results", results_path, "results JSONL")->required();
  eval_cmd->add_option("--k", eval_ks, "k values")->delimiter(',');
  eval_cmd->add_option("--breakdown-k", eval_breakdown_k, "k for the breakdown");
  eval_cmd->add_option("--max-hop", eval_max_hop, "hop count for the stop distribution");

  // ---- stats -----------------------------------------------------------
  std::string stats_schema, stats_questions;
  CLI::App* stats_cmd = app.add_subcommand("stats", "gold-table distribution of a question set");
  stats_cmd->add_option("--schema", stats_schema, "Spider-format tables.json")->required();
  stats_cmd->add_option("--questions", stats_questions, "questions JSONL")->required();

  // ---- budget ----------------------------------------------------------
  std::string budget_method = "murre";
  RunParams budget_params;
  long long budget_n = 1;
  CLI::App* budget_cmd = app.add_subcommand("budget", "backend-call upper bound");
  budget_cmd->add_option("--method", budget_method, "murre | crush | single-hop");
  budget_cmd->add_option("--beam-size", budget_params.beam_size, "beam size B")
      ->envname("MURRE_BEAM_SIZE")
      ->default_val(5);
  budget_cmd->add_option("--max-hop", budget_params.max_hop, "maximum hop H")
      ->envname("MURRE_MAX_HOP")
      ->default_val(3);
  budget_cmd->add_option("--count", budget_n, "number of questions")->default_val(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      env_over_config(argc, argv, "--schema", "MURRE_SCHEMA", config.schema_path);
      env_over_config(argc, argv, "--questions", "MURRE_QUESTIONS", config.questions_path);
      env_over_config(argc, argv, "--beam-size", "MURRE_BEAM_SIZE", config.params.beam_size);
      env_over_config(argc, argv, "--max-hop", "MURRE_MAX_HOP", config.params.max_hop);
      env_over_config(argc, argv, "--top-n", "MURRE_TOP_N", config.params.top_n);
      env_over_config(argc, argv, "--k", "MURRE_K", config.ks);
      env_over_config(argc, argv, "--breakdown-k", "MURRE_BREAKDOWN_K", config.breakdown_k);
      env_over_config(argc, argv, "--embedder", "MURRE_EMBEDDER", embedder_choice);
      env_over_config(argc, argv, "--remover", "MURRE_REMOVER", remover_choice);
      env_over_config(argc, argv, "--ablation", "MURRE_ABLATION", ablation);
      env_over_config(argc, argv, "--out", "MURRE_OUT", config.out_path);
      env_over_config(argc, argv, "--workers", "MURRE_WORKERS", config.workers);
      env_over_config(argc, argv, "--embed-model", "MURRE_EMBED_MODEL", config.embedder.model);
      env_over_config(argc, argv, "--embed-dim", "MURRE_EMBED_DIM", config.embedder.dimension);
      env_over_config(argc, argv, "--query-prefix", "MURRE_QUERY_PREFIX",
                      config.embedder.query_prefix);
      env_over_config(argc, argv, "--doc-prefix", "MURRE_DOC_PREFIX", config.embedder.doc_prefix);
      env_over_config(argc, argv, "--llm-model", "MURRE_LLM_MODEL", config.remover.model);
      env_over_config(argc, argv, "--timeout", "MURRE_TIMEOUT", config.remover.timeout_sec);
      env_over_config(argc, argv, "--prompt-template", "MURRE_PROMPT_TEMPLATE",
                      config.remover.prompt_template_path);
      env_over_config(argc, argv, "--shots", "MURRE_SHOTS", config.remover.shots_path);
      env_over_config(argc, argv, "--shot-count", "MURRE_SHOT_COUNT", config.remover.shot_count);

      config.embedder.backend = parse_embedder_choice(embedder_choice, config.embedder.endpoint);
      config.remover.backend = parse_remover_choice(remover_choice, config.remover.endpoint);
      apply_ablation(ablation, config.params, config.remover);
      if (const char* key = std::getenv(api_key_env.c_str())) {
        config.embedder.api_key = key;
        config.remover.api_key = key;
      }
      config.embedder.timeout_sec = config.remover.timeout_sec;

      ExperimentResult result = run_experiment(config, &std::cerr);
      if (result.labeled) {
        std::cout << format_report(result.report);
      } else {
        std::cout << "questions: " << result.records.size()
                  << " (unlabeled; metrics skipped)\n";
      }
      const long long budget = call_budget(config.params,
                                           static_cast<long long>(result.records.size()),
                                           BudgetMethod::kMurre);
      std::cout << "call budget: " << budget << "\n";
      if (result.remover_stats.output_lines > 0) {
        std::cout << "removal parse coverage: " << result.remover_stats.parsed_lines << "/"
                  << result.remover_stats.output_lines << " lines\n";
      }
      if (!config.out_path.empty()) {
        std::cout << "results written to " << config.out_path.string() << "\n";
      }
      if (result.incident_count > 0) {
        std::cerr << result.incident_count << " backend incident(s)\n";
        if (config.strict) return 1;
      }
      return 0;
    }

    if (*eval_cmd) {
      std::vector<RunRecord> records = load_results_file(results_path);
      std::size_t max_hop = eval_max_hop;
      if (max_hop == 0) {
        for (const RunRecord& r : records) max_hop = std::max(max_hop, r.hops);
        if (max_hop == 0) max_hop = 1;
      }
      std::cout << format_report(aggregate_metrics(records, eval_ks, eval_breakdown_k, max_hop));
      return 0;
    }

    if (*stats_cmd) {
      Corpus corpus = load_schema_file(stats_schema);
      auto questions = load_question_file(stats_questions);
      std::cout << "tables: " << corpus.size() << "\n";
      std::cout << "gold-table distribution: " << histogram_line(corpus_stats(corpus, questions))
                << "\n";
      return 0;
    }

    if (*budget_cmd) {
      env_over_config(argc, argv, "--beam-size", "MURRE_BEAM_SIZE", budget_params.beam_size);
      env_over_config(argc, argv, "--max-hop", "MURRE_MAX_HOP", budget_params.max_hop);
      BudgetMethod method;
      if (budget_method == "murre") {
        method = BudgetMethod::kMurre;
      } else if (budget_method == "crush") {
        method = BudgetMethod::kCrush;
      } else if (budget_method == "single-hop") {
        method = BudgetMethod::kSingleHop;
      } else {
        throw InputError("--method must be murre, crush, or single-hop");
      }
      std::cout << call_budget(budget_params, budget_n, method) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
