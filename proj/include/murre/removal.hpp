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

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "murre/schema.hpp"

namespace murre {

// The literal completion that declares the retrieved tables sufficient.
inline constexpr std::string_view kEarlyStopToken = "None";

// Completion labels for the two prompt styles.
inline constexpr std::string_view kTabulatedLabel = "Completing Tables:";
inline constexpr std::string_view kNaturalLanguageLabel = "Rewritten Question:";

struct FewShotExample {
  std::string question;
  std::vector<std::string> context_tables;     // serialize_table form
  std::vector<std::string> completion_tables;  // empty when early_stop
  bool early_stop = false;
};

enum class RemovalKind { kRewritten, kEarlyStop };

struct RemovalResult {
  RemovalKind kind = RemovalKind::kRewritten;
  std::string query_text;                  // non-empty iff kind == kRewritten
  std::vector<TableSchema> parsed_tables;  // the lines of query_text that parse
  bool served_from_cache = false;
};

enum class RemoverBackend { kLlm, kOracle, kSplice, kNaturalLanguage };

struct RemoverSpec {
  RemoverBackend backend = RemoverBackend::kOracle;

  // llm / natural-language backends.
  std::string endpoint;  // full chat-completions URL
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
  std::string api_key;
  int timeout_sec = 60;

  // Prompt sources. Empty paths fall back to the built-in header and the
  // published demonstrations; files under prompts/ ship the full sets.
  std::string prompt_template_path;  // plain text with {{shots}} and {{live}}
  std::string shots_path;            // demonstration blocks, blank-line separated
  std::size_t shot_count = 9;

  int max_attempts = 3;
  int backoff_ms = 250;  // doubles after each failed attempt

  std::string identity() const;
};

// Renders one prompt: template text with {{shots}} and {{live}} replaced.
// Shots and the live block use the "Question: / Database: / <label>"
// layout; the live block ends at the bare label with no completion.
std::string render_removal_prompt(std::string_view template_text, std::string_view label,
                                  const std::string& question,
                                  const std::vector<TableSchema>& retrieved,
                                  const std::vector<FewShotExample>& shots);

// Same with the built-in tabulated template and label.
std::string build_removal_prompt(const std::string& question,
                                 const std::vector<TableSchema>& retrieved,
                                 const std::vector<FewShotExample>& shots);

// Interprets a remover completion: truncates at the first runaway
// "Question:" line, trims, maps the early-stop token to kEarlyStop, and
// otherwise collects the lines that parse as table strings. Throws
// ParseError on empty/whitespace-only output.
RemovalResult parse_removal_output(const std::string& raw);

// Parses demonstration blocks in the prompt layout (blank-line separated).
std::vector<FewShotExample> parse_shots_text(const std::string& text, std::string_view label);
std::vector<FewShotExample> load_shots_file(const std::filesystem::path& path,
                                            std::string_view label);

// Deterministic stand-in for the LLM: rewrites the question as the
// serialized gold tables not yet retrieved (in corpus order), or stops
// early when none remain. Throws InputError when the question carries no
// gold labels.
RemovalResult oracle_remove(const QuestionRecord& question,
                            const std::vector<TableSchema>& retrieved, const Corpus& corpus);

struct RemoverStats {
  long backend_calls = 0;  // actual removals computed (cache misses)
  long cache_hits = 0;
  long output_lines = 0;  // rewritten-query lines seen
  long parsed_lines = 0;  // of those, lines that parsed as table strings
};

// Removal front end: builds prompts, calls the configured backend with
// bounded retries, parses the output, and caches results keyed by
// (backend identity, question id, retrieved-table multiset). Safe for
// concurrent use.
class Remover {
 public:
  // corpus is used by the oracle backend for resolving and ordering gold
  // tables; it must outlive the Remover.
  Remover(RemoverSpec spec, const Corpus* corpus);

  Remover(const Remover&) = delete;
  Remover& operator=(const Remover&) = delete;

  const RemoverSpec& spec() const { return spec_; }

  // Throws BackendError after max_attempts transport failures and
  // ParseError on degenerate output; callers stop the beam on either.
  RemovalResult remove(const QuestionRecord& question,
                       const std::vector<TableSchema>& retrieved);

  RemoverStats stats() const;

 private:
  RemovalResult compute(const QuestionRecord& question,
                        const std::vector<TableSchema>& retrieved);
  std::string call_chat_backend(const std::string& prompt);
  const std::vector<FewShotExample>& shots();
  const std::string& template_text();

  RemoverSpec spec_;
  const Corpus* corpus_;

  std::once_flag prompt_once_;
  std::vector<FewShotExample> shots_;
  std::string template_text_;

  mutable std::shared_mutex cache_mutex_;
  std::unordered_map<std::string, RemovalResult> cache_;

  std::atomic<long> backend_calls_{0};
  std::atomic<long> cache_hits_{0};
  std::atomic<long> output_lines_{0};
  std::atomic<long> parsed_lines_{0};
};

}  // namespace murre
