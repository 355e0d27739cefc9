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

#include "murre/removal.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "http_client.hpp"
#include "murre/errors.hpp"

namespace murre {

namespace {

constexpr std::string_view kTabulatedTemplate =
    "Given the following SQL tables, your job is to complete the possible left SQL tables "
    "given a user's request.\n"
    "Return None if no left SQL tables according to the user's request.\n"
    "\n"
    "{{shots}}\n"
    "\n"
    "{{live}}";

constexpr std::string_view kNaturalLanguageTemplate =
    "Remove information appearing in the database from the question.\n"
    "Return None if the database is totally correspond to the question.\n"
    "\n"
    "{{shots}}\n"
    "\n"
    "{{live}}";

// The two published tabulated demonstrations; prompts/ ships the full sets.
const std::vector<FewShotExample>& default_tabulated_shots() {
  static const std::vector<FewShotExample> shots = {
      {"Which models are lighter than 3500 but not built by the 'Ford Motor Company'?",
       {"car_1.model list(model id, maker, model)",
        "car_1.cars data(id, mpg, cylinders, edispl, horsepower, weight, accelerate, year)",
        "car_1.car names(make id, model, make)"},
       {"car_1.car makers(maker)"},
       false},
      {"Which employee received the biggest bonus? Give me the employee name.",
       {"employee_hire_evaluation.evaluation(employee id, year awarded, bonus)",
        "employee_hire_evaluation.employee(employee id, name, age, city)"},
       {},
       true},
  };
  return shots;
}

const std::vector<FewShotExample>& default_natural_language_shots() {
  static const std::vector<FewShotExample> shots = {
      {"Which models are lighter than 3500 but not built by the 'Ford Motor Company'?",
       {"car_1.model list(model id, maker, model)",
        "car_1.cars data(id, mpg, cylinders, edispl, horsepower, weight, accelerate, year)",
        "car_1.car names(make id, model, make)"},
       {"What is the car makers of the 'Ford Motor Company'?"},
       false},
      {"Which employee received the biggest bonus? Give me the employee name.",
       {"employee_hire_evaluation.evaluation(employee id, year awarded, bonus)",
        "employee_hire_evaluation.employee(employee id, name, age, city)"},
       {},
       true},
  };
  return shots;
}

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

void replace_placeholder(std::string& text, std::string_view placeholder,
                         const std::string& value) {
  const std::size_t pos = text.find(placeholder);
  if (pos == std::string::npos) {
    throw ParseError("prompt template is missing the " + std::string(placeholder) +
                     " placeholder");
  }
  text.replace(pos, placeholder.size(), value);
}

std::string render_block(std::string_view label, const std::string& question,
                         const std::vector<std::string>& table_lines,
                         const std::string* completion) {
  std::string out = "Question: " + question + "\nDatabase: ";
  for (std::size_t i = 0; i < table_lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += table_lines[i];
  }
  out += '\n';
  out += label;
  if (completion != nullptr) {
    out += ' ';
    out += *completion;
  }
  return out;
}

}  // namespace

std::string render_removal_prompt(std::string_view template_text, std::string_view label,
                                  const std::string& question,
                                  const std::vector<TableSchema>& retrieved,
                                  const std::vector<FewShotExample>& shots) {
  if (retrieved.empty()) throw InputError("removal prompt: no retrieved tables");
  if (shots.empty()) throw InputError("removal prompt: no few-shot examples");

  std::string shots_text;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const FewShotExample& shot = shots[i];
    std::string completion;
    if (shot.early_stop) {
      completion = std::string(kEarlyStopToken);
    } else {
      for (std::size_t j = 0; j < shot.completion_tables.size(); ++j) {
        if (j > 0) completion += '\n';
        completion += shot.completion_tables[j];
      }
    }
    if (i > 0) shots_text += "\n\n";
    shots_text += render_block(label, shot.question, shot.context_tables, &completion);
  }

  std::vector<std::string> live_tables;
  live_tables.reserve(retrieved.size());
  for (const TableSchema& t : retrieved) live_tables.push_back(serialize_table(t));
  const std::string live = render_block(label, question, live_tables, nullptr);

  std::string prompt(template_text);
  replace_placeholder(prompt, "{{shots}}", shots_text);
  replace_placeholder(prompt, "{{live}}", live);
  return prompt;
}

std::string build_removal_prompt(const std::string& question,
                                 const std::vector<TableSchema>& retrieved,
                                 const std::vector<FewShotExample>& shots) {
  return render_removal_prompt(kTabulatedTemplate, kTabulatedLabel, question, retrieved, shots);
}

RemovalResult parse_removal_output(const std::string& raw) {
  // Drop runaway few-shot continuations: everything from the first line
  // that starts a new demonstration.
  std::string kept;
  for (const std::string& line : split_lines(raw)) {
    std::string_view probe = line;
    while (!probe.empty() && std::isspace(static_cast<unsigned char>(probe.front()))) {
      probe.remove_prefix(1);
    }
    if (probe.starts_with("Question:")) break;
    if (!kept.empty()) kept += '\n';
    kept += line;
  }
  const std::string trimmed = trim_copy(kept);
  if (trimmed.empty()) {
    throw ParseError("remover output is empty");
  }

  RemovalResult result;
  if (iequals(trimmed, kEarlyStopToken)) {
    result.kind = RemovalKind::kEarlyStop;
    return result;
  }
  result.kind = RemovalKind::kRewritten;
  result.query_text = trimmed;
  for (const std::string& line : split_lines(trimmed)) {
    if (auto t = parse_table_string(line)) result.parsed_tables.push_back(std::move(*t));
  }
  return result;
}

std::vector<FewShotExample> parse_shots_text(const std::string& text, std::string_view label) {
  std::vector<FewShotExample> shots;
  FewShotExample current;
  enum class Section { kNone, kDatabase, kCompletion } section = Section::kNone;

  auto flush = [&] {
    if (current.question.empty() && current.context_tables.empty()) return;
    if (current.question.empty() || current.context_tables.empty() ||
        (current.completion_tables.empty() && !current.early_stop)) {
      throw ParseError("few-shot block incomplete near question \"" + current.question + "\"");
    }
    shots.push_back(std::move(current));
    current = {};
    section = Section::kNone;
  };

  for (const std::string& raw_line : split_lines(text)) {
    const std::string line = trim_copy(raw_line);
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.starts_with("Question:")) {
      flush();
      current.question = trim_copy(line.substr(9));
      section = Section::kNone;
    } else if (line.starts_with("Database:")) {
      section = Section::kDatabase;
      const std::string first = trim_copy(line.substr(9));
      if (!first.empty()) current.context_tables.push_back(first);
    } else if (line.starts_with(label)) {
      section = Section::kCompletion;
      const std::string first = trim_copy(line.substr(label.size()));
      if (iequals(first, kEarlyStopToken)) {
        current.early_stop = true;
      } else if (!first.empty()) {
        current.completion_tables.push_back(first);
      }
    } else if (section == Section::kDatabase) {
      current.context_tables.push_back(line);
    } else if (section == Section::kCompletion) {
      current.completion_tables.push_back(line);
    } else {
      throw ParseError("unexpected line in few-shot file: \"" + line + "\"");
    }
  }
  flush();
  return shots;
}

std::vector<FewShotExample> load_shots_file(const std::filesystem::path& path,
                                            std::string_view label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open shots file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::vector<FewShotExample> shots = parse_shots_text(buffer.str(), label);
  if (shots.empty()) throw ParseError("shots file " + path.string() + " holds no demonstrations");
  return shots;
}

RemovalResult oracle_remove(const QuestionRecord& question,
                            const std::vector<TableSchema>& retrieved, const Corpus& corpus) {
  if (question.gold_tables.empty()) {
    throw InputError("oracle remover needs gold labels (question " + question.id + ")");
  }
  std::set<TableRef> seen;
  for (const TableSchema& t : retrieved) seen.insert(ref_of(t));

  std::vector<std::size_t> missing;
  for (const TableRef& ref : question.gold_tables) {
    auto idx = corpus.find(ref);
    if (!idx) {
      throw IntegrityError("question " + question.id + ": gold table " + ref.db_name + "." +
                           ref.table_name + " not in corpus");
    }
    if (!seen.contains(ref)) missing.push_back(*idx);
  }
  std::sort(missing.begin(), missing.end());

  RemovalResult result;
  if (missing.empty()) {
    result.kind = RemovalKind::kEarlyStop;
    return result;
  }
  result.kind = RemovalKind::kRewritten;
  for (std::size_t i = 0; i < missing.size(); ++i) {
    const TableSchema& t = corpus.at(missing[i]);
    if (i > 0) result.query_text += '\n';
    result.query_text += serialize_table(t);
    result.parsed_tables.push_back(t);
  }
  return result;
}

std::string RemoverSpec::identity() const {
  std::string kind;
  switch (backend) {
    case RemoverBackend::kLlm: kind = "llm"; break;
    case RemoverBackend::kOracle: kind = "oracle"; break;
    case RemoverBackend::kSplice: kind = "splice"; break;
    case RemoverBackend::kNaturalLanguage: kind = "natural-language"; break;
  }
  return kind + "/" + endpoint + "/" + model + "/" + prompt_template_path + "/" + shots_path +
         "/" + std::to_string(shot_count);
}

Remover::Remover(RemoverSpec spec, const Corpus* corpus)
    : spec_(std::move(spec)), corpus_(corpus) {
  if (spec_.backend == RemoverBackend::kOracle && corpus_ == nullptr) {
    throw InputError("oracle remover requires a corpus");
  }
  if ((spec_.backend == RemoverBackend::kLlm ||
       spec_.backend == RemoverBackend::kNaturalLanguage)) {
    if (spec_.endpoint.empty()) throw InputError("llm remover requires an endpoint URL");
    if (spec_.shot_count < 1) throw InputError("llm remover requires shot count >= 1");
    template_text();  // unreadable prompt files fail here, not mid-run
  }
}

const std::string& Remover::template_text() {
  std::call_once(prompt_once_, [this] {
    const bool natural = spec_.backend == RemoverBackend::kNaturalLanguage;
    const std::string_view label = natural ? kNaturalLanguageLabel : kTabulatedLabel;
    if (spec_.prompt_template_path.empty()) {
      template_text_ = std::string(natural ? kNaturalLanguageTemplate : kTabulatedTemplate);
    } else {
      std::ifstream in(spec_.prompt_template_path, std::ios::binary);
      if (!in) throw InputError("cannot open prompt template: " + spec_.prompt_template_path);
      std::stringstream buffer;
      buffer << in.rdbuf();
      template_text_ = buffer.str();
    }
    if (spec_.shots_path.empty()) {
      shots_ = natural ? default_natural_language_shots() : default_tabulated_shots();
    } else {
      shots_ = load_shots_file(spec_.shots_path, label);
    }
    if (shots_.size() > spec_.shot_count) shots_.resize(spec_.shot_count);
  });
  return template_text_;
}

const std::vector<FewShotExample>& Remover::shots() {
  template_text();  // loads both under the same once-flag
  return shots_;
}

std::string Remover::call_chat_backend(const std::string& prompt) {
  nlohmann::json body = {
      {"model", spec_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", spec_.temperature},
      {"max_tokens", spec_.max_tokens},
      {"stop", nlohmann::json::array({"\nQuestion:"})},
  };

  int attempt = 0;
  while (true) {
    try {
      nlohmann::json reply =
          http::post_json(spec_.endpoint, spec_.api_key, spec_.timeout_sec, body);
      if (!reply.contains("choices") || reply.at("choices").empty()) {
        throw BackendError("remover " + spec_.endpoint + ": response has no choices");
      }
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const BackendError&) {
      ++attempt;
      if (attempt >= spec_.max_attempts) throw;
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long>(spec_.backoff_ms) << (attempt - 1)));
    } catch (const nlohmann::json::exception& e) {
      throw BackendError("remover " + spec_.endpoint + ": malformed response (" + e.what() + ")");
    }
  }
}

RemovalResult Remover::compute(const QuestionRecord& question,
                               const std::vector<TableSchema>& retrieved) {
  switch (spec_.backend) {
    case RemoverBackend::kOracle:
      return oracle_remove(question, retrieved, *corpus_);
    case RemoverBackend::kSplice: {
      RemovalResult result;
      result.kind = RemovalKind::kRewritten;
      result.query_text = question.text;
      for (const TableSchema& t : retrieved) {
        result.query_text += "; ";
        result.query_text += serialize_table(t);
      }
      for (const std::string& line : split_lines(result.query_text)) {
        if (auto t = parse_table_string(line)) result.parsed_tables.push_back(std::move(*t));
      }
      return result;
    }
    case RemoverBackend::kLlm:
    case RemoverBackend::kNaturalLanguage: {
      const std::string_view label = spec_.backend == RemoverBackend::kNaturalLanguage
                                         ? kNaturalLanguageLabel
                                         : kTabulatedLabel;
      const std::string prompt =
          render_removal_prompt(template_text(), label, question.text, retrieved, shots());
      return parse_removal_output(call_chat_backend(prompt));
    }
  }
  throw InputError("unknown remover backend");
}

RemovalResult Remover::remove(const QuestionRecord& question,
                              const std::vector<TableSchema>& retrieved) {
  if (retrieved.empty()) throw InputError("remove: no retrieved tables");

  std::vector<std::string> sorted;
  sorted.reserve(retrieved.size());
  for (const TableSchema& t : retrieved) sorted.push_back(serialize_table(t));
  std::sort(sorted.begin(), sorted.end());
  std::string key = spec_.identity() + "\x1f" + question.id;
  for (const std::string& s : sorted) {
    key += '\x1e';
    key += s;
  }

  {
    std::shared_lock lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      cache_hits_.fetch_add(1);
      RemovalResult hit = it->second;
      hit.served_from_cache = true;
      return hit;
    }
  }

  RemovalResult result = compute(question, retrieved);
  backend_calls_.fetch_add(1);
  if (result.kind == RemovalKind::kRewritten) {
    output_lines_.fetch_add(static_cast<long>(split_lines(result.query_text).size()));
    parsed_lines_.fetch_add(static_cast<long>(result.parsed_tables.size()));
  }

  std::unique_lock lock(cache_mutex_);
  cache_.emplace(key, result);
  return result;
}

RemoverStats Remover::stats() const {
  return {backend_calls_.load(), cache_hits_.load(), output_lines_.load(), parsed_lines_.load()};
}

}  // namespace murre
