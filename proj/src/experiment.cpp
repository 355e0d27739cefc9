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

#include "murre/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "http_client.hpp"
#include "json.hpp"
#include "murre/errors.hpp"
#include "murre/scoring.hpp"

namespace murre {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string ref_string(const TableRef& ref) { return ref.db_name + "." + ref.table_name; }

ordered_json trace_to_json(const std::vector<TraceHop>& trace) {
  ordered_json hops = ordered_json::array();
  for (const TraceHop& hop : trace) {
    ordered_json beams = ordered_json::array();
    for (const TraceBeam& beam : hop.beams) {
      ordered_json b;
      b["beam"] = beam.beam;
      b["query"] = beam.query_text;
      b["stopped"] = beam.stopped;
      if (beam.early_stop_ignored) b["early_stop_ignored"] = true;
      if (!beam.incident.empty()) b["incident"] = beam.incident;
      ordered_json top = ordered_json::array();
      for (const TraceCandidate& c : beam.top) {
        top.push_back({{"db", c.ref.db_name}, {"table", c.ref.table_name}, {"p", c.probability}});
      }
      b["top"] = std::move(top);
      beams.push_back(std::move(b));
    }
    hops.push_back(ordered_json{{"hop", hop.hop}, {"beams", std::move(beams)}});
  }
  return hops;
}

std::vector<TraceHop> trace_from_json(const ordered_json& hops) {
  std::vector<TraceHop> trace;
  for (const ordered_json& h : hops) {
    TraceHop hop;
    hop.hop = h.at("hop").get<std::size_t>();
    for (const ordered_json& b : h.at("beams")) {
      TraceBeam beam;
      beam.beam = b.at("beam").get<std::size_t>();
      beam.query_text = b.at("query").get<std::string>();
      beam.stopped = b.at("stopped").get<bool>();
      beam.early_stop_ignored = b.value("early_stop_ignored", false);
      beam.incident = b.value("incident", std::string{});
      for (const ordered_json& c : b.at("top")) {
        beam.top.push_back({{c.at("db").get<std::string>(), c.at("table").get<std::string>()},
                            c.at("p").get<double>()});
      }
      hop.beams.push_back(std::move(beam));
    }
    trace.push_back(std::move(hop));
  }
  return trace;
}

}  // namespace

std::string record_to_jsonl(const RunRecord& record) {
  ordered_json obj;
  obj["id"] = record.id;
  ordered_json ranked = ordered_json::array();
  for (const RankedRef& r : record.ranked) {
    ranked.push_back(
        {{"db", r.ref.db_name}, {"table", r.ref.table_name}, {"score", r.score}});
  }
  obj["ranked"] = std::move(ranked);
  ordered_json gold = ordered_json::array();
  for (const TableRef& ref : record.gold) gold.push_back(ref_string(ref));
  obj["gold"] = std::move(gold);
  obj["hops"] = record.hops;
  obj["stopped_at"] = record.stopped_at_hop;
  obj["calls"] = {{"retrievals", record.calls.retrievals}, {"removals", record.calls.removals}};
  obj["trace"] = trace_to_json(record.trace);
  return obj.dump();
}

RunRecord record_from_jsonl(const std::string& line) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("results line is not JSON: ") + e.what());
  }
  RunRecord record;
  record.id = obj.at("id").get<std::string>();
  for (const ordered_json& r : obj.at("ranked")) {
    record.ranked.push_back(
        {{r.at("db").get<std::string>(), r.at("table").get<std::string>()},
         r.at("score").get<double>()});
  }
  for (const ordered_json& g : obj.at("gold")) {
    record.gold.push_back(parse_table_ref(g.get<std::string>()));
  }
  record.hops = obj.at("hops").get<std::size_t>();
  record.stopped_at_hop = obj.at("stopped_at").get<std::size_t>();
  record.calls.retrievals = obj.at("calls").at("retrievals").get<long>();
  record.calls.removals = obj.at("calls").at("removals").get<long>();
  record.trace = trace_from_json(obj.at("trace"));
  return record;
}

void write_results_file(const std::filesystem::path& path,
                        const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open results file for writing: " + path.string());
  for (const RunRecord& record : records) {
    out << record_to_jsonl(record) << '\n';
  }
  if (!out) throw InputError("failed writing results file: " + path.string());
}

std::vector<RunRecord> load_results_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open results file: " + path.string());
  std::vector<RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_jsonl(line));
  }
  return records;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  const Corpus corpus = load_schema_file(config.schema_path);
  const std::vector<QuestionRecord> questions = load_question_file(config.questions_path);
  if (corpus.empty()) throw InputError("schema file holds no tables");

  // Fail on unreachable backends before any question runs.
  if (config.embedder.backend == EmbedderBackend::kHttp) {
    http::probe_reachable(config.embedder.endpoint, config.embedder.timeout_sec);
  }
  if (config.remover.backend == RemoverBackend::kLlm ||
      config.remover.backend == RemoverBackend::kNaturalLanguage) {
    http::probe_reachable(config.remover.endpoint, config.remover.timeout_sec);
  }

  Embedder embedder(config.embedder);
  embedder.precompute_tables(corpus);
  Remover remover(config.remover, &corpus);

  ExperimentResult result;
  result.records.resize(questions.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> incidents{0};
  std::mutex log_mutex;

  auto run_one = [&](std::size_t i) {
    const QuestionRecord& q = questions[i];
    RunRecord record;
    record.id = q.id;
    record.gold = q.gold_tables;
    const auto started = std::chrono::steady_clock::now();
    try {
      RunOutput out = run(q, corpus, remover, embedder, config.params);
      record.ranked = to_ranked_refs(
          select_top_n(score_tables(out.paths), corpus, config.params.top_n));
      record.hops = out.hops_executed;
      record.stopped_at_hop = out.stopped_at_hop;
      record.calls = out.calls;
      record.trace = resolve_trace(out.trace, corpus);
      if (!out.incidents.empty()) {
        incidents.fetch_add(out.incidents.size());
        if (log != nullptr) {
          std::lock_guard lock(log_mutex);
          for (const std::string& incident : out.incidents) *log << "warning: " << incident << "\n";
        }
      }
    } catch (const Error& e) {
      // Keep the question with whatever partial result exists; excluding
      // failures would silently inflate the metrics.
      incidents.fetch_add(1);
      if (log != nullptr) {
        std::lock_guard lock(log_mutex);
        *log << "error: question " << q.id << ": " << e.what() << "\n";
      }
    }
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    result.records[i] = std::move(record);
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config.workers, questions.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < questions.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= questions.size()) break;
          run_one(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  result.incident_count = incidents.load();
  result.remover_stats = remover.stats();
  result.embedder_backend_calls = embedder.backend_calls();
  result.labeled = std::all_of(result.records.begin(), result.records.end(),
                               [](const RunRecord& r) { return !r.gold.empty(); });
  if (result.labeled && !result.records.empty()) {
    result.report = aggregate_metrics(result.records, config.ks, config.breakdown_k,
                                      config.params.max_hop);
  }

  if (!config.out_path.empty()) {
    write_results_file(config.out_path, result.records);
  }
  return result;
}

}  // namespace murre
